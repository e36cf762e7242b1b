#pragma once

#include <Eigen/Dense>

namespace lqrm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Execution policy for the data-parallel kernels. Serial variants compute
// exactly the same values (identical reduction order) and are kept as the
// reference implementation for tests and benchmarks.
enum class ExecPolicy { serial, parallel };

// Kronecker product A (x) B, block (i,j) = A(i,j) * B.
Matrix kronecker(const Matrix& A, const Matrix& B, ExecPolicy policy = ExecPolicy::parallel);

// Accumulates sum_k w_k * (S_k (x) S_k) into an n^2 x n^2 matrix.
Matrix kronecker_square_sum(const std::vector<std::pair<double, Matrix>>& terms,
                            ExecPolicy policy = ExecPolicy::parallel);

}  // namespace lqrm

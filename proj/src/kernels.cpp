#include "lqrm/kernels.hpp"

#include <stdexcept>

namespace lqrm {

Matrix kronecker(const Matrix& A, const Matrix& B, ExecPolicy policy) {
  const Eigen::Index ar = A.rows(), ac = A.cols(), br = B.rows(), bc = B.cols();
  Matrix out(ar * br, ac * bc);
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (Eigen::Index i = 0; i < ar; ++i)
      for (Eigen::Index j = 0; j < ac; ++j) out.block(i * br, j * bc, br, bc) = A(i, j) * B;
  } else {
    for (Eigen::Index i = 0; i < ar; ++i)
      for (Eigen::Index j = 0; j < ac; ++j) out.block(i * br, j * bc, br, bc) = A(i, j) * B;
  }
  return out;
}

Matrix kronecker_square_sum(const std::vector<std::pair<double, Matrix>>& terms,
                            ExecPolicy policy) {
  if (terms.empty()) throw std::invalid_argument("kronecker_square_sum: no terms");
  const Eigen::Index n = terms.front().second.rows();
  for (const auto& [w, S] : terms) {
    (void)w;
    if (S.rows() != n || S.cols() != n)
      throw std::invalid_argument("kronecker_square_sum: inconsistent dimensions");
  }
  Matrix out = Matrix::Zero(n * n, n * n);
  // Block (i,j) of sum_k w_k (S_k (x) S_k) is sum_k w_k S_k(i,j) S_k.
  if (policy == ExecPolicy::parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (const auto& [w, S] : terms) out.block(i * n, j * n, n, n) += (w * S(i, j)) * S;
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (const auto& [w, S] : terms) out.block(i * n, j * n, n, n) += (w * S(i, j)) * S;
  }
  return out;
}

}  // namespace lqrm

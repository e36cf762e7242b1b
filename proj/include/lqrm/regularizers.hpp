#pragma once

#include <stdexcept>
#include <string>

#include "lqrm/kernels.hpp"

namespace lqrm {

enum class RegularizerKind {
  L1,                   // sum_ij |K_ij|
  RowMax,               // sum_i ||row_i||_inf
  ColMax,               // sum_j ||col_j||_inf
  GroupLassoRow,        // sum_i ||row_i||_2
  GroupLassoCol,        // sum_j ||col_j||_2
  SparseGroupLassoRow,  // (1-mu) ||K||_1 + mu sum_i ||row_i||_2
  SparseGroupLassoCol,  // (1-mu) ||K||_1 + mu sum_j ||col_j||_2
};

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::L1;
  double mu = 0.5;        // sparse-group mixing weight, in [0,1]
  double huber_phi = 0.0; // 0 means the exact nonsmooth form
  double gamma = 0.0;     // weight of the penalty in the objective

  void validate() const;
};

class UnsupportedProxError : public std::runtime_error {
 public:
  explicit UnsupportedProxError(const std::string& what) : std::runtime_error(what) {}
};

// Canonical config names: "l1", "rowmax", "colmax", "glrow", "glcol", "sglrow", "sglcol".
std::string to_string(RegularizerKind kind);
RegularizerKind parse_regularizer_kind(const std::string& name);

// Penalty value, excluding the gamma factor. With huber_phi > 0 the Huber-smoothed
// form is evaluated (quadratic below the threshold, shifted linear above).
double reg_value(const Matrix& K, const RegularizerSpec& spec);

// A valid subgradient of the exact penalty (requires huber_phi = 0).
// Selections at nondifferentiable points: sgn(0) = 0, zero groups map to zero,
// row/col max ties resolved to the lowest index.
Matrix reg_subgradient(const Matrix& K, const RegularizerSpec& spec);

// Proximal map with effective weight tau: argmin_X g(X) + ||X - K||_F^2 / (2 tau)
// for g = the exact penalty. Soft thresholding for L1, block soft thresholding
// for group kinds, their composition for sparse-group kinds.
// RowMax/ColMax have no implemented closed form -> UnsupportedProxError.
Matrix reg_prox(const Matrix& K, const RegularizerSpec& spec, double tau);

// Gradient of the Huber-smoothed penalty (requires huber_phi > 0).
Matrix huber_gradient(const Matrix& K, const RegularizerSpec& spec);

}  // namespace lqrm

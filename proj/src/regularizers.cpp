#include "lqrm/regularizers.hpp"

#include <cmath>

namespace lqrm {

namespace {

double huber(double x, double phi) {
  const double a = std::abs(x);
  return a > phi ? a - 0.5 * phi : 0.5 * a * a / phi;
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Lowest index attaining the maximum absolute value of a vector segment.
Eigen::Index argmax_abs(const Eigen::Ref<const Vector>& v) {
  Eigen::Index best = 0;
  double best_val = std::abs(v(0));
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > best_val) {
      best_val = std::abs(v(i));
      best = i;
    }
  }
  return best;
}

bool is_row_kind(RegularizerKind kind) {
  return kind == RegularizerKind::RowMax || kind == RegularizerKind::GroupLassoRow ||
         kind == RegularizerKind::SparseGroupLassoRow;
}

double l1_value(const Matrix& K) { return K.cwiseAbs().sum(); }
double l1_huber_value(const Matrix& K, double phi) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j) total += huber(K(i, j), phi);
  return total;
}

// Sum over groups (rows or columns) of f(group).
template <typename F>
double group_sum(const Matrix& K, bool rows, F f) {
  double total = 0.0;
  if (rows)
    for (Eigen::Index i = 0; i < K.rows(); ++i) total += f(Vector(K.row(i).transpose()));
  else
    for (Eigen::Index j = 0; j < K.cols(); ++j) total += f(Vector(K.col(j)));
  return total;
}

Matrix l1_sub(const Matrix& K) { return K.unaryExpr([](double v) { return sgn(v); }); }

Matrix group_lasso_sub(const Matrix& K, bool rows) {
  Matrix out = Matrix::Zero(K.rows(), K.cols());
  if (rows) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double norm = K.row(i).norm();
      if (norm > 0.0) out.row(i) = K.row(i) / norm;
    }
  } else {
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const double norm = K.col(j).norm();
      if (norm > 0.0) out.col(j) = K.col(j) / norm;
    }
  }
  return out;
}

Matrix max_norm_sub(const Matrix& K, bool rows) {
  Matrix out = Matrix::Zero(K.rows(), K.cols());
  if (rows) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const Vector row = K.row(i).transpose();
      if (row.cwiseAbs().maxCoeff() == 0.0) continue;
      const Eigen::Index j = argmax_abs(row);
      out(i, j) = sgn(row(j));
    }
  } else {
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const Vector col = K.col(j);
      if (col.cwiseAbs().maxCoeff() == 0.0) continue;
      const Eigen::Index i = argmax_abs(col);
      out(i, j) = sgn(col(i));
    }
  }
  return out;
}

Matrix soft_threshold(const Matrix& K, double t) {
  return K.unaryExpr([t](double v) { return sgn(v) * std::max(std::abs(v) - t, 0.0); });
}

Matrix block_soft_threshold(const Matrix& K, bool rows, double t) {
  Matrix out = Matrix::Zero(K.rows(), K.cols());
  if (rows) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double norm = K.row(i).norm();
      if (norm > t) out.row(i) = (1.0 - t / norm) * K.row(i);
    }
  } else {
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const double norm = K.col(j).norm();
      if (norm > t) out.col(j) = (1.0 - t / norm) * K.col(j);
    }
  }
  return out;
}

Matrix l1_huber_grad(const Matrix& K, double phi) {
  return K.unaryExpr([phi](double v) { return v / std::max(std::abs(v), phi); });
}

Matrix group_lasso_huber_grad(const Matrix& K, bool rows, double phi) {
  Matrix out = Matrix::Zero(K.rows(), K.cols());
  if (rows) {
    for (Eigen::Index i = 0; i < K.rows(); ++i)
      out.row(i) = K.row(i) / std::max(K.row(i).norm(), phi);
  } else {
    for (Eigen::Index j = 0; j < K.cols(); ++j)
      out.col(j) = K.col(j) / std::max(K.col(j).norm(), phi);
  }
  return out;
}

// Smoothed max-norm gradient: the inf-norm subgradient selection, scaled by
// ||group||_inf / phi inside the quadratic region.
Matrix max_norm_huber_grad(const Matrix& K, bool rows, double phi) {
  Matrix out = max_norm_sub(K, rows);
  if (rows) {
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
      const double a = K.row(i).cwiseAbs().maxCoeff();
      if (a <= phi) out.row(i) *= a / phi;
    }
  } else {
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const double a = K.col(j).cwiseAbs().maxCoeff();
      if (a <= phi) out.col(j) *= a / phi;
    }
  }
  return out;
}

}  // namespace

void RegularizerSpec::validate() const {
  if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("regularizer: mu must be in [0,1]");
  if (huber_phi < 0.0) throw std::invalid_argument("regularizer: huber_phi must be >= 0");
  if (gamma < 0.0) throw std::invalid_argument("regularizer: gamma must be >= 0");
}

std::string to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::L1: return "l1";
    case RegularizerKind::RowMax: return "rowmax";
    case RegularizerKind::ColMax: return "colmax";
    case RegularizerKind::GroupLassoRow: return "glrow";
    case RegularizerKind::GroupLassoCol: return "glcol";
    case RegularizerKind::SparseGroupLassoRow: return "sglrow";
    case RegularizerKind::SparseGroupLassoCol: return "sglcol";
  }
  throw std::logic_error("unknown regularizer kind");
}

RegularizerKind parse_regularizer_kind(const std::string& name) {
  if (name == "l1") return RegularizerKind::L1;
  if (name == "rowmax") return RegularizerKind::RowMax;
  if (name == "colmax") return RegularizerKind::ColMax;
  if (name == "glrow") return RegularizerKind::GroupLassoRow;
  if (name == "glcol") return RegularizerKind::GroupLassoCol;
  if (name == "sglrow") return RegularizerKind::SparseGroupLassoRow;
  if (name == "sglcol") return RegularizerKind::SparseGroupLassoCol;
  throw std::invalid_argument("unknown regularizer kind: \"" + name + "\"");
}

double reg_value(const Matrix& K, const RegularizerSpec& spec) {
  spec.validate();
  const double phi = spec.huber_phi;
  const bool rows = is_row_kind(spec.kind);
  switch (spec.kind) {
    case RegularizerKind::L1:
      return phi > 0.0 ? l1_huber_value(K, phi) : l1_value(K);
    case RegularizerKind::RowMax:
    case RegularizerKind::ColMax:
      return group_sum(K, rows, [phi](const Vector& g) {
        const double a = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        return phi > 0.0 ? huber(a, phi) : a;
      });
    case RegularizerKind::GroupLassoRow:
    case RegularizerKind::GroupLassoCol:
      return group_sum(K, rows, [phi](const Vector& g) {
        return phi > 0.0 ? huber(g.norm(), phi) : g.norm();
      });
    case RegularizerKind::SparseGroupLassoRow:
    case RegularizerKind::SparseGroupLassoCol: {
      const double l1 = phi > 0.0 ? l1_huber_value(K, phi) : l1_value(K);
      const double gl = group_sum(K, rows, [phi](const Vector& g) {
        return phi > 0.0 ? huber(g.norm(), phi) : g.norm();
      });
      return (1.0 - spec.mu) * l1 + spec.mu * gl;
    }
  }
  throw std::logic_error("unknown regularizer kind");
}

Matrix reg_subgradient(const Matrix& K, const RegularizerSpec& spec) {
  spec.validate();
  if (spec.huber_phi != 0.0)
    throw std::invalid_argument("reg_subgradient: requires huber_phi = 0 (use huber_gradient)");
  const bool rows = is_row_kind(spec.kind);
  switch (spec.kind) {
    case RegularizerKind::L1: return l1_sub(K);
    case RegularizerKind::RowMax:
    case RegularizerKind::ColMax: return max_norm_sub(K, rows);
    case RegularizerKind::GroupLassoRow:
    case RegularizerKind::GroupLassoCol: return group_lasso_sub(K, rows);
    case RegularizerKind::SparseGroupLassoRow:
    case RegularizerKind::SparseGroupLassoCol:
      return (1.0 - spec.mu) * l1_sub(K) + spec.mu * group_lasso_sub(K, rows);
  }
  throw std::logic_error("unknown regularizer kind");
}

Matrix reg_prox(const Matrix& K, const RegularizerSpec& spec, double tau) {
  spec.validate();
  if (spec.huber_phi != 0.0)
    throw std::invalid_argument("reg_prox: requires huber_phi = 0");
  if (tau < 0.0) throw std::invalid_argument("reg_prox: tau must be >= 0");
  const bool rows = is_row_kind(spec.kind);
  switch (spec.kind) {
    case RegularizerKind::L1: return soft_threshold(K, tau);
    case RegularizerKind::RowMax:
    case RegularizerKind::ColMax:
      throw UnsupportedProxError("reg_prox: no closed form for the max-norm penalties");
    case RegularizerKind::GroupLassoRow:
    case RegularizerKind::GroupLassoCol: return block_soft_threshold(K, rows, tau);
    case RegularizerKind::SparseGroupLassoRow:
    case RegularizerKind::SparseGroupLassoCol:
      return block_soft_threshold(soft_threshold(K, (1.0 - spec.mu) * tau), rows, spec.mu * tau);
  }
  throw std::logic_error("unknown regularizer kind");
}

Matrix huber_gradient(const Matrix& K, const RegularizerSpec& spec) {
  spec.validate();
  if (spec.huber_phi <= 0.0)
    throw std::invalid_argument("huber_gradient: requires huber_phi > 0");
  const double phi = spec.huber_phi;
  const bool rows = is_row_kind(spec.kind);
  switch (spec.kind) {
    case RegularizerKind::L1: return l1_huber_grad(K, phi);
    case RegularizerKind::RowMax:
    case RegularizerKind::ColMax: return max_norm_huber_grad(K, rows, phi);
    case RegularizerKind::GroupLassoRow:
    case RegularizerKind::GroupLassoCol: return group_lasso_huber_grad(K, rows, phi);
    case RegularizerKind::SparseGroupLassoRow:
    case RegularizerKind::SparseGroupLassoCol:
      return (1.0 - spec.mu) * l1_huber_grad(K, phi) +
             spec.mu * group_lasso_huber_grad(K, rows, phi);
  }
  throw std::logic_error("unknown regularizer kind");
}

}  // namespace lqrm

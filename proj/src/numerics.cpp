#include "fairlin/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace fairlin {

namespace {

// Pivots below this fraction of the largest diagonal entry are treated as a
// failed factorization.
constexpr double kRelativePivotFloor = 1e-13;

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool factor_ok(const Eigen::LLT<Matrix>& llt, const Matrix& m) {
  if (llt.info() != Eigen::Success) return false;
  const Matrix l = llt.matrixL();
  const double scale = std::max(m.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < l.rows(); ++i) {
    const double piv = l(i, i);
    if (!(piv > 0.0) || piv * piv < kRelativePivotFloor * scale) return false;
  }
  return true;
}

}  // namespace

SymMatrix::SymMatrix(int dim) : m_(Matrix::Zero(dim, dim)) {
  if (dim <= 0) throw DimensionMismatch("SymMatrix: dimension must be positive");
}

SymMatrix::SymMatrix(const Matrix& m) : m_(m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimensionMismatch("SymMatrix: matrix must be square and nonempty");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) throw DimensionMismatch("SymMatrix: matrix is not symmetric");
}

SymMatrix SymMatrix::identity(int dim, double scale) {
  SymMatrix out(dim);
  out.m_.diagonal().setConstant(scale);
  return out;
}

SymMatrix SymMatrix::diagonal(const Vector& diag) {
  SymMatrix out(static_cast<int>(diag.size()));
  out.m_.diagonal() = diag;
  return out;
}

void SymMatrix::add_outer(const Vector& x, double w) {
  if (x.size() != m_.rows()) throw DimensionMismatch("rank-1 update: vector dimension mismatch");
  if (!(w >= 0.0)) throw std::invalid_argument("rank-1 update: weight must be nonnegative");
  const int d = dim();
  for (int i = 0; i < d; ++i) {
    const double wx = w * x[i];
    for (int j = i; j < d; ++j) {
      const double v = m_(i, j) + wx * x[j];
      m_(i, j) = v;
      m_(j, i) = v;
    }
  }
}

void SymMatrix::add_identity(double a) { m_.diagonal().array() += a; }

SymMatrix rank1_update(const SymMatrix& v, const Vector& x, double w) {
  SymMatrix out = v;
  out.add_outer(x, w);
  return out;
}

double default_jitter(const SymMatrix& v) { return 1e-10 * v.trace() / v.dim() + 1e-12; }

SpdFactor::SpdFactor(const SymMatrix& v, bool allow_jitter) : dim_(v.dim()) {
  if (!all_finite(v.matrix())) throw NonFiniteInput("SPD factorization: non-finite matrix entry");
  llt_.compute(v.matrix());
  if (factor_ok(llt_, v.matrix())) return;
  if (!allow_jitter) throw NonPositiveDefinite("matrix is not positive definite");
  jitter_ = std::max(default_jitter(v), 1e-12);
  Matrix shifted = v.matrix();
  shifted.diagonal().array() += jitter_;
  llt_.compute(shifted);
  if (llt_.info() != Eigen::Success)
    throw NonPositiveDefinite("matrix is not positive definite even after jitter");
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != dim_) throw DimensionMismatch("solve: right-hand side dimension mismatch");
  return llt_.solve(b);
}

double SpdFactor::inverse_quadratic(const Vector& x) const {
  if (x.size() != dim_) throw DimensionMismatch("quadratic form: vector dimension mismatch");
  const Vector y = llt_.matrixL().solve(x);
  return y.squaredNorm();
}

Vector SpdFactor::inverse_quadratic_columns(const Matrix& xs) const {
  if (xs.rows() != dim_) throw DimensionMismatch("quadratic form: row dimension mismatch");
  const Matrix y = llt_.matrixL().solve(xs);
  return y.colwise().squaredNorm().transpose();
}

double SpdFactor::logdet() const {
  const auto& l = llt_.matrixLLT();
  double acc = 0.0;
  for (int i = 0; i < dim_; ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

SpdSolution solve_spd(const SymMatrix& v, const Vector& b) {
  if (!b.allFinite()) throw NonFiniteInput("solve_spd: non-finite right-hand side");
  const SpdFactor f(v, true);
  return {f.solve(b), f.jitter()};
}

double mahalanobis_sq(const SymMatrix& v, const Vector& x, bool allow_jitter) {
  if (x.size() != v.dim()) throw DimensionMismatch("mahalanobis_sq: dimension mismatch");
  if (x.isZero(0.0)) return 0.0;
  return SpdFactor(v, allow_jitter).inverse_quadratic(x);
}

double logdet(const SymMatrix& v) { return SpdFactor(v, false).logdet(); }

}  // namespace fairlin

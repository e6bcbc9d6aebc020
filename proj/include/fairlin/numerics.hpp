// Small dense symmetric linear algebra: rank-1 updates, SPD solves,
// Mahalanobis norms and log-determinants.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace fairlin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Symmetric d x d matrix. Every mutation writes (i, j) and (j, i) from the
/// same computed value, so symmetry holds bit-exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);
  /// Throws DimensionMismatch if `m` is not square or not exactly symmetric.
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int dim, double scale = 1.0);
  static SymMatrix diagonal(const Vector& diag);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace(); }

  /// V += w * x x^T.
  void add_outer(const Vector& x, double w = 1.0);
  /// V += a * I.
  void add_identity(double a);

  bool operator==(const SymMatrix& other) const { return m_ == other.m_; }

 private:
  Matrix m_;
};

/// Returns V + w x x^T.
SymMatrix rank1_update(const SymMatrix& v, const Vector& x, double w);

/// Cholesky factor of V, retried once with a diagonal jitter when the plain
/// factorization fails.
class SpdFactor {
 public:
  /// With allow_jitter == false a failed factorization throws
  /// NonPositiveDefinite.
  explicit SpdFactor(const SymMatrix& v, bool allow_jitter = true);

  int dim() const { return dim_; }
  /// Jitter added to the diagonal; 0 when V factored as given.
  double jitter() const { return jitter_; }

  Vector solve(const Vector& b) const;
  /// x^T V^{-1} x.
  double inverse_quadratic(const Vector& x) const;
  /// Column-wise x_k^T V^{-1} x_k for the columns of `xs` (d x n).
  Vector inverse_quadratic_columns(const Matrix& xs) const;
  double logdet() const;

 private:
  int dim_ = 0;
  double jitter_ = 0.0;
  Eigen::LLT<Matrix> llt_;
};

/// 1e-10 * trace(V) / d + 1e-12.
double default_jitter(const SymMatrix& v);

struct SpdSolution {
  Vector x;
  double jitter = 0.0;
  bool jittered() const { return jitter > 0.0; }
};

/// Solves V y = b. Throws NonFiniteInput on NaN/Inf entries.
SpdSolution solve_spd(const SymMatrix& v, const Vector& b);

/// x^T V^{-1} x. Throws NonPositiveDefinite when V is singular and
/// allow_jitter is false.
double mahalanobis_sq(const SymMatrix& v, const Vector& x, bool allow_jitter = true);

/// Natural-log determinant. Throws NonPositiveDefinite.
double logdet(const SymMatrix& v);

}  // namespace fairlin

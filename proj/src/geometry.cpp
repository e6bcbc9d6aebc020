#include "fairlin/geometry.hpp"

#include "fairlin/design.hpp"
#include "fairlin/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fairlin {

namespace {

constexpr double kSeparationTol = 1e-9;
constexpr double kMeanTol = 1e-6;
constexpr int kMaxCuttingRounds = 2000;

std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int k = 2; static_cast<int>(primes.size()) < count; ++k) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > k) break;
      if (k % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(k);
  }
  return primes;
}

double radical_inverse(long long index, int base) {
  double inv = 1.0 / base, f = inv, out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

struct Cut {
  Vector normal;
  double offset;  // max_i a^T x_i
};

// max a^T y - t  s.t.  a^T x_i <= t,  -1 <= a <= 1.  Returns the optimal a.
std::pair<double, Vector> separate(const Matrix& x, const Vector& y) {
  const int d = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  lp::LinearProgram prog;
  // Variables: a+ (d), a- (d), t+, t-.
  const int nv = 2 * d + 2;
  prog.a_ub = Matrix::Zero(n + 2 * d, nv);
  prog.b_ub = Vector::Zero(n + 2 * d);
  prog.a_ub.block(0, 0, n, d) = x.transpose();
  prog.a_ub.block(0, d, n, d) = -x.transpose();
  prog.a_ub.col(2 * d).head(n).setConstant(-1.0);
  prog.a_ub.col(2 * d + 1).head(n).setConstant(1.0);
  for (int k = 0; k < 2 * d; ++k) {
    prog.a_ub(n + k, k) = 1.0;
    prog.b_ub[n + k] = 1.0;
  }
  prog.a_eq = Matrix::Zero(0, nv);
  prog.b_eq = Vector::Zero(0);
  prog.objective = Vector::Zero(nv);
  prog.objective.head(d) = y;
  prog.objective.segment(d, d) = -y;
  prog.objective[2 * d] = -1.0;
  prog.objective[2 * d + 1] = 1.0;

  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal)
    throw LpFailure("separation program: " + std::string(lp::to_string(sol.status)));
  const Vector a = sol.x.head(d) - sol.x.segment(d, d);
  const double violation = a.dot(y) - (x.transpose() * a).maxCoeff();
  return {violation, a};
}

// max r  s.t.  a_k^T c + r s_k <= h_k,  |c_i| <= 1,  0 <= r <= 1.
std::pair<Vector, double> solve_master(const std::vector<Cut>& cuts, const Matrix& dirs, int d) {
  const int nv = 2 * d + 1;
  const int rows = static_cast<int>(cuts.size()) + 2 * d + 1;
  lp::LinearProgram prog;
  prog.a_ub = Matrix::Zero(rows, nv);
  prog.b_ub = Vector::Zero(rows);
  int r = 0;
  for (const Cut& cut : cuts) {
    const double reach = std::max(0.0, (dirs.transpose() * cut.normal).maxCoeff());
    prog.a_ub.row(r).head(d) = cut.normal.transpose();
    prog.a_ub.row(r).segment(d, d) = -cut.normal.transpose();
    prog.a_ub(r, 2 * d) = reach;
    prog.b_ub[r] = cut.offset;
    ++r;
  }
  for (int k = 0; k < 2 * d; ++k, ++r) {
    prog.a_ub(r, k) = 1.0;
    prog.b_ub[r] = 1.0;
  }
  prog.a_ub(r, 2 * d) = 1.0;
  prog.b_ub[r] = 1.0;
  prog.a_eq = Matrix::Zero(0, nv);
  prog.b_eq = Vector::Zero(0);
  prog.objective = Vector::Zero(nv);
  prog.objective[2 * d] = 1.0;

  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal)
    throw LpFailure("Chebyshev master program: " + std::string(lp::to_string(sol.status)));
  return {sol.x.head(d) - sol.x.segment(d, d), sol.x[2 * d]};
}

int affine_rank(const Matrix& x) {
  if (x.cols() < 2) return 0;
  const Matrix diffs = x.rightCols(x.cols() - 1).colwise() - x.col(0);
  return static_cast<int>(span_basis(diffs).cols());
}

}  // namespace

int default_direction_count(int d) { return std::max(50, 10 * d); }

Matrix probe_directions(int d, int count) {
  if (d < 1 || count < 1) throw std::invalid_argument("probe_directions: d and count must be positive");
  if (d == 1) {
    Matrix out(1, 2);
    out << 1.0, -1.0;
    return out;
  }
  Matrix out(d, count);
  int col = 0;
  for (int k = 0; k < d && col < count; ++k) {
    out.col(col++) = Vector::Unit(d, k);
    if (col < count) out.col(col++) = -Vector::Unit(d, k);
  }
  const int pairs = (d + 1) / 2;
  const std::vector<int> primes = first_primes(2 * pairs);
  for (long long index = 1; col < count; ++index) {
    Vector u(d);
    for (int p = 0; p < pairs; ++p) {
      const double u1 = 1.0 - radical_inverse(index, primes[2 * p]);
      const double u2 = radical_inverse(index, primes[2 * p + 1]);
      const double rad = std::sqrt(-2.0 * std::log(u1));
      u[2 * p] = rad * std::cos(2.0 * std::numbers::pi * u2);
      if (2 * p + 1 < d) u[2 * p + 1] = rad * std::sin(2.0 * std::numbers::pi * u2);
    }
    const double nrm = u.norm();
    if (nrm < 1e-12) continue;
    out.col(col++) = u / nrm;
  }
  return out;
}

double hull_violation(const ArmSet& arms, const Vector& y) {
  if (y.size() != arms.dim()) throw DimensionMismatch("hull_violation: dimension mismatch");
  return separate(arms.matrix(), y).first;
}

ChebyshevBall chebyshev_center(const ArmSet& arms, int n_dirs) {
  const int d = arms.dim();
  return chebyshev_center(arms, probe_directions(d, n_dirs > 0 ? n_dirs : default_direction_count(d)));
}

ChebyshevBall chebyshev_center(const ArmSet& arms, const Matrix& directions) {
  const int d = arms.dim();
  if (directions.rows() != d) throw DimensionMismatch("chebyshev_center: direction dimension mismatch");
  const Matrix& x = arms.matrix();
  ChebyshevBall out;
  if (affine_rank(x) < d) {
    out.center = x.rowwise().mean();
    out.radius = 0.0;
    return out;
  }

  std::vector<Cut> cuts;
  const int m = static_cast<int>(directions.cols());
  for (int round = 0; round < kMaxCuttingRounds; ++round) {
    const auto [c, r] = solve_master(cuts, directions, d);
    out.center = c;
    out.radius = r;
    out.cutting_rounds = round + 1;
    int added = 0;
    for (int j = -1; j < m; ++j) {
      const Vector probe = j < 0 ? c : Vector(c + r * directions.col(j));
      const auto [violation, a] = separate(x, probe);
      if (violation > kSeparationTol) {
        cuts.push_back({a, (x.transpose() * a).maxCoeff()});
        ++added;
      }
    }
    if (added == 0) {
      out.cuts = static_cast<int>(cuts.size());
      return out;
    }
  }
  throw LpFailure("chebyshev_center: cutting planes did not converge");
}

std::vector<double> reduce_support(const ArmSet& arms, std::vector<double> rho) {
  const int d = arms.dim();
  if (static_cast<int>(rho.size()) != arms.size()) throw DimensionMismatch("reduce_support: one weight per arm");
  while (true) {
    std::vector<int> support;
    for (int i = 0; i < arms.size(); ++i)
      if (rho[i] > 0.0) support.push_back(i);
    const int s = static_cast<int>(support.size());
    Matrix lifted(d + 1, s);
    for (int k = 0; k < s; ++k) {
      lifted.col(k).head(d) = arms.arm(support[k]);
      lifted(d, k) = 1.0;
    }
    const Eigen::JacobiSVD<Matrix> svd(lifted, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv[rank] > 1e-10 * std::max(sv.size() ? sv[0] : 0.0, 1e-300)) ++rank;
    if (rank >= s) return rho;

    // Any right singular vector past the rank lies in the null space.
    const Vector v = svd.matrixV().col(s - 1);
    int pivot = -1;
    double step = std::numeric_limits<double>::infinity();
    for (int k = 0; k < s; ++k) {
      if (v[k] > 1e-14 && rho[support[k]] / v[k] < step) {
        step = rho[support[k]] / v[k];
        pivot = k;
      }
    }
    if (pivot < 0) return rho;
    for (int k = 0; k < s; ++k) rho[support[k]] = std::max(0.0, rho[support[k]] - step * v[k]);
    rho[support[pivot]] = 0.0;
  }
}

std::vector<double> caratheodory_distribution(const ArmSet& arms, const Vector& c) {
  const int d = arms.dim();
  const int n = arms.size();
  if (c.size() != d) throw DimensionMismatch("caratheodory_distribution: dimension mismatch");

  lp::LinearProgram prog;
  prog.a_ub = Matrix::Zero(0, n);
  prog.b_ub = Vector::Zero(0);
  prog.a_eq = Matrix(d + 1, n);
  prog.a_eq.topRows(d) = arms.matrix();
  prog.a_eq.row(d).setOnes();
  prog.b_eq = Vector(d + 1);
  prog.b_eq.head(d) = c;
  prog.b_eq[d] = 1.0;
  prog.objective = Vector::Zero(n);
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal) throw InfeasiblePoint("point lies outside the convex hull of the arms");

  std::vector<double> rho(sol.x.data(), sol.x.data() + n);
  rho = reduce_support(arms, std::move(rho));
  double total = 0.0;
  for (double w : rho) total += w;
  for (double& w : rho) w /= total;

  Vector mean = Vector::Zero(d);
  for (int i = 0; i < n; ++i) mean += rho[i] * arms.arm(i);
  if ((mean - c).norm() > kMeanTol) throw InfeasiblePoint("point lies outside the convex hull of the arms");
  return rho;
}

std::vector<int> JohnDistribution::support() const {
  std::vector<int> s;
  for (int i = 0; i < static_cast<int>(rho.size()); ++i)
    if (rho[i] > 0.0) s.push_back(i);
  return s;
}

Vector JohnDistribution::mean(const ArmSet& arms) const {
  Vector m = Vector::Zero(arms.dim());
  for (int i = 0; i < arms.size(); ++i) m += rho[i] * arms.arm(i);
  return m;
}

JohnDistribution john_distribution(const ArmSet& arms, int n_dirs) {
  const ChebyshevBall ball = chebyshev_center(arms, n_dirs);
  JohnDistribution out;
  out.center = ball.center;
  out.radius = ball.radius;
  out.rho = caratheodory_distribution(arms, ball.center);
  return out;
}

double welfare_floor_ratio(const Vector& center, const Vector& theta_star, double mu_star) {
  if (mu_star <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(center.size() + 1) * center.dot(theta_star) / mu_star;
}

double welfare_floor_check(const JohnDistribution& dist, const BanditInstance& inst) {
  return welfare_floor_ratio(dist.center, inst.theta_star(), inst.best_mean());
}

}  // namespace fairlin

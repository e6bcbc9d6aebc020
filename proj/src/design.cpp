#include "fairlin/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairlin {

namespace {

// Inverse and predictive variances are rebuilt from a fresh factorization
// this often to bound drift from the rank-1 updates.
constexpr int kRefactorEvery = 100;

// Greedy pivoted selection of d arms spanning R^d (Gram-Schmidt on the
// largest residual).
std::vector<int> spanning_subset(const Matrix& x) {
  const int d = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  const double scale = std::max(x.colwise().norm().maxCoeff(), 1e-300);
  Matrix residual = x;
  std::vector<int> chosen;
  for (int k = 0; k < d; ++k) {
    const Vector norms = residual.colwise().norm().transpose();
    int best = -1;
    for (int i = 0; i < n; ++i)
      if (best < 0 || norms[i] > norms[best]) best = i;
    if (norms[best] <= 1e-9 * scale) throw NonSpanningArmSet("arms do not span R^d");
    const Vector q = residual.col(best) / norms[best];
    residual -= q * (q.transpose() * residual);
    chosen.push_back(best);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

SymMatrix moment_matrix(const Matrix& x, const std::vector<double>& w) {
  SymMatrix u(static_cast<int>(x.rows()));
  for (int i = 0; i < x.cols(); ++i)
    if (w[i] > 0.0) u.add_outer(x.col(i), w[i]);
  return u;
}

int argmax_lowest(const Vector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

class FrankWolfe {
 public:
  FrankWolfe(const Matrix& x, const DesignOptions& opts)
      : x_(x), d_(static_cast<int>(x.rows())), n_(static_cast<int>(x.cols())), opts_(opts) {
    weights_.assign(n_, 0.0);
    for (int i : spanning_subset(x_)) weights_[i] = 1.0 / d_;
    refactor();
  }

  DesignWeights run() {
    DesignWeights out;
    const int max_iters = opts_.max_iters > 0 ? opts_.max_iters : 1000 * d_;
    const double target = d_ * (1.0 + opts_.eps);
    if (opts_.record_history) out.logdet_history.push_back(logdet_);
    int iter = 0;
    while (true) {
      int k = argmax_lowest(g_);
      if (g_[k] <= target) {
        refactor();
        k = argmax_lowest(g_);
        if (g_[k] <= target) {
          out.converged = true;
          break;
        }
      }
      if (iter >= max_iters) break;
      step(k);
      ++iter;
      if (iter % kRefactorEvery == 0) refactor();
      if (opts_.record_history) out.logdet_history.push_back(logdet_);
    }
    out.iterations_used = iter;

    double total = 0.0;
    for (double& w : weights_) {
      if (w < opts_.prune_threshold) w = 0.0;
      total += w;
    }
    for (double& w : weights_) w /= total;
    reduce_to_moment_bound();
    out.weights = weights_;
    out.g_value = g_value(ArmSet(x_), out.weights);
    return out;
  }

 private:
  void refactor() {
    const SymMatrix u = moment_matrix(x_, weights_);
    const SpdFactor f(u, false);
    inverse_.resize(d_, d_);
    for (int j = 0; j < d_; ++j) inverse_.col(j) = f.solve(Vector::Unit(d_, j));
    inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
    g_ = f.inverse_quadratic_columns(x_);
    logdet_ = f.logdet();
  }

  // Frank-Wolfe can leave more than d(d+1)/2 support points. Move along
  // null directions of the lifted vectors vech(x x^T), which keeps the
  // moment matrix fixed, choosing the sign that does not grow the total
  // weight; renormalizing then only scales the moment matrix up.
  void reduce_to_moment_bound() {
    const int bound = d_ * (d_ + 1) / 2;
    while (true) {
      std::vector<int> supp;
      for (int i = 0; i < n_; ++i)
        if (weights_[i] > 0.0) supp.push_back(i);
      const int s = static_cast<int>(supp.size());
      if (s <= bound) return;
      Matrix lifted(bound, s);
      for (int j = 0; j < s; ++j) {
        const auto x = x_.col(supp[j]);
        for (int a = 0, r = 0; a < d_; ++a)
          for (int b = a; b < d_; ++b) lifted(r++, j) = x[a] * x[b];
      }
      Eigen::JacobiSVD<Matrix> svd(lifted, Eigen::ComputeFullV);
      Vector z = svd.matrixV().col(s - 1);
      if (z.sum() > 0.0) z = -z;
      double t = INFINITY;
      int hit = -1;
      for (int j = 0; j < s; ++j) {
        if (z[j] < 0.0 && -weights_[supp[j]] / z[j] < t) {
          t = -weights_[supp[j]] / z[j];
          hit = j;
        }
      }
      if (hit < 0) return;
      double total = 0.0;
      for (int j = 0; j < s; ++j) {
        double& w = weights_[supp[j]];
        w = j == hit ? 0.0 : std::max(0.0, w + t * z[j]);
        total += w;
      }
      for (double& w : weights_) w /= total;
    }
  }

  // Toward step on the most under-covered arm, or an away step off the
  // most over-weighted support arm, whichever has the larger KW gap.
  void step(int toward) {
    int away = -1;
    if (d_ > 1) {
      for (int i = 0; i < n_; ++i)
        if (weights_[i] > 0.0 && (away < 0 || g_[i] < g_[away])) away = i;
    }
    const double gap_toward = g_[toward] / d_ - 1.0;
    const double gap_away = away >= 0 ? 1.0 - g_[away] / d_ : -1.0;

    int idx;
    double gamma;
    if (gap_toward >= gap_away || away < 0 || weights_[away] >= 1.0) {
      idx = toward;
      const double g = g_[toward];
      gamma = (g / d_ - 1.0) / (g - 1.0);
    } else {
      idx = away;
      const double g = g_[away];
      const double floor = -weights_[away] / (1.0 - weights_[away]);
      gamma = g > 1.0 ? std::max((g / d_ - 1.0) / (g - 1.0), floor) : floor;
    }

    const Vector xi = x_.col(idx);
    const Vector u = inverse_ * xi;
    const double gx = g_[idx];
    const double c = gamma / (1.0 - gamma);
    const double denom = 1.0 + c * gx;
    const double scale = 1.0 / (1.0 - gamma);

    const Vector proj = x_.transpose() * u;
    g_ = scale * (g_.array() - (c / denom) * proj.array().square()).matrix();
    inverse_ = scale * (inverse_ - (c / denom) * u * u.transpose());
    logdet_ += d_ * std::log(1.0 - gamma) + std::log(denom);

    const bool drop = idx != toward && gamma <= -weights_[idx] / (1.0 - weights_[idx]);
    for (double& w : weights_) w *= (1.0 - gamma);
    weights_[idx] += gamma;
    if (drop || weights_[idx] < 0.0) weights_[idx] = 0.0;
  }

  const Matrix& x_;
  int d_, n_;
  DesignOptions opts_;
  std::vector<double> weights_;
  Matrix inverse_;
  Vector g_;
  double logdet_ = 0.0;
};

}  // namespace

std::vector<int> DesignWeights::support() const {
  std::vector<int> s;
  for (int i = 0; i < static_cast<int>(weights.size()); ++i)
    if (weights[i] > 0.0) s.push_back(i);
  return s;
}

DesignWeights d_optimal_design(const ArmSet& arms, const DesignOptions& opts) {
  if (!(opts.eps > 0.0)) throw std::invalid_argument("d_optimal_design: eps must be positive");
  // Run on a canonical (lexicographic) arm order so that the result does
  // not depend on how the caller ordered the arms.
  const Matrix& x = arms.matrix();
  std::vector<int> order(x.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (int k = 0; k < x.rows(); ++k)
      if (x(k, a) != x(k, b)) return x(k, a) < x(k, b);
    return false;
  });
  Matrix sorted(x.rows(), x.cols());
  for (int i = 0; i < x.cols(); ++i) sorted.col(i) = x.col(order[i]);
  DesignWeights out = FrankWolfe(sorted, opts).run();
  std::vector<double> w(out.weights.size());
  for (int i = 0; i < x.cols(); ++i) w[order[i]] = out.weights[i];
  out.weights = std::move(w);
  return out;
}

double g_value(const ArmSet& arms, const std::vector<double>& weights) {
  if (static_cast<int>(weights.size()) != arms.size())
    throw DimensionMismatch("g_value: one weight per arm required");
  const SymMatrix u = moment_matrix(arms.matrix(), weights);
  try {
    const SpdFactor f(u, false);
    return f.inverse_quadratic_columns(arms.matrix()).maxCoeff();
  } catch (const NonPositiveDefinite&) {
    throw SingularDesign("design matrix is singular");
  }
}

Matrix span_basis(const Matrix& points) {
  const Eigen::JacobiSVD<Matrix> svd(points, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double top = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > 1e-9 * std::max(top, 1e-300)) ++rank;
  Matrix basis = svd.matrixU().leftCols(rank);
  // Sign convention: largest-magnitude entry of each basis vector positive.
  for (int j = 0; j < rank; ++j) {
    Eigen::Index r;
    basis.col(j).cwiseAbs().maxCoeff(&r);
    if (basis(r, j) < 0.0) basis.col(j) = -basis.col(j);
  }
  return basis;
}

SubspaceDesign d_optimal_design_in_span(const ArmSet& arms, const DesignOptions& opts) {
  SubspaceDesign out;
  out.basis = span_basis(arms.matrix());
  if (out.rank() == 0) throw NonSpanningArmSet("arms span only the origin");
  if (out.rank() == arms.dim()) {
    out.basis = Matrix::Identity(arms.dim(), arms.dim());
    out.design = d_optimal_design(arms, opts);
    return out;
  }
  Matrix projected = out.basis.transpose() * arms.matrix();
  // Projection can lift norms above 1 only by rounding.
  for (int i = 0; i < projected.cols(); ++i) {
    const double nrm = projected.col(i).norm();
    if (nrm > 1.0) projected.col(i) /= nrm;
  }
  out.design = d_optimal_design(ArmSet(std::move(projected)), opts);
  return out;
}

long long ceil_count(double share) {
  return static_cast<long long>(std::ceil(share - 1e-9 * std::max(1.0, share)));
}

std::vector<ScheduleEntry> round_robin_schedule(const std::vector<double>& weights, long long t_tilde) {
  if (t_tilde < 1) throw std::invalid_argument("round_robin_schedule: T~ must be >= 1");
  std::vector<ScheduleEntry> out;
  for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
    if (weights[i] <= 0.0) continue;
    const double share = weights[i] * static_cast<double>(t_tilde) / 3.0;
    out.push_back({i, std::max(ceil_count(share), 1LL)});
  }
  return out;
}

}  // namespace fairlin

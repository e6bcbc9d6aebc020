#include "fairlin/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace fairlin::lp {

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dantzig pricing, switching to Bland's rule after this many consecutive
// degenerate pivots.
constexpr int kDegenerateStreakForBland = 50;

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const Options& opts) : opts_(opts) {
    n_ = static_cast<int>(lp.objective.size());
    m_ub_ = static_cast<int>(lp.a_ub.rows());
    m_eq_ = static_cast<int>(lp.a_eq.rows());
    if ((m_ub_ > 0 && lp.a_ub.cols() != n_) || (m_eq_ > 0 && lp.a_eq.cols() != n_) ||
        lp.b_ub.size() != m_ub_ || lp.b_eq.size() != m_eq_)
      throw DimensionMismatch("linear program: inconsistent dimensions");
    m_ = m_ub_ + m_eq_;

    int n_art = m_eq_;
    for (int i = 0; i < m_ub_; ++i)
      if (lp.b_ub[i] < 0.0) ++n_art;
    art_begin_ = n_ + m_ub_;
    cols_ = art_begin_ + n_art;
    rhs_ = cols_;

    t_ = Tableau::Zero(m_ + 1, cols_ + 1);
    basis_.assign(m_, -1);
    int art = art_begin_;
    for (int i = 0; i < m_ub_; ++i) {
      const double sign = lp.b_ub[i] < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * lp.a_ub.row(i);
      t_(i, n_ + i) = sign;
      t_(i, rhs_) = sign * lp.b_ub[i];
      if (sign > 0.0) {
        basis_[i] = n_ + i;
      } else {
        t_(i, art) = 1.0;
        basis_[i] = art++;
      }
    }
    for (int k = 0; k < m_eq_; ++k) {
      const int i = m_ub_ + k;
      const double sign = lp.b_eq[k] < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * lp.a_eq.row(k);
      t_(i, rhs_) = sign * lp.b_eq[k];
      t_(i, art) = 1.0;
      basis_[i] = art++;
    }
    objective_ = lp.objective;
  }

  Solution run() {
    Solution out;
    if (cols_ > art_begin_) {
      // Phase 1: maximize -sum(artificials).
      t_.row(m_).setZero();
      t_.row(m_).segment(art_begin_, cols_ - art_begin_).setOnes();
      for (int i = 0; i < m_; ++i)
        if (basis_[i] >= art_begin_) t_.row(m_) -= t_.row(i);
      const Status s = iterate(/*allow_artificial=*/true);
      if (s == Status::IterationLimit) return finish(out, s);
      if (-t_(m_, rhs_) > opts_.tolerance * (1.0 + t_.col(rhs_).head(m_).cwiseAbs().maxCoeff()))
        return finish(out, Status::Infeasible);
      drive_out_artificials();
    }

    // Phase 2.
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = -objective_.transpose();
    for (int i = 0; i < m_; ++i) {
      const double coef = t_(m_, basis_[i]);
      if (coef != 0.0) t_.row(m_) -= coef * t_.row(i);
    }
    return finish(out, iterate(/*allow_artificial=*/false));
  }

 private:
  Solution& finish(Solution& out, Status s) {
    out.status = s;
    out.pivots = pivots_;
    out.x = Vector::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) out.x[basis_[i]] = std::max(0.0, t_(i, rhs_));
    out.objective = objective_.size() ? objective_.dot(out.x) : 0.0;
    return out;
  }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    t_(r, c) = 1.0;
    for (int i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(r);
        t_(i, c) = 0.0;
      }
    }
    basis_[r] = c;
    ++pivots_;
  }

  Status iterate(bool allow_artificial) {
    const int limit = allow_artificial ? cols_ : art_begin_;
    int degenerate_streak = 0;
    while (true) {
      if (pivots_ >= opts_.max_pivots) return Status::IterationLimit;
      const bool bland = degenerate_streak >= kDegenerateStreakForBland;
      int enter = -1;
      double best = -opts_.tolerance;
      for (int j = 0; j < limit; ++j) {
        const double rc = t_(m_, j);
        if (rc < best) {
          enter = j;
          if (bland) break;
          best = rc;
        }
      }
      if (enter < 0) return Status::Optimal;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a <= opts_.tolerance) continue;
        const double ratio = t_(i, rhs_) / a;
        if (ratio < best_ratio - 1e-14 ||
            (ratio <= best_ratio + 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave < 0) return Status::Unbounded;
      degenerate_streak = best_ratio <= opts_.tolerance ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
    }
  }

  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < art_begin_) continue;
      int col = -1;
      double best = opts_.tolerance;
      for (int j = 0; j < art_begin_; ++j) {
        if (std::abs(t_(i, j)) > best) {
          best = std::abs(t_(i, j));
          col = j;
        }
      }
      // A row with no structural entry is redundant; its artificial stays
      // basic at zero and can never re-enter.
      if (col >= 0) pivot(i, col);
    }
  }

  Options opts_;
  int n_ = 0, m_ub_ = 0, m_eq_ = 0, m_ = 0;
  int art_begin_ = 0, cols_ = 0, rhs_ = 0;
  int pivots_ = 0;
  Tableau t_;
  std::vector<int> basis_;
  Vector objective_;
};

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration limit";
  }
  return "unknown";
}

Solution solve(const LinearProgram& lp, const Options& opts) { return Simplex(lp, opts).run(); }

}  // namespace fairlin::lp

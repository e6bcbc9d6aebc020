// Dense two-phase simplex for the small linear programs used by the
// geometry module.
#pragma once

#include "fairlin/numerics.hpp"

#include <string_view>

namespace fairlin::lp {

/// maximize objective^T x  s.t.  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0.
/// Either constraint block may have zero rows.
struct LinearProgram {
  Matrix a_ub;
  Vector b_ub;
  Matrix a_eq;
  Vector b_eq;
  Vector objective;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  Vector x;
  double objective = 0.0;
  int pivots = 0;
};

struct Options {
  double tolerance = 1e-9;
  int max_pivots = 200000;
};

Solution solve(const LinearProgram& lp, const Options& opts = {});

}  // namespace fairlin::lp

// Approximate John center of conv(X) and a small-support distribution over
// arms whose mean is that center.
#pragma once

#include "fairlin/instances.hpp"
#include "fairlin/numerics.hpp"

#include <stdexcept>
#include <vector>

namespace fairlin {

class InfeasiblePoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LpFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// max(50, 10 d)
int default_direction_count(int d);

/// `count` deterministic unit directions in R^d (d x count): the 2d signed
/// coordinate axes first, then Halton points pushed through Box-Muller and
/// normalized. For d == 1 the set is {+1, -1}.
Matrix probe_directions(int d, int count);

struct ChebyshevBall {
  Vector center;
  double radius = 0.0;
  int cutting_rounds = 0;
  int cuts = 0;
};

/// Largest r such that c + r u stays in conv(X) for every probe direction u
/// (and c itself is in conv(X)). Solved by cutting planes: a master LP over
/// (c, r) against supporting halfspaces of conv(X), with violated halfspaces
/// found by a separation LP per probe point. When the arms' affine hull is
/// lower dimensional the radius is 0 and the center is the arm centroid.
/// n_dirs <= 0 selects default_direction_count(d).
ChebyshevBall chebyshev_center(const ArmSet& arms, int n_dirs = 0);

/// Same, against an explicit probe set (d x m).
ChebyshevBall chebyshev_center(const ArmSet& arms, const Matrix& directions);

/// Largest violation a^T y - max_i a^T x_i over ||a||_inf <= 1; <= 0 iff
/// y is in conv(X).
double hull_violation(const ArmSet& arms, const Vector& y);

/// rho >= 0, sum rho = 1, sum rho_i x_i = c (within 1e-6), at most d + 1
/// atoms. Throws InfeasiblePoint when c is outside conv(X).
std::vector<double> caratheodory_distribution(const ArmSet& arms, const Vector& c);

/// Removes null-space directions of the support's affine lifting [x_i; 1]
/// until the support is affinely independent. Preserves the mean and the
/// total mass.
std::vector<double> reduce_support(const ArmSet& arms, std::vector<double> rho);

struct JohnDistribution {
  Vector center;
  double radius = 0.0;
  /// One probability per arm.
  std::vector<double> rho;

  std::vector<int> support() const;
  Vector mean(const ArmSet& arms) const;
};

JohnDistribution john_distribution(const ArmSet& arms, int n_dirs = 0);

/// (d + 1) <c, theta*> / mu*; +inf when mu* == 0.
double welfare_floor_ratio(const Vector& center, const Vector& theta_star, double mu_star);
double welfare_floor_check(const JohnDistribution& dist, const BanditInstance& inst);

}  // namespace fairlin

// Finite linear-bandit environments.
#pragma once

#include "fairlin/numerics.hpp"
#include "fairlin/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fairlin {

class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered, nonempty list of arms in R^d with ||x||_2 <= 1 (+1e-9).
class ArmSet {
 public:
  ArmSet() = default;
  /// `arms` is d x n, one arm per column.
  explicit ArmSet(Matrix arms);
  static ArmSet from_rows(const std::vector<std::vector<double>>& rows);

  int dim() const { return static_cast<int>(arms_.rows()); }
  int size() const { return static_cast<int>(arms_.cols()); }
  auto arm(int i) const { return arms_.col(i); }
  const Matrix& matrix() const { return arms_; }

  /// Subset in the order given.
  ArmSet subset(const std::vector<int>& indices) const;

 private:
  Matrix arms_;
};

/// An arm set, hidden parameter theta* and Gaussian noise scale. Immutable.
class BanditInstance {
 public:
  /// Validates ||theta*|| <= 1 and nonnegative means; means in [-1e-12, 0)
  /// are clamped to 0. Throws InvalidInstance.
  BanditInstance(ArmSet arms, Vector theta_star, double sigma);

  const ArmSet& arms() const { return arms_; }
  int dim() const { return arms_.dim(); }
  int num_arms() const { return arms_.size(); }
  const Vector& theta_star() const { return theta_star_; }
  double sigma() const { return sigma_; }

  /// <x_i, theta*> with the clamp applied.
  double mean(int arm_idx) const { return means_.at(arm_idx); }
  const std::vector<double>& means() const { return means_; }

  int best_index() const { return best_index_; }
  double best_mean() const { return means_[best_index_]; }

  BanditInstance with_sigma(double sigma) const;

 private:
  ArmSet arms_;
  Vector theta_star_;
  double sigma_;
  std::vector<double> means_;
  int best_index_ = 0;
};

struct BestArm {
  int index;
  double mean;
};

/// Lowest index attaining the largest mean.
BestArm best_arm(const BanditInstance& inst);

/// Gaussian arms normalized to the unit sphere, a theta* with exactly
/// `sparsity` nonzero coordinates normalized to unit length, and every arm
/// with a negative mean negated. Deterministic in `seed`.
BanditInstance make_synthetic_instance(int d, int n_arms, int sparsity, std::uint64_t seed,
                                       double sigma = 0.5);

/// <x, theta*> + sigma * N(0, 1); consumes two draws from `rng`.
double sample_reward(const BanditInstance& inst, int arm_idx, RandomStream& rng);

/// {d, arms: [[...]], theta_star: [...], sigma}
nlohmann::json instance_to_json(const BanditInstance& inst);
BanditInstance instance_from_json(const nlohmann::json& j);

}  // namespace fairlin

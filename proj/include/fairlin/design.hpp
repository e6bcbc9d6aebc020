// D-optimal experimental design over a finite arm set, and the round-robin
// pull schedule that realizes it.
#pragma once

#include "fairlin/instances.hpp"
#include "fairlin/numerics.hpp"

#include <stdexcept>
#include <vector>

namespace fairlin {

class NonSpanningArmSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DesignOptions {
  double eps = 0.01;
  /// 0 selects 1000 * d.
  int max_iters = 0;
  double prune_threshold = 1e-6;
  /// Keep log det U(lambda) after every iteration in DesignWeights::logdet_history.
  bool record_history = false;
};

struct DesignWeights {
  /// One weight per arm, in arm order; sums to 1.
  std::vector<double> weights;
  /// max_x x^T U(lambda)^{-1} x for the returned (pruned) weights.
  double g_value = 0.0;
  int iterations_used = 0;
  /// False when the iteration budget ran out before g <= d (1 + eps);
  /// the weights are then the last iterate.
  bool converged = false;
  std::vector<double> logdet_history;

  std::vector<int> support() const;
  int support_size() const { return static_cast<int>(support().size()); }
};

/// Frank-Wolfe (with away steps) on log det U(lambda). Throws
/// NonSpanningArmSet when the arms do not span R^d.
DesignWeights d_optimal_design(const ArmSet& arms, const DesignOptions& opts = {});

/// max over arms of x^T U(lambda)^{-1} x. Throws SingularDesign.
double g_value(const ArmSet& arms, const std::vector<double>& weights);

/// Design over arms that may only span a subspace: arms are expressed in an
/// orthonormal basis of their span, the design is solved there, and the
/// weights are reported against the original arm indices.
struct SubspaceDesign {
  DesignWeights design;
  /// d x k orthonormal basis of span(arms).
  Matrix basis;
  int rank() const { return static_cast<int>(basis.cols()); }
};

/// d x k orthonormal basis of the column span of `points` (relative rank
/// tolerance 1e-9).
Matrix span_basis(const Matrix& points);

SubspaceDesign d_optimal_design_in_span(const ArmSet& arms, const DesignOptions& opts = {});

struct ScheduleEntry {
  int arm;
  long long count;
  bool operator==(const ScheduleEntry&) const = default;
};

/// ceil(share), treating values within 1e-9 (relative) above an integer as
/// that integer so that products like (1/3) * 9 land on 3.
long long ceil_count(double share);

/// One entry per support arm, ascending arm index, count = ceil(lambda * T~ / 3).
std::vector<ScheduleEntry> round_robin_schedule(const std::vector<double>& weights, long long t_tilde);

}  // namespace fairlin

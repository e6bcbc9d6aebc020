#include "fairlin/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fairlin {

namespace {

constexpr double kNormSlack = 1e-9;
constexpr double kMeanClamp = 1e-12;

}  // namespace

ArmSet::ArmSet(Matrix arms) : arms_(std::move(arms)) {
  if (arms_.rows() < 1 || arms_.cols() < 1) throw InvalidInstance("arm set must be nonempty");
  if (!arms_.allFinite()) throw InvalidInstance("arm set has non-finite entries");
  for (int i = 0; i < arms_.cols(); ++i)
    if (arms_.col(i).norm() > 1.0 + kNormSlack)
      throw InvalidInstance("arm " + std::to_string(i) + " has norm greater than 1");
}

ArmSet ArmSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw InvalidInstance("arm set must be nonempty");
  const auto d = rows.front().size();
  Matrix m(d, rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw InvalidInstance("arms have inconsistent dimensions");
    for (std::size_t k = 0; k < d; ++k) m(k, i) = rows[i][k];
  }
  return ArmSet(std::move(m));
}

ArmSet ArmSet::subset(const std::vector<int>& indices) const {
  Matrix m(dim(), indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) m.col(k) = arms_.col(indices[k]);
  return ArmSet(std::move(m));
}

BanditInstance::BanditInstance(ArmSet arms, Vector theta_star, double sigma)
    : arms_(std::move(arms)), theta_star_(std::move(theta_star)), sigma_(sigma) {
  if (theta_star_.size() != arms_.dim()) throw InvalidInstance("theta_star dimension mismatch");
  if (!theta_star_.allFinite()) throw InvalidInstance("theta_star has non-finite entries");
  if (theta_star_.norm() > 1.0 + kNormSlack) throw InvalidInstance("theta_star has norm greater than 1");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw InvalidInstance("sigma must be finite and nonnegative");
  means_.resize(arms_.size());
  for (int i = 0; i < arms_.size(); ++i) {
    double m = arms_.arm(i).dot(theta_star_);
    if (m < -kMeanClamp)
      throw InvalidInstance("arm " + std::to_string(i) + " has a negative expected reward");
    if (m < 0.0) m = 0.0;
    means_[i] = m;
  }
  best_index_ = static_cast<int>(std::max_element(means_.begin(), means_.end()) - means_.begin());
}

BanditInstance BanditInstance::with_sigma(double sigma) const {
  return BanditInstance(arms_, theta_star_, sigma);
}

BestArm best_arm(const BanditInstance& inst) { return {inst.best_index(), inst.best_mean()}; }

BanditInstance make_synthetic_instance(int d, int n_arms, int sparsity, std::uint64_t seed,
                                       double sigma) {
  if (d < 1 || d > 64) throw InvalidInstance("synthetic instance: d must be in [1, 64]");
  if (n_arms < d) throw InvalidInstance("synthetic instance: need n_arms >= d");
  if (sparsity < 1 || sparsity > d) throw InvalidInstance("synthetic instance: sparsity must be in [1, d]");

  RandomStream rng(splitmix64(seed));

  Matrix arms(d, n_arms);
  for (int i = 0; i < n_arms; ++i) {
    double norm = 0.0;
    do {
      for (int k = 0; k < d; ++k) arms(k, i) = rng.normal();
      norm = arms.col(i).norm();
    } while (norm < 1e-12);
    arms.col(i) /= norm;
  }

  // Partial Fisher-Yates for the support of theta*.
  std::vector<int> coords(d);
  std::iota(coords.begin(), coords.end(), 0);
  for (int k = 0; k < sparsity; ++k) {
    const int j = k + static_cast<int>(rng.index(static_cast<std::uint64_t>(d - k)));
    std::swap(coords[k], coords[j]);
  }
  Vector theta = Vector::Zero(d);
  double tnorm = 0.0;
  do {
    for (int k = 0; k < sparsity; ++k) theta[coords[k]] = rng.normal();
    tnorm = theta.norm();
  } while (tnorm < 1e-12);
  theta /= tnorm;

  for (int i = 0; i < n_arms; ++i)
    if (arms.col(i).dot(theta) < 0.0) arms.col(i) = -arms.col(i);

  return BanditInstance(ArmSet(std::move(arms)), std::move(theta), sigma);
}

double sample_reward(const BanditInstance& inst, int arm_idx, RandomStream& rng) {
  if (arm_idx < 0 || arm_idx >= inst.num_arms()) throw std::out_of_range("sample_reward: arm index out of range");
  const double z = rng.normal();
  return inst.mean(arm_idx) + inst.sigma() * z;
}

nlohmann::json instance_to_json(const BanditInstance& inst) {
  nlohmann::json arms = nlohmann::json::array();
  for (int i = 0; i < inst.num_arms(); ++i) {
    const auto a = inst.arms().arm(i);
    arms.push_back(std::vector<double>(a.data(), a.data() + a.size()));
  }
  const Vector& th = inst.theta_star();
  return {{"d", inst.dim()},
          {"arms", std::move(arms)},
          {"theta_star", std::vector<double>(th.data(), th.data() + th.size())},
          {"sigma", inst.sigma()}};
}

BanditInstance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInstance("instance JSON must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "d" && key != "arms" && key != "theta_star" && key != "sigma")
      throw InvalidInstance("instance JSON: unknown key '" + key + "'");
  try {
    const int d = j.at("d").get<int>();
    const auto rows = j.at("arms").get<std::vector<std::vector<double>>>();
    const auto theta = j.at("theta_star").get<std::vector<double>>();
    const double sigma = j.value("sigma", 0.5);
    ArmSet arms = ArmSet::from_rows(rows);
    if (arms.dim() != d) throw InvalidInstance("instance JSON: arm dimension does not match d");
    return BanditInstance(std::move(arms), Eigen::Map<const Vector>(theta.data(), theta.size()), sigma);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInstance(std::string("instance JSON: ") + e.what());
  }
}

}  // namespace fairlin

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "atig/soft_bellman.hpp"

namespace atig {

enum class RewardVariant { Tabular, Linear, Mlp };

std::string variant_name(RewardVariant v);
RewardVariant parse_variant(std::string_view name);

/// What a reward model is evaluated on: the (z, a) grid of a product MDP and, for the
/// feature-based variants, one feature row per (z, a).
struct RewardInputs {
  int num_states = 0;
  int num_actions = 4;
  const Eigen::MatrixXd* features = nullptr;

  int num_pairs() const { return num_states * num_actions; }
};

/// Reward R_theta(z, a) with its exact parameter gradient.
///
/// - tabular: one parameter per (z, a) pair
/// - linear:  R = theta^T f(z, a)
/// - mlp:     fully connected ReLU network over f(z, a) with a scalar output
class RewardModel {
 public:
  static RewardModel tabular(int num_states, int num_actions = 4);
  static RewardModel linear(int feature_dim);
  /// Weights are uniform in +-1/sqrt(fan_in), biases zero.
  static RewardModel mlp(int input_dim, const std::vector<int>& hidden, std::uint64_t seed);

  RewardVariant variant() const { return variant_; }
  /// tabular: {num_states, num_actions}; linear: {feature_dim}; mlp: {in, hidden..., 1}.
  const std::vector<int>& shape() const { return shape_; }
  const Eigen::VectorXd& params() const { return theta_; }
  Eigen::VectorXd& params() { return theta_; }
  Eigen::Index dim() const { return theta_.size(); }

  /// Reward table, |Z| x |A|.
  QMatrix<double> rewards(const RewardInputs& in) const;
  /// dR/dtheta, one row per (z, a). Dense; meant for small instances.
  Eigen::MatrixXd jacobian(const RewardInputs& in) const;
  /// sum_{z,a} weights(z,a) * dR(z,a)/dtheta.
  Eigen::VectorXd weighted_gradient(const RewardInputs& in, const QMatrix<double>& weights) const;

  bool operator==(const RewardModel& other) const;

 private:
  RewardModel(RewardVariant v, std::vector<int> shape, Eigen::VectorXd theta);
  void check_inputs(const RewardInputs& in) const;

  RewardVariant variant_;
  std::vector<int> shape_;
  Eigen::VectorXd theta_;
};

/// Text format: "variant NAME", "shape n...", "params d", then d values at full precision.
std::string format_model(const RewardModel& model);
RewardModel parse_model(std::string_view text);
RewardModel load_model(const std::filesystem::path& path);
void save_model(const RewardModel& model, const std::filesystem::path& path);

}  // namespace atig

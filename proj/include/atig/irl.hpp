#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "atig/automata.hpp"
#include "atig/grid_env.hpp"
#include "atig/oracle.hpp"
#include "atig/reward_model.hpp"
#include "atig/soft_bellman.hpp"

namespace atig {

/// Reward network input: k x k neighborhood one-hot over the six object kinds (all zeros off
/// the grid), DFA-state one-hot padded to `dfa_slots`, action one-hot.
struct FeatureOptions {
  int neighborhood = 7;
  int dfa_slots = 10;
};

/// DFA slots actually used: max(dfa_slots, num_dfa_states).
int dfa_slot_count(const FeatureOptions& opts, int num_dfa_states);
int feature_dim(const FeatureOptions& opts, int num_dfa_states);

/// One row per (z, a), in transition-matrix row order.
Eigen::MatrixXd encode_features(const GridMap& grid, const ProductMdp& product,
                                const FeatureOptions& opts = {});

struct ProductStep {
  int z = 0;
  int a = 0;
};
using ProductTrajectory = std::vector<ProductStep>;

/// Lifts a grid demonstration into the product. The trajectory stops at the first absorbing
/// product state. Throws StateError if the path leaves the reachable product.
ProductTrajectory project_demo(const GridMap& grid, const ProductMdp& product,
                               const Demonstration& demo);

/// Number of times each (z, a) occurs in the trajectories.
QMatrix<double> visit_counts(const ProductMdp& product,
                             const std::vector<ProductTrajectory>& trajectories);

struct LogLikelihood {
  double value = 0.0;        ///< sum of log pi(a|z) over all demonstrated pairs
  Eigen::VectorXd gradient;  ///< d value / d theta
  bool floored = false;      ///< some log-probability fell below the floor
};

/// L_D and its gradient from a dense dQ/dtheta table.
LogLikelihood loglik_and_grad(const std::vector<ProductTrajectory>& trajectories,
                              const QMatrix<double>& q, const GradTable<double>& grad,
                              const QMatrix<double>& pi, double log_floor = -1e6);

/// Same quantity through the adjoint weights; costs one |Z||A| fixed point instead of d.
LogLikelihood loglik_and_grad_adjoint(const ProductMdp& product,
                                      const std::vector<ProductTrajectory>& trajectories,
                                      const RewardModel& model, const RewardInputs& inputs,
                                      const QMatrix<double>& q, const QMatrix<double>& pi,
                                      const SolverOptions& opts, double log_floor = -1e6,
                                      QMatrix<double>* warm_adjoint = nullptr);

/// Full pipeline from parameters to L_D: rewards, soft value iteration, log-likelihood.
double loglik_at(const ProductMdp& product, const std::vector<ProductTrajectory>& trajectories,
                 const RewardModel& model, const RewardInputs& inputs, const SolverOptions& opts);

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 1e-2;
  bool decay = false;  ///< alpha_t = learning_rate / sqrt(t + 1)
  double vi_tolerance = 1e-8;
  int vi_max_sweeps = 10000;
  int eval_period = 10;         ///< N
  double stop_threshold = 0.0;  ///< epsilon
  int min_iterations = 0;       ///< no stopping test before this iteration
  int max_iterations = 1000;
  int rollouts = 1000;
  int rollout_horizon = 0;  ///< 0: 4 * (W + H)
  std::uint64_t seed = 0;
  bool dense_gradient = false;  ///< use the dense dQ/dtheta table instead of the adjoint
  double log_floor = -1e6;

  SolverOptions solver() const { return {gamma, vi_tolerance, vi_max_sweeps}; }
};

struct IterationMetrics {
  int iteration = 0;
  double loglik = 0.0;
  double grad_norm = 0.0;
  std::optional<double> beta;
};

struct TrainReport {
  std::vector<IterationMetrics> metrics;
  std::vector<std::pair<int, double>> beta_history;
  double final_beta = 0.0;
  int iterations = 0;
  bool floored = false;
  QMatrix<double> q;
  QMatrix<double> policy;
};

/// Success ratio of a policy table (|Z| x |A|) at training iteration t.
using PolicyEvaluator = std::function<double(const QMatrix<double>& policy, int iteration)>;

/// Gradient ascent on L_D. Every eval_period iterations the evaluator supplies beta_t and
/// training stops once beta_t - beta_{t-N} <= stop_threshold (beta_{-N} = -inf), or at
/// max_iterations. The returned model is the one that produced the final beta.
TrainReport train(const ProductMdp& product, const std::vector<ProductTrajectory>& trajectories,
                  RewardModel& model, const RewardInputs& inputs, const TrainConfig& cfg,
                  const PolicyEvaluator& evaluator);

/// Columns: iteration, loglik, grad_norm, beta (empty when not evaluated).
void write_metrics_csv(const TrainReport& report, std::ostream& out);

}  // namespace atig

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atig/automata.hpp"
#include "atig/grid_env.hpp"
#include "atig/irl.hpp"
#include "atig/lstar.hpp"
#include "atig/oracle.hpp"
#include "atig/reward_model.hpp"
#include "atig/rng.hpp"

namespace atig {

struct SuccessRatio {
  double beta = 0.0;
  int successes = 0;
  int rollouts = 0;
  int horizon = 0;
};

/// Outcome of one policy rollout in the grid, tracked through the hypothesis product.
struct Rollout {
  std::vector<Cell> cells;
  Word word;
  bool success = false;
};

/// Samples one rollout of `policy` (|Z| x |A| over `product`) for at most `horizon` steps.
/// The rollout ends when the ground-truth task accepts or reaches a trap. Product states that
/// are not in `product` act uniformly at random.
Rollout sample_rollout(const GridMap& grid, const TaskSpec& task, const ProductMdp& product,
                       const QMatrix<double>& policy, int horizon, Rng& rng);

/// Monte Carlo success ratio over `n` rollouts; rollout i uses stream i of `seed`.
SuccessRatio success_ratio(const GridMap& grid, const TaskSpec& task, const ProductMdp& product,
                           const QMatrix<double>& policy, int n, int horizon,
                           std::uint64_t seed);

struct CounterexampleBudget {
  int rollouts = 200;
  int random_words = 5000;
  int max_word_length = 8;
  bool exact = false;  ///< test mode: fall back to the exact distinguishing word
};

/// A word on which the ground truth and the hypothesis disagree. Searched in order: emitted
/// words of policy rollouts, uniformly random words, and in test mode the exact pair-automaton
/// search.
std::optional<Word> find_counterexample(const GridMap& grid, const TaskSpec& task,
                                        const Dfa& hypothesis, const ProductMdp& product,
                                        const QMatrix<double>& policy,
                                        const CounterexampleBudget& budget, int horizon,
                                        std::uint64_t seed);

struct AtigConfig {
  double kappa = 0.9;
  int rollouts = 1000;
  int rollout_horizon = 0;  ///< 0: 4 * (W + H)
  CounterexampleBudget counterexamples;
  int demos_per_query = 10;
  int max_outer_iterations = 10;
  std::uint64_t seed = 0;
  RewardVariant variant = RewardVariant::Tabular;
  FeatureOptions features;
  std::vector<int> hidden = {214, 50};
};

int rollout_horizon(const GridMap& grid, int configured);

struct RewardLearningResult {
  RewardModel model;
  TrainReport report;
  ProductMdp product;
  SuccessRatio beta;
  QMatrix<double> policy;
  bool trained = false;  ///< false when no demonstrated pair was available
};

/// Success ratio of the soft policy of `model` over `product`, solved from scratch. Tabular
/// models must have been trained on this very product.
SuccessRatio evaluate_model(const GridMap& grid, const TaskSpec& task, const ProductMdp& product,
                            const RewardModel& model, const TrainConfig& irl,
                            const AtigConfig& cfg, std::uint64_t seed);

/// Builds the product with `automaton`, fits a fresh reward model to the demonstrations, and
/// measures the success ratio of the resulting soft policy.
RewardLearningResult learn_reward(const GridMap& grid, const TaskSpec& task,
                                  const Dfa& automaton,
                                  const std::vector<Demonstration>& demonstrations,
                                  const TrainConfig& irl, const AtigConfig& cfg,
                                  std::uint64_t seed);

/// Demonstrations for the words in order; word i uses demonstration seed stream i. Words the
/// grid cannot realize within the task horizon are skipped.
std::vector<Demonstration> demonstrations_for(const TaskSpec& task, const GridMap& grid,
                                              const std::vector<Word>& words,
                                              const AtigConfig& cfg);

struct IterationLog {
  int iteration = 0;
  int dfa_states = 0;
  std::size_t membership_queries = 0;
  std::size_t demonstrations = 0;
  int train_iterations = 0;
  double beta = 0.0;
  std::optional<Word> counterexample;
  double wall_seconds = 0.0;
};

struct AtigResult {
  Dfa dfa;
  std::optional<RewardModel> model;
  QMatrix<double> policy;
  std::optional<ProductMdp> product;
  TrainReport report;
  double beta = 0.0;
  bool converged = false;
  std::vector<IterationLog> log;
  std::vector<Dfa> hypotheses;
  std::vector<Word> positive_words;
  std::vector<Demonstration> demonstrations;
  std::vector<MembershipOracle::Record> queries;
};

/// Throws InputError unless every region type of the task alphabet occurs in the grid.
void check_task_grid(const GridMap& grid, const TaskSpec& task);

/// Alternates L* task inference and reward learning until beta > kappa (and, in
/// exact-counterexample test mode, the hypothesis equals the ground truth), no counterexample
/// can be found, or the iteration cap is reached.
AtigResult run_atig(const GridMap& grid, const TaskSpec& task, const TrainConfig& irl,
                    const AtigConfig& cfg);

enum class Baseline { Memoryless, InfoBits };

std::string baseline_name(Baseline b);
Baseline parse_baseline(const std::string& name);
Dfa baseline_automaton(Baseline b);

/// Reward learning over a fixed memory automaton instead of a learned DFA, using the
/// demonstrations of `positive_words`.
RewardLearningResult run_baseline(const GridMap& grid, const TaskSpec& task, Baseline which,
                                  const std::vector<Word>& positive_words,
                                  const TrainConfig& irl, const AtigConfig& cfg);

/// Success ratio of a trained method on another grid. Feature-based models are applied as
/// they are; tabular models are tied to one product MDP, so a fresh tabular reward is fit on
/// the new grid from demonstrations of the same words.
SuccessRatio evaluate_on_env(const GridMap& grid, const TaskSpec& task, const Dfa& automaton,
                             const std::vector<Word>& positive_words, const RewardModel& trained,
                             const TrainConfig& irl, const AtigConfig& cfg, std::uint64_t seed);

}  // namespace atig

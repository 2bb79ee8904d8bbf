#include "atig/orchestrator.hpp"

#include <chrono>

#include "atig/error.hpp"
#include "atig/rng.hpp"

namespace atig {

namespace {

constexpr std::uint64_t kDemoStream = 0xD3A0;
constexpr std::uint64_t kCounterexampleStream = 0xCE00;
constexpr std::uint64_t kFinalEvalStream = 0xE7A1;

struct TaskTracker {
  const Dfa& dfa;
  std::vector<bool> trap;

  explicit TaskTracker(const Dfa& d) : dfa(d), trap(trap_states(d)) {}
};

int sample_index(const auto& probs, Rng& rng) {
  double u = uniform01(rng);
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

Rollout rollout_impl(const GridMap& grid, const TaskTracker& gt, const ProductMdp& product,
                     const QMatrix<double>& policy, int horizon, Rng& rng) {
  Rollout out;
  std::vector<double> init_probs;
  for (const auto& [z, p] : product.initial) init_probs.push_back(p);
  const int z0 = product.initial[sample_index(init_probs, rng)].first;
  int cell = product.states[z0].cell;
  int q_hyp = product.states[z0].q;
  int q_gt = gt.dfa.advance(gt.dfa.initial(), grid.label_at(cell));
  if (auto l = grid.label_at(cell)) out.word.push_back(*l);
  out.cells.push_back(grid.cell_at(cell));

  std::array<double, kNumActions> probs;
  for (int step = 0; step < horizon; ++step) {
    if (gt.dfa.is_accepting(q_gt)) {
      out.success = true;
      return out;
    }
    if (gt.trap[q_gt]) return out;
    const int z = product.find(cell, q_hyp);
    for (int a = 0; a < kNumActions; ++a) probs[a] = z >= 0 ? policy(z, a) : 1.0 / kNumActions;
    const Action action = kAllActions[sample_index(probs, rng)];
    const Cell from = grid.cell_at(cell);
    const auto succ = step_distribution(grid, from, action);
    std::vector<double> sp;
    for (const auto& t : succ) sp.push_back(t.prob);
    const Cell to = succ[sample_index(sp, rng)].cell;
    if (auto l = entry_label(grid, from, to)) {
      out.word.push_back(*l);
      q_hyp = product.dfa.step(q_hyp, *l);
      q_gt = gt.dfa.step(q_gt, *l);
    }
    cell = grid.index(to);
    out.cells.push_back(to);
  }
  out.success = gt.dfa.is_accepting(q_gt);
  return out;
}

Demonstration relabel(Demonstration d, const Word& w) {
  d.provenance = "membership " + format_word(w);
  return d;
}

std::vector<Demonstration> demos_for_word(const TaskSpec& task, const GridMap& grid,
                                          const Word& w, std::size_t index,
                                          const AtigConfig& cfg) {
  std::vector<Demonstration> out;
  for (auto& d : demonstrate(task, grid, w, cfg.demos_per_query,
                             mix_seed(cfg.seed ^ kDemoStream, index)))
    out.push_back(relabel(std::move(d), w));
  return out;
}

}  // namespace

Rollout sample_rollout(const GridMap& grid, const TaskSpec& task, const ProductMdp& product,
                       const QMatrix<double>& policy, int horizon, Rng& rng) {
  return rollout_impl(grid, TaskTracker(task.dfa), product, policy, horizon, rng);
}

SuccessRatio success_ratio(const GridMap& grid, const TaskSpec& task, const ProductMdp& product,
                           const QMatrix<double>& policy, int n, int horizon,
                           std::uint64_t seed) {
  if (policy.rows() != product.num_states() || policy.cols() != kNumActions)
    throw InputError("policy table does not match the product MDP");
  const TaskTracker gt(task.dfa);
  SuccessRatio out{.rollouts = n, .horizon = horizon};
  for (int i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    if (rollout_impl(grid, gt, product, policy, horizon, rng).success) ++out.successes;
  }
  out.beta = n > 0 ? static_cast<double>(out.successes) / n : 0.0;
  return out;
}

std::optional<Word> find_counterexample(const GridMap& grid, const TaskSpec& task,
                                        const Dfa& hypothesis, const ProductMdp& product,
                                        const QMatrix<double>& policy,
                                        const CounterexampleBudget& budget, int horizon,
                                        std::uint64_t seed) {
  if (hypothesis.alphabet_size() != task.dfa.alphabet_size())
    throw InputError("hypothesis alphabet does not match the task");
  auto disagrees = [&](const Word& w) { return task_eval(task, w) != dfa_accepts(hypothesis, w); };

  const TaskTracker gt(task.dfa);
  for (int i = 0; i < budget.rollouts; ++i) {
    Rng rng = make_rng(seed ^ kCounterexampleStream, static_cast<std::uint64_t>(i));
    const Rollout r = rollout_impl(grid, gt, product, policy, horizon, rng);
    if (disagrees(r.word)) return r.word;
  }

  const int k = task.dfa.alphabet_size();
  Rng rng = make_rng(seed ^ kCounterexampleStream, 1ULL << 40);
  for (int i = 0; i < budget.random_words && k > 0; ++i) {
    Word w(uniform_index(rng, static_cast<std::size_t>(budget.max_word_length) + 1));
    for (auto& s : w) s = static_cast<LabelSymbol>(uniform_index(rng, k));
    if (disagrees(w)) return w;
  }
  if (budget.exact) {
    if (auto w = exact_equivalence(hypothesis, task.dfa); w && disagrees(*w)) return w;
  }
  return std::nullopt;
}

int rollout_horizon(const GridMap& grid, int configured) {
  return configured > 0 ? configured : 4 * (grid.width() + grid.height());
}

std::vector<Demonstration> demonstrations_for(const TaskSpec& task, const GridMap& grid,
                                              const std::vector<Word>& words,
                                              const AtigConfig& cfg) {
  std::vector<Demonstration> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!answer_membership(task, grid, words[i])) continue;
    for (auto& d : demos_for_word(task, grid, words[i], i, cfg)) out.push_back(std::move(d));
  }
  return out;
}

RewardLearningResult learn_reward(const GridMap& grid, const TaskSpec& task,
                                  const Dfa& automaton,
                                  const std::vector<Demonstration>& demonstrations,
                                  const TrainConfig& irl, const AtigConfig& cfg,
                                  std::uint64_t seed) {
  ProductMdp product = build_product(grid, automaton);
  Eigen::MatrixXd features;
  if (cfg.variant != RewardVariant::Tabular) features = encode_features(grid, product, cfg.features);
  const RewardInputs inputs{product.num_states(), kNumActions,
                            cfg.variant == RewardVariant::Tabular ? nullptr : &features};
  RewardModel model = [&] {
    switch (cfg.variant) {
      case RewardVariant::Tabular: return RewardModel::tabular(product.num_states());
      case RewardVariant::Linear: return RewardModel::linear(static_cast<int>(features.cols()));
      case RewardVariant::Mlp:
        return RewardModel::mlp(static_cast<int>(features.cols()), cfg.hidden, seed);
    }
    throw InputError("unknown reward variant");
  }();

  std::vector<ProductTrajectory> trajectories;
  for (const auto& d : demonstrations) {
    auto t = project_demo(grid, product, d);
    if (!t.empty()) trajectories.push_back(std::move(t));
  }

  const int train_horizon = rollout_horizon(grid, irl.rollout_horizon);
  const PolicyEvaluator evaluator = [&](const QMatrix<double>& pi, int t) {
    return success_ratio(grid, task, product, pi, irl.rollouts, train_horizon,
                         mix_seed(seed, static_cast<std::uint64_t>(t)))
        .beta;
  };

  TrainReport report;
  QMatrix<double> policy;
  const bool trained = !trajectories.empty();
  if (trained) {
    report = train(product, trajectories, model, inputs, irl, evaluator);
    policy = report.policy;
  } else {
    report.q = soft_value_iteration(product.transitions, model.rewards(inputs), irl.solver()).q;
    policy = soft_policy(report.q);
    report.policy = policy;
  }
  const SuccessRatio beta = evaluate_model(grid, task, product, model, irl, cfg, seed);
  return RewardLearningResult{std::move(model), std::move(report), std::move(product), beta,
                              std::move(policy), trained};
}

void check_task_grid(const GridMap& grid, const TaskSpec& task) {
  std::vector<bool> present(task.dfa.alphabet_size(), false);
  for (int i = 0; i < grid.num_cells(); ++i) {
    if (auto l = grid.label_at(i)) {
      if (*l >= task.dfa.alphabet_size())
        throw InputError("grid region type " + std::to_string(*l) + " outside the task alphabet");
      present[*l] = true;
    }
  }
  for (int s = 0; s < task.dfa.alphabet_size(); ++s) {
    if (!present[s])
      throw InputError("grid has no region of type " + std::to_string(s) + " required by task " +
                       task.name);
  }
}

AtigResult run_atig(const GridMap& grid, const TaskSpec& task, const TrainConfig& irl,
                    const AtigConfig& cfg) {
  check_task_grid(grid, task);
  if (!(cfg.kappa > 0.0 && cfg.kappa < 1.0)) throw InputError("kappa must lie in (0,1)");
  if (cfg.rollouts < 1 || cfg.demos_per_query < 1 || cfg.max_outer_iterations < 1)
    throw InputError("ATIG budgets must be at least 1");

  std::vector<Word> positive;
  MembershipOracle oracle([&](const Word& w) {
    const bool answer = answer_membership(task, grid, w);
    if (answer) positive.push_back(w);
    return answer;
  });
  ObservationTable table(task.dfa.alphabet_size());
  std::vector<Demonstration> demos;
  std::size_t demonstrated = 0;

  AtigResult result{.dfa = trivial_automaton(task.dfa.alphabet_size())};
  std::optional<Word> ce;
  const int ce_horizon = rollout_horizon(grid, cfg.rollout_horizon);

  for (int iter = 1; iter <= cfg.max_outer_iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    if (ce) process_counterexample(table, *ce, oracle, &result.dfa);
    close_and_make_consistent(table, oracle);
    result.dfa = build_hypothesis(table);
    result.hypotheses.push_back(result.dfa);
    for (; demonstrated < positive.size(); ++demonstrated) {
      for (auto& d : demos_for_word(task, grid, positive[demonstrated], demonstrated, cfg))
        demos.push_back(std::move(d));
    }

    RewardLearningResult rl = learn_reward(grid, task, result.dfa, demos, irl, cfg, cfg.seed);
    IterationLog entry{.iteration = iter,
                       .dfa_states = result.dfa.num_states(),
                       .membership_queries = oracle.num_queries(),
                       .demonstrations = demos.size(),
                       .train_iterations = rl.report.iterations,
                       .beta = rl.beta.beta};
    result.beta = rl.beta.beta;
    result.model = rl.model;
    result.policy = rl.policy;
    result.report = rl.report;
    result.product = std::move(rl.product);

    const bool satisfied = result.beta > cfg.kappa;
    if (satisfied && !cfg.counterexamples.exact) {
      result.converged = true;
    } else {
      ce = find_counterexample(grid, task, result.dfa, *result.product, result.policy,
                               cfg.counterexamples, ce_horizon,
                               mix_seed(cfg.seed, static_cast<std::uint64_t>(iter) << 32));
      entry.counterexample = ce;
      result.converged = satisfied && !ce;
    }
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    if (result.converged || !ce) break;
  }

  result.positive_words = positive;
  result.demonstrations = std::move(demos);
  result.queries = oracle.log();
  return result;
}

std::string baseline_name(Baseline b) {
  return b == Baseline::Memoryless ? "memoryless" : "info-bits";
}

Baseline parse_baseline(const std::string& name) {
  if (name == "memoryless") return Baseline::Memoryless;
  if (name == "info-bits" || name == "irl-ib") return Baseline::InfoBits;
  throw InputError("unknown baseline '" + name + "'");
}

Dfa baseline_automaton(Baseline b) {
  return b == Baseline::Memoryless ? trivial_automaton(kNumRegionTypes)
                                   : info_bits_automaton(kNumRegionTypes);
}

RewardLearningResult run_baseline(const GridMap& grid, const TaskSpec& task, Baseline which,
                                  const std::vector<Word>& positive_words,
                                  const TrainConfig& irl, const AtigConfig& cfg) {
  check_task_grid(grid, task);
  const auto demos = demonstrations_for(task, grid, positive_words, cfg);
  return learn_reward(grid, task, baseline_automaton(which), demos, irl, cfg,
                      mix_seed(cfg.seed, 0xBA5E));
}

SuccessRatio evaluate_on_env(const GridMap& grid, const TaskSpec& task, const Dfa& automaton,
                             const std::vector<Word>& positive_words, const RewardModel& trained,
                             const TrainConfig& irl, const AtigConfig& cfg, std::uint64_t seed) {
  check_task_grid(grid, task);
  if (trained.variant() == RewardVariant::Tabular) {
    AtigConfig local = cfg;
    local.variant = RewardVariant::Tabular;
    const auto demos = demonstrations_for(task, grid, positive_words, local);
    return learn_reward(grid, task, automaton, demos, irl, local, seed).beta;
  }
  return evaluate_model(grid, task, build_product(grid, automaton), trained, irl, cfg, seed);
}

SuccessRatio evaluate_model(const GridMap& grid, const TaskSpec& task, const ProductMdp& product,
                            const RewardModel& model, const TrainConfig& irl,
                            const AtigConfig& cfg, std::uint64_t seed) {
  Eigen::MatrixXd features;
  if (model.variant() != RewardVariant::Tabular)
    features = encode_features(grid, product, cfg.features);
  const RewardInputs inputs{product.num_states(), kNumActions,
                            model.variant() == RewardVariant::Tabular ? nullptr : &features};
  const auto q = soft_value_iteration(product.transitions, model.rewards(inputs), irl.solver());
  return success_ratio(grid, task, product, soft_policy(q.q), cfg.rollouts,
                       rollout_horizon(grid, cfg.rollout_horizon),
                       mix_seed(seed, kFinalEvalStream));
}

}  // namespace atig

#include "atig/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "atig/error.hpp"
#include "atig/rng.hpp"

#ifndef ATIG_DATA_DIR
#define ATIG_DATA_DIR "data"
#endif

namespace atig {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTestEnvStream = 0x7E57;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  body(out);
}

GridMap require_grid(const fs::path& path) {
  if (path.empty()) throw InputError("--env is required");
  return load_grid(path);
}

json word_json(const Word& w) { return format_word(w); }

json beta_json(const SuccessRatio& s) {
  return {{"beta", s.beta}, {"successes", s.successes}, {"rollouts", s.rollouts},
          {"horizon", s.horizon}};
}

json log_json(const std::vector<IterationLog>& log) {
  json out = json::array();
  for (const auto& e : log) {
    json row = {{"iteration", e.iteration},
                {"dfa_states", e.dfa_states},
                {"membership_queries", e.membership_queries},
                {"demonstrations", e.demonstrations},
                {"train_iterations", e.train_iterations},
                {"beta", e.beta},
                {"wall_seconds", e.wall_seconds}};
    row["counterexample"] = e.counterexample ? word_json(*e.counterexample) : json(nullptr);
    out.push_back(row);
  }
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var)};
}

void write_training_outputs(const fs::path& dir, const RewardModel& model,
                            const TrainReport& report) {
  save_model(model, dir / "model.txt");
  write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(report, o); });
}

}  // namespace

fs::path resolve_task(const std::string& task) {
  if (task == "1" || task == "2" || task == "3")
    return fs::path(ATIG_DATA_DIR) / "tasks" / ("task" + task + ".dfa");
  return task;
}

TaskSpec load_task(const std::string& task, const GridMap& grid, int horizon) {
  return TaskSpec(load_dfa(resolve_task(task)), task, horizon > 0 ? horizon : default_horizon(grid));
}

int cmd_gen_env(const GenEnvConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw InputError("--out is required");
  const GridMap grid =
      generate_random_env(cfg.width, cfg.height, cfg.regions, cfg.seed).with_slip(cfg.slip);
  save_grid(grid, cfg.out);
  out << json{{"env", cfg.out.string()}, {"labeled_centers", labeled_cells(grid).size()}}.dump(2)
      << '\n';
  return kExitOk;
}

int cmd_learn_dfa(const LearnDfaConfig& cfg, std::ostream& out) {
  if (cfg.out_dir.empty()) throw InputError("--out is required");
  const GridMap grid = require_grid(cfg.env);
  const TaskSpec task = load_task(cfg.task, grid, cfg.horizon);
  check_task_grid(grid, task);
  ensure_dir(cfg.out_dir);

  std::vector<Word> positive;
  MembershipOracle oracle([&](const Word& w) {
    const bool answer = answer_membership(task, grid, w);
    if (answer) positive.push_back(w);
    return answer;
  });
  CounterexampleBudget budget = cfg.counterexamples;
  budget.exact = budget.exact || cfg.exact;
  const int horizon = rollout_horizon(grid, 0);
  int round = 0;
  const EquivalenceFn equivalence = [&](const Dfa& hyp) {
    const ProductMdp product = build_product(grid, hyp);
    const QMatrix<double> uniform =
        QMatrix<double>::Constant(product.num_states(), kNumActions, 1.0 / kNumActions);
    return find_counterexample(grid, task, hyp, product, uniform, budget, horizon,
                               mix_seed(cfg.seed, static_cast<std::uint64_t>(++round)));
  };
  const LStarResult result = learn_dfa(task.dfa.alphabet_size(), oracle, equivalence, cfg.max_rounds);

  AtigConfig demo_cfg;
  demo_cfg.demos_per_query = cfg.demos_per_query;
  demo_cfg.seed = cfg.seed;
  const auto demos = demonstrations_for(task, grid, positive, demo_cfg);
  save_dfa(result.hypothesis, cfg.out_dir / "dfa.txt");
  save_demonstrations(demos, cfg.out_dir / "demos.txt");
  write_file(cfg.out_dir / "queries.csv", [&](std::ostream& o) { oracle.write_csv(o); });

  const bool equal = !exact_equivalence(result.hypothesis, task.dfa);
  out << json{{"dfa", (cfg.out_dir / "dfa.txt").string()},
              {"dfa_states", result.hypothesis.num_states()},
              {"state_counts", result.state_counts},
              {"membership_queries", result.membership_queries},
              {"positive_words", positive.size()},
              {"demonstrations", demos.size()},
              {"converged", result.converged},
              {"equivalent_to_task", equal}}
             .dump(2)
      << '\n';
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_train(const TrainCmdConfig& cfg, std::ostream& out) {
  if (cfg.out_dir.empty()) throw InputError("--out is required");
  const GridMap grid = require_grid(cfg.env);
  const TaskSpec task = load_task(cfg.task, grid, cfg.horizon);
  const Dfa dfa = load_dfa(cfg.dfa);
  const auto demos = load_demonstrations(grid, cfg.demos);
  ensure_dir(cfg.out_dir);

  const RewardLearningResult rl = learn_reward(grid, task, dfa, demos, cfg.irl, cfg.atig, cfg.atig.seed);
  write_training_outputs(cfg.out_dir, rl.model, rl.report);
  out << json{{"model", (cfg.out_dir / "model.txt").string()},
              {"metrics", (cfg.out_dir / "metrics.csv").string()},
              {"product_states", rl.product.num_states()},
              {"train_iterations", rl.report.iterations},
              {"trained", rl.trained},
              {"success", beta_json(rl.beta)}}
             .dump(2)
      << '\n';
  return kExitOk;
}

int cmd_evaluate(const EvalConfig& cfg, std::ostream& out) {
  const GridMap grid = require_grid(cfg.env);
  const TaskSpec task = load_task(cfg.task, grid, cfg.horizon);
  const Dfa dfa = load_dfa(cfg.dfa);
  const RewardModel model = load_model(cfg.model);
  AtigConfig atig = cfg.atig;
  atig.variant = model.variant();
  const SuccessRatio beta =
      evaluate_model(grid, task, build_product(grid, dfa), model, cfg.irl, atig, atig.seed);
  out << json{{"success", beta_json(beta)}}.dump(2) << '\n';
  return kExitOk;
}

int cmd_run(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out_dir.empty()) throw InputError("--out is required");
  if (cfg.test_envs < 0) throw InputError("--test-envs must be non-negative");
  const GridMap grid = require_grid(cfg.env);
  const TaskSpec task = load_task(cfg.task, grid, cfg.horizon);
  ensure_dir(cfg.out_dir);

  AtigResult atig = run_atig(grid, task, cfg.irl, cfg.atig);
  write_file(cfg.out_dir / "queries.csv", [&](std::ostream& o) {
    o << "index,word,answer\n";
    for (const auto& r : atig.queries)
      o << r.index << ',' << format_word(r.word) << ',' << (r.answer ? 1 : 0) << '\n';
  });
  json hypotheses = json::array();
  for (std::size_t i = 0; i < atig.hypotheses.size(); ++i) {
    const fs::path p = cfg.out_dir / ("hypothesis_" + std::to_string(i + 1) + ".dfa");
    save_dfa(atig.hypotheses[i], p);
    hypotheses.push_back(p.string());
  }
  save_demonstrations(atig.demonstrations, cfg.out_dir / "demos.txt");

  json summary = {{"task", task.name},
                  {"env", cfg.env.string()},
                  {"seed", cfg.atig.seed},
                  {"variant", variant_name(cfg.atig.variant)},
                  {"iterations", log_json(atig.log)},
                  {"hypotheses", hypotheses},
                  {"membership_queries", atig.queries.size()},
                  {"positive_words", atig.positive_words.size()},
                  {"demonstrations", atig.demonstrations.size()},
                  {"converged", atig.converged}};

  Dfa automaton = atig.dfa;
  RewardModel model = *atig.model;
  double train_beta = atig.beta;
  int code = atig.converged ? kExitOk : kExitNotConverged;
  if (cfg.baseline) {
    RewardLearningResult rl =
        run_baseline(grid, task, *cfg.baseline, atig.positive_words, cfg.irl, cfg.atig);
    automaton = baseline_automaton(*cfg.baseline);
    model = rl.model;
    train_beta = rl.beta.beta;
    write_training_outputs(cfg.out_dir, rl.model, rl.report);
    summary["method"] = baseline_name(*cfg.baseline);
    summary["atig_beta"] = atig.beta;
    code = kExitOk;
  } else {
    write_training_outputs(cfg.out_dir, model, atig.report);
    summary["method"] = "atig";
  }
  save_dfa(automaton, cfg.out_dir / "dfa.txt");
  summary["dfa"] = (cfg.out_dir / "dfa.txt").string();
  summary["model"] = (cfg.out_dir / "model.txt").string();
  summary["metrics"] = (cfg.out_dir / "metrics.csv").string();
  summary["train_beta"] = train_beta;
  summary["dfa_equivalent_to_task"] = !exact_equivalence(atig.dfa, task.dfa);

  std::vector<double> betas;
  for (int i = 0; i < cfg.test_envs; ++i) {
    const std::uint64_t env_seed = mix_seed(cfg.atig.seed ^ kTestEnvStream, static_cast<std::uint64_t>(i));
    const GridMap test = generate_random_env(cfg.test_width, cfg.test_height, cfg.test_regions,
                                             env_seed).with_slip(grid.slip());
    const TaskSpec test_task(task.dfa, task.name, cfg.horizon > 0 ? cfg.horizon : default_horizon(test));
    betas.push_back(evaluate_on_env(test, test_task, automaton, atig.positive_words, model,
                                    cfg.irl, cfg.atig, env_seed)
                        .beta);
  }
  const auto [mean, stddev] = mean_std(betas);
  summary["test"] = {{"envs", cfg.test_envs}, {"betas", betas}, {"mean", mean}, {"std", stddev}};

  write_file(cfg.out_dir / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  out << summary.dump(2) << '\n';
  return code;
}

namespace {

void add_train_options(CLI::App& app, TrainConfig& irl, AtigConfig& atig, std::string& variant,
                       int& rollout_h) {
  app.add_option("--variant", variant, "reward model: tabular, linear, mlp")->capture_default_str();
  app.add_option("--gamma", irl.gamma)->capture_default_str();
  app.add_option("--lr", irl.learning_rate, "learning rate")->capture_default_str();
  app.add_flag("--decay", irl.decay, "learning rate / sqrt(t+1)");
  app.add_option("--vi-tol", irl.vi_tolerance)->capture_default_str();
  app.add_option("--vi-max", irl.vi_max_sweeps)->capture_default_str();
  app.add_option("--eval-period", irl.eval_period)->capture_default_str();
  app.add_option("--stop-eps", irl.stop_threshold)->capture_default_str();
  app.add_option("--min-iters", irl.min_iterations)->capture_default_str();
  app.add_option("--max-iters", irl.max_iterations)->capture_default_str();
  app.add_option("--train-rollouts", irl.rollouts, "rollouts per evaluation during training")
      ->capture_default_str();
  app.add_option("--rollouts", atig.rollouts, "rollouts for reported success ratios")
      ->capture_default_str();
  app.add_option("--rollout-horizon", rollout_h, "0: 4 * (W + H)")->capture_default_str();
  app.add_flag("--dense-gradient", irl.dense_gradient);
  app.add_option("--neighborhood", atig.features.neighborhood)->capture_default_str();
  app.add_option("--dfa-slots", atig.features.dfa_slots)->capture_default_str();
  app.add_option("--hidden", atig.hidden, "mlp hidden layer sizes");
}

void add_outer_options(CLI::App& app, AtigConfig& atig) {
  app.add_option("--kappa", atig.kappa)->capture_default_str();
  app.add_option("--demos-per-query", atig.demos_per_query)->capture_default_str();
  app.add_option("--max-outer", atig.max_outer_iterations)->capture_default_str();
  app.add_option("--ce-rollouts", atig.counterexamples.rollouts)->capture_default_str();
  app.add_option("--ce-words", atig.counterexamples.random_words)->capture_default_str();
  app.add_option("--ce-length", atig.counterexamples.max_word_length)->capture_default_str();
  app.add_flag("--exact", atig.counterexamples.exact, "exact equivalence test mode");
}

void finish_train_options(TrainConfig& irl, AtigConfig& atig, const std::string& variant,
                          int rollout_h, std::uint64_t seed) {
  atig.variant = parse_variant(variant);
  irl.rollout_horizon = rollout_h;
  atig.rollout_horizon = rollout_h;
  irl.seed = seed;
  atig.seed = seed;
}

int exit_for(const std::exception& e, std::ostream& err, int code) {
  err << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active task-inference-guided inverse reinforcement learning on grid worlds"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file; keys go under a [subcommand] section");
  app.fallthrough();
  std::uint64_t seed = 0;
  std::string variant = "tabular";
  int rollout_h = 0;

  GenEnvConfig gen;
  auto* gen_cmd = app.add_subcommand("gen-env", "generate a random environment");
  gen_cmd->add_option("--width", gen.width)->capture_default_str();
  gen_cmd->add_option("--height", gen.height)->capture_default_str();
  gen_cmd->add_option("--regions", gen.regions, "regions per type")->capture_default_str();
  gen_cmd->add_option("--slip", gen.slip)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->required();
  gen_cmd->add_option("--out", gen.out)->required();

  LearnDfaConfig ld;
  auto* ld_cmd = app.add_subcommand("learn-dfa", "infer the task DFA with L*");
  ld_cmd->add_option("--env", ld.env)->required();
  ld_cmd->add_option("--task", ld.task, "1, 2, 3 or a DFA file")->capture_default_str();
  ld_cmd->add_option("--horizon", ld.horizon, "execution horizon; 0: 4 * (W + H)");
  ld_cmd->add_flag("--exact", ld.exact, "exact equivalence test mode");
  ld_cmd->add_option("--ce-rollouts", ld.counterexamples.rollouts)->capture_default_str();
  ld_cmd->add_option("--ce-words", ld.counterexamples.random_words)->capture_default_str();
  ld_cmd->add_option("--ce-length", ld.counterexamples.max_word_length)->capture_default_str();
  ld_cmd->add_option("--demos-per-query", ld.demos_per_query)->capture_default_str();
  ld_cmd->add_option("--max-rounds", ld.max_rounds)->capture_default_str();
  ld_cmd->add_option("--seed", ld.seed)->required();
  ld_cmd->add_option("--out", ld.out_dir)->required();

  TrainCmdConfig tr;
  auto* tr_cmd = app.add_subcommand("train", "fit a reward model to saved demonstrations");
  tr_cmd->add_option("--env", tr.env)->required();
  tr_cmd->add_option("--dfa", tr.dfa)->required();
  tr_cmd->add_option("--demos", tr.demos)->required();
  tr_cmd->add_option("--task", tr.task)->capture_default_str();
  tr_cmd->add_option("--horizon", tr.horizon);
  add_train_options(*tr_cmd, tr.irl, tr.atig, variant, rollout_h);
  tr_cmd->add_option("--seed", seed)->required();
  tr_cmd->add_option("--out", tr.out_dir)->required();

  EvalConfig ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "success ratio of a saved model");
  ev_cmd->add_option("--env", ev.env)->required();
  ev_cmd->add_option("--dfa", ev.dfa)->required();
  ev_cmd->add_option("--model", ev.model)->required();
  ev_cmd->add_option("--task", ev.task)->capture_default_str();
  ev_cmd->add_option("--horizon", ev.horizon);
  ev_cmd->add_option("--gamma", ev.irl.gamma)->capture_default_str();
  ev_cmd->add_option("--vi-tol", ev.irl.vi_tolerance)->capture_default_str();
  ev_cmd->add_option("--vi-max", ev.irl.vi_max_sweeps)->capture_default_str();
  ev_cmd->add_option("--rollouts", ev.atig.rollouts)->capture_default_str();
  ev_cmd->add_option("--rollout-horizon", rollout_h)->capture_default_str();
  ev_cmd->add_option("--neighborhood", ev.atig.features.neighborhood)->capture_default_str();
  ev_cmd->add_option("--dfa-slots", ev.atig.features.dfa_slots)->capture_default_str();
  ev_cmd->add_option("--seed", seed)->required();

  RunConfig run;
  std::string baseline;
  auto* run_cmd = app.add_subcommand("run", "full pipeline with test-environment evaluation");
  run_cmd->add_option("--env", run.env)->required();
  run_cmd->add_option("--task", run.task)->capture_default_str();
  run_cmd->add_option("--horizon", run.horizon);
  run_cmd->add_option("--baseline", baseline, "memoryless or info-bits");
  run_cmd->add_option("--test-envs", run.test_envs)->capture_default_str();
  run_cmd->add_option("--test-width", run.test_width)->capture_default_str();
  run_cmd->add_option("--test-height", run.test_height)->capture_default_str();
  run_cmd->add_option("--test-regions", run.test_regions)->capture_default_str();
  add_train_options(*run_cmd, run.irl, run.atig, variant, rollout_h);
  add_outer_options(*run_cmd, run.atig);
  run_cmd->add_option("--seed", seed)->required();
  run_cmd->add_option("--out", run.out_dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*gen_cmd) return cmd_gen_env(gen, out);
    if (*ld_cmd) return cmd_learn_dfa(ld, out);
    if (*tr_cmd) {
      finish_train_options(tr.irl, tr.atig, variant, rollout_h, seed);
      return cmd_train(tr, out);
    }
    if (*ev_cmd) {
      ev.atig.rollout_horizon = rollout_h;
      ev.irl.rollout_horizon = rollout_h;
      ev.atig.seed = seed;
      return cmd_evaluate(ev, out);
    }
    finish_train_options(run.irl, run.atig, variant, rollout_h, seed);
    if (!baseline.empty()) run.baseline = parse_baseline(baseline);
    return cmd_run(run, out);
  } catch (const InputError& e) {
    return exit_for(e, err, kExitInput);
  } catch (const GenerationError& e) {
    return exit_for(e, err, kExitInput);
  } catch (const ConvergenceError& e) {
    return exit_for(e, err, kExitNotConverged);
  } catch (const std::exception& e) {
    return exit_for(e, err, kExitInternal);
  }
}

}  // namespace atig

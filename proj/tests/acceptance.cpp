// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "atig/commands.hpp"
#include "atig/irl.hpp"
#include "atig/orchestrator.hpp"
#include "atig/soft_bellman.hpp"
#include "support.hpp"

using namespace atig;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

Outcome dfa_recovery() {
  Outcome o;
  const GridMap g = testing::train_env();
  for (int n = 1; n <= 3; ++n) {
    const TaskSpec task = testing::fixture_task(n, g);
    AtigConfig cfg;
    cfg.seed = 1;
    cfg.counterexamples.exact = true;
    const auto t0 = Clock::now();
    const AtigResult r = run_atig(g, task, TrainConfig{}, cfg);
    const double secs = seconds_since(t0);
    const bool equal = !exact_equivalence(r.dfa, task.dfa);
    o.detail << " task" << n << ": iterations=" << r.log.size() << " queries=" << r.queries.size()
             << " states=" << r.dfa.num_states() << " equal=" << (equal ? "yes" : "no")
             << " time=" << fmt(secs, 2) << "s;";
    const std::string tag = "task" + std::to_string(n);
    o.require(equal, tag + " language differs");
    o.require(r.log.size() <= 3, tag + " needs " + std::to_string(r.log.size()) + " > 3 iterations");
    o.require(r.queries.size() <= 2000, tag + " query budget");
    o.require(secs < 10.0, tag + " time");
  }
  return o;
}

Outcome gradient_oracle() {
  Outcome o;
  Rng rng = make_rng(2718);
  const SolverOptions opts{0.8, 1e-12, 100000};
  const auto t0 = Clock::now();
  int instances = 0;
  double worst = 0.0;
  while (instances < 24) {
    const GridMap g = testing::random_grid(rng, 3 + static_cast<int>(uniform_index(rng, 3)),
                                           3 + static_cast<int>(uniform_index(rng, 3)),
                                           0.3 * uniform01(rng));
    const Dfa d = testing::random_dfa(rng, 1 + static_cast<int>(uniform_index(rng, 3)), 4);
    const ProductMdp p = build_product(g, d, InitialMode::UniformUnlabeled);
    if (p.num_states() > 50) continue;

    std::vector<ProductTrajectory> trajs;
    for (int i = 0; i < 3; ++i) {
      ProductTrajectory traj;
      int z = p.initial[uniform_index(rng, p.initial.size())].first;
      for (int t = 0; t < 8 && !p.is_absorbing(z); ++t) {
        const int a = static_cast<int>(uniform_index(rng, kNumActions));
        traj.push_back({z, a});
        double u = uniform01(rng);
        for (ProductMdp::TransitionMatrix::InnerIterator it(p.transitions, z * kNumActions + a);
             it; ++it) {
          z = static_cast<int>(it.col());
          u -= it.value();
          if (u < 0.0) break;
        }
      }
      if (!traj.empty()) trajs.push_back(std::move(traj));
    }
    if (trajs.empty()) continue;

    const Eigen::MatrixXd f = encode_features(g, p, {3, 3});
    const int kind = instances % 3;
    RewardModel model = kind == 0   ? RewardModel::tabular(p.num_states())
                        : kind == 1 ? RewardModel::linear(static_cast<int>(f.cols()))
                                    : RewardModel::mlp(static_cast<int>(f.cols()), {6}, instances);
    for (Eigen::Index i = 0; i < model.dim(); ++i)
      model.params()(i) += 0.3 * (2.0 * uniform01(rng) - 1.0);
    const RewardInputs in{p.num_states(), kNumActions, &f};

    const auto q = soft_value_iteration(p.transitions, model.rewards(in), opts).q;
    const QMatrix<double> pi = soft_policy(q);
    const Eigen::VectorXd analytic =
        loglik_and_grad_adjoint(p, trajs, model, in, q, pi, opts).gradient;
    Eigen::VectorXd fd(model.dim());
    const double h = 1e-5;
    for (Eigen::Index k = 0; k < model.dim(); ++k) {
      const double saved = model.params()(k);
      model.params()(k) = saved + h;
      const double plus = loglik_at(p, trajs, model, in, opts);
      model.params()(k) = saved - h;
      const double minus = loglik_at(p, trajs, model, in, opts);
      model.params()(k) = saved;
      fd(k) = (plus - minus) / (2 * h);
    }
    const double rel = (analytic - fd).norm() / std::max(fd.norm(), 1e-12);
    worst = std::max(worst, rel);
    ++instances;
  }
  const double secs = seconds_since(t0);
  o.detail << " instances=" << instances << " worst relative error=" << sci(worst)
           << " time=" << fmt(secs, 2) << "s";
  o.require(worst <= 1e-4, "relative error");
  o.require(secs < 60.0, "time");
  return o;
}

TransitionMatrix sparse(int rows, int cols, const std::vector<std::array<double, 3>>& entries) {
  std::vector<Eigen::Triplet<double>> t;
  for (const auto& e : entries) t.emplace_back(static_cast<int>(e[0]), static_cast<int>(e[1]), e[2]);
  TransitionMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Outcome soft_fixed_points() {
  Outcome o;
  double worst = 0.0;
  for (double gamma : {0.5, 0.9, 0.95}) {
    const SolverOptions opts{gamma, 1e-13, 1000000};
    const auto one = sparse(1, 1, {{0, 0, 1.0}});
    const auto q1 = soft_value_iteration<double>(one, QMatrix<double>::Constant(1, 1, 1.0), opts);
    worst = std::max(worst, std::abs(q1.q(0, 0) - 1.0 / (1.0 - gamma)));
    for (int na : {2, 4}) {
      std::vector<std::array<double, 3>> e;
      for (int a = 0; a < na; ++a) e.push_back({static_cast<double>(a), 0, 1.0});
      const auto q = soft_value_iteration<double>(sparse(na, 1, e), QMatrix<double>::Zero(1, na), opts);
      const double expected = gamma * std::log(static_cast<double>(na)) / (1.0 - gamma);
      worst = std::max(worst, (q.q.array() - expected).abs().maxCoeff());
    }
  }
  Rng rng = make_rng(31);
  double row_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    QMatrix<double> q(20, 4);
    for (int i = 0; i < q.size(); ++i) q.data()[i] = 50.0 * (2.0 * uniform01(rng) - 1.0);
    row_err = std::max(row_err, (soft_policy(q).rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  o.detail << " closed-form max error=" << sci(worst) << " softmax row-sum error=" << sci(row_err);
  o.require(worst <= 1e-8, "closed forms");
  o.require(row_err <= 1e-12, "softmax rows");
  return o;
}

Outcome trajectory_law() {
  Outcome o;
  // Depth-4 binary tree, deterministic moves, undiscounted; leaves are terminal.
  const int depth = 4, na = 2;
  const int internal = (1 << depth) - 1, nz = (1 << (depth + 1)) - 1;
  std::vector<std::array<double, 3>> e;
  std::vector<bool> terminal(nz, false);
  for (int z = 0; z < nz; ++z) {
    for (int a = 0; a < na; ++a) {
      const double to = z < internal ? 2 * z + 1 + a : z;
      e.push_back({static_cast<double>(z * na + a), to, 1.0});
    }
    terminal[z] = z >= internal;
  }
  const auto p = sparse(nz * na, nz, e);
  Rng rng = make_rng(4);
  QMatrix<double> r(nz, na);
  for (int i = 0; i < r.size(); ++i) r.data()[i] = 2.0 * (2.0 * uniform01(rng) - 1.0);
  const auto q = soft_backup_acyclic(p, r, terminal);
  const auto pi = soft_policy(q);

  std::vector<std::pair<double, double>> paths;
  double partition = 0.0;
  std::function<void(int, double, double)> walk = [&](int z, double ret, double prob) {
    if (terminal[z]) {
      partition += std::exp(ret);
      paths.emplace_back(ret, prob);
      return;
    }
    for (int a = 0; a < na; ++a) walk(2 * z + 1 + a, ret + r(z, a), prob * pi(z, a));
  };
  walk(0, 0.0, 1.0);
  double worst = 0.0;
  for (const auto& [ret, prob] : paths)
    worst = std::max(worst, std::abs(prob - std::exp(ret) / partition));
  o.detail << " trajectories=" << paths.size() << " max |Pr - exp(R)/Z|=" << sci(worst);
  o.require(paths.size() == 16, "trajectory count");
  o.require(worst <= 1e-8, "trajectory law");
  return o;
}

struct MethodScores {
  double atig = 0.0, info_bits = 0.0, memoryless = 0.0;
  double seconds = 0.0;
};

json run_method(const std::string& task, const std::optional<Baseline>& baseline,
                const fs::path& out) {
  RunConfig cfg;
  cfg.env = testing::data_path("envs/train12.env");
  cfg.task = task;
  cfg.atig.seed = 1;
  cfg.irl.seed = 1;
  cfg.baseline = baseline;
  cfg.test_envs = 10;
  cfg.out_dir = out;
  std::ostringstream text;
  cmd_run(cfg, text);
  return json::parse(text.str());
}

MethodScores table_v(const std::string& task, const fs::path& root) {
  MethodScores s;
  const auto t0 = Clock::now();
  s.atig = run_method(task, std::nullopt, root / ("atig" + task))["test"]["mean"];
  s.info_bits = run_method(task, Baseline::InfoBits, root / ("ib" + task))["test"]["mean"];
  s.memoryless = run_method(task, Baseline::Memoryless, root / ("ml" + task))["test"]["mean"];
  s.seconds = seconds_since(t0);
  return s;
}

std::string describe(const MethodScores& s) {
  return " ATIG=" + fmt(s.atig, 4) + " IRL-IB=" + fmt(s.info_bits, 4) +
         " memoryless=" + fmt(s.memoryless, 4) + " time=" + fmt(s.seconds, 1) + "s";
}

Outcome table_v_task3(const fs::path& root) {
  Outcome o;
  const MethodScores s = table_v("3", root);
  o.detail << describe(s);
  o.require(s.atig >= 0.85, "ATIG mean");
  o.require(s.info_bits <= 0.5, "IRL-IB mean");
  o.require(s.memoryless <= 0.1, "memoryless mean");
  o.require(s.atig > s.info_bits && s.info_bits > s.memoryless, "ordering");
  o.require(s.atig >= 9.0 * s.memoryless, "ATIG vs memoryless ratio");
  o.require(s.seconds <= 900.0, "time");
  return o;
}

Outcome table_v_tasks12(const fs::path& root) {
  Outcome o;
  for (const std::string task : {"1", "2"}) {
    const MethodScores s = table_v(task, root);
    o.detail << " task" << task << ":" << describe(s) << ";";
    o.require(s.atig >= 0.85, "task" + task + " ATIG mean");
    o.require(std::abs(s.info_bits - s.atig) <= 0.15, "task" + task + " IRL-IB gap");
    o.require(s.memoryless <= 0.1, "task" + task + " memoryless mean");
    o.require(s.seconds <= 900.0, "task" + task + " time");
  }
  return o;
}

Outcome planner_suite() {
  Outcome o;
  Rng rng = make_rng(77);
  int pairs = 0, optimal = 0, realized = 0, demos = 0, replayed = 0;
  auto check_demo = [&](const GridMap& g, const Demonstration& d, const Word& w) {
    ++demos;
    replayed += replay_matches(g, d) && d.labels == w;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const GridMap g = generate_random_env(9 + trial % 6, 9 + trial % 4, 1, 1000 + trial);
    const Cell start = demonstrator_start(g);
    const Word w = testing::random_word(rng, 4, 5);
    const auto expected = testing::reference_plan_length(g, start, w);
    const auto demo = plan_execution(g, start, w, 1 << 20);
    ++pairs;
    const bool agree = demo.has_value() == expected.has_value() &&
                       (!demo || static_cast<int>(demo->length()) == *expected);
    optimal += agree;
    if (demo) {
      ++realized;
      check_demo(g, *demo, w);
    }
  }

  const GridMap g = testing::train_env();
  int words = 0, agreements = 0;
  for (int n = 1; n <= 3; ++n) {
    const TaskSpec task = testing::fixture_task(n, g);
    for (const Word& w : testing::all_words(4, 5)) {
      ++words;
      const bool answer = answer_membership(task, g, w);
      agreements += answer == task_eval(task, w);
      if (answer) {
        for (const auto& d : demonstrate(task, g, w, 2, words)) check_demo(g, d, w);
      }
    }
  }
  o.detail << " planner optimal " << optimal << "/" << pairs << " (realizable " << realized
           << "); membership agrees " << agreements << "/" << words << "; replay " << replayed
           << "/" << demos;
  o.require(optimal == pairs, "planner optimality");
  o.require(agreements == words, "membership agreement");
  o.require(replayed == demos, "replay soundness");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism(const fs::path& root) {
  Outcome o;
  run_method("3", std::nullopt, root / "det_a");
  run_method("3", std::nullopt, root / "det_b");
  for (const char* f : {"metrics.csv", "model.txt"}) {
    const std::string a = slurp(root / "det_a" / f), b = slurp(root / "det_b" / f);
    o.detail << " " << f << ": " << a.size() << " bytes " << (a == b ? "identical" : "DIFFER") << ";";
    o.require(!a.empty() && a == b, std::string(f) + " differs");
  }
  return o;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "atig_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"DFA recovery (exact test mode)", dfa_recovery},
      {"gradient oracle", gradient_oracle},
      {"soft fixed points", soft_fixed_points},
      {"maximum entropy trajectory law", trajectory_law},
      {"task 3 success ratios", [&] { return table_v_task3(root); }},
      {"task 1 and 2 success ratios", [&] { return table_v_tasks12(root); }},
      {"planner and demonstrator suite", planner_suite},
      {"determinism of run outputs", [&] { return determinism(root); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "):" << o.detail.str() << std::endl;
  }
  fs::remove_all(root);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

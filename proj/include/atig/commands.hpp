#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "atig/irl.hpp"
#include "atig/orchestrator.hpp"

namespace atig {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitNotConverged = 3,
  kExitInternal = 4,
};

/// Path of a shipped task fixture ("1", "2", "3"), or the argument itself when it names a file.
std::filesystem::path resolve_task(const std::string& task);
TaskSpec load_task(const std::string& task, const GridMap& grid, int horizon);

struct GenEnvConfig {
  int width = 12;
  int height = 12;
  int regions = 1;
  double slip = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct LearnDfaConfig {
  std::filesystem::path env;
  std::string task = "3";
  int horizon = 0;
  bool exact = false;
  CounterexampleBudget counterexamples;
  int demos_per_query = 10;
  int max_rounds = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

struct TrainCmdConfig {
  std::filesystem::path env;
  std::filesystem::path dfa;
  std::filesystem::path demos;
  std::string task = "3";
  int horizon = 0;
  TrainConfig irl;
  AtigConfig atig;
  std::filesystem::path out_dir;
};

struct EvalConfig {
  std::filesystem::path env;
  std::filesystem::path dfa;
  std::filesystem::path model;
  std::string task = "3";
  int horizon = 0;
  TrainConfig irl;
  AtigConfig atig;
};

struct RunConfig {
  std::filesystem::path env;
  std::string task = "3";
  int horizon = 0;  ///< membership execution horizon; 0: 4 * (W + H)
  TrainConfig irl;
  AtigConfig atig;
  std::optional<Baseline> baseline;
  int test_envs = 10;
  int test_width = 12;
  int test_height = 12;
  int test_regions = 1;
  std::filesystem::path out_dir;
};

/// Each command writes its files, prints a short JSON summary to `out`, and returns an exit
/// code. Errors propagate as exceptions; run_cli maps them to exit codes.
int cmd_gen_env(const GenEnvConfig& cfg, std::ostream& out);
int cmd_learn_dfa(const LearnDfaConfig& cfg, std::ostream& out);
int cmd_train(const TrainCmdConfig& cfg, std::ostream& out);
int cmd_evaluate(const EvalConfig& cfg, std::ostream& out);
int cmd_run(const RunConfig& cfg, std::ostream& out);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace atig

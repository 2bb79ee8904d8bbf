#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "atig/automata.hpp"
#include "atig/grid_env.hpp"

namespace atig {

/// Ground-truth task: T(w) = 1 iff the DFA accepts w. `horizon` is the step budget per
/// subgoal of an executed word.
struct TaskSpec {
  TaskSpec(Dfa dfa, std::string name, int horizon);

  Dfa dfa;
  std::string name;
  int horizon;
};

/// Default demonstrator horizon for a grid: 4 * (W + H).
int default_horizon(const GridMap& grid);

/// A grid trajectory: cells s_0..s_k, actions a_0..a_{k-1}, and the labels it emits.
struct Demonstration {
  std::vector<Cell> cells;
  std::vector<Action> actions;
  Word labels;
  std::string provenance;

  std::size_t length() const { return actions.size(); }
};

bool task_eval(const TaskSpec& task, const Word& w);

/// Start cell used by the demonstrator: the grid start, or the first unlabeled cell.
Cell demonstrator_start(const GridMap& grid);

/// Shortest deterministic path from `start` whose emitted labels are exactly `w`, at most
/// `horizon` steps long. Among shortest paths, the lowest action index wins at each step.
std::optional<Demonstration> plan_execution(const GridMap& grid, Cell start, const Word& w,
                                            int horizon);

/// Length of the shortest exact realization of `w`, computed by forward breadth-first search
/// without a horizon limit; nullopt if impossible.
std::optional<int> shortest_realization_length(const GridMap& grid, Cell start, const Word& w);

/// Step budget for executing `w`: horizon * max(1, |w|).
int execution_horizon(const TaskSpec& task, const Word& w);

/// False when `w` cannot be executed within its execution horizon, otherwise T(w).
bool answer_membership(const TaskSpec& task, const GridMap& grid, const Word& w);

/// `n` demonstrations realizing `w`, diversified by random tie-breaking among shortest paths
/// and by start cells sampled from rho. Throws StateError unless the membership answer is true.
std::vector<Demonstration> demonstrate(const TaskSpec& task, const GridMap& grid, const Word& w,
                                       int n, std::uint64_t seed,
                                       InitialMode mode = InitialMode::Start);

/// Replays the actions from the first cell with deterministic dynamics and checks the cells
/// and labels. Returns false on any mismatch.
bool replay_matches(const GridMap& grid, const Demonstration& demo);

/// One line per trajectory: "startX startY ACTIONS word..." with "-" for no actions.
void save_demonstrations(const std::vector<Demonstration>& demos,
                         const std::filesystem::path& path);
/// Loads and replays demonstrations; throws InputError on malformed or inconsistent records.
std::vector<Demonstration> load_demonstrations(const GridMap& grid,
                                               const std::filesystem::path& path);

}  // namespace atig

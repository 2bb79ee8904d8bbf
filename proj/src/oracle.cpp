#include "atig/oracle.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "atig/error.hpp"
#include "atig/rng.hpp"

namespace atig {

TaskSpec::TaskSpec(Dfa dfa_, std::string name_, int horizon_)
    : dfa(std::move(dfa_)), name(std::move(name_)), horizon(horizon_) {
  if (horizon < 1) throw InputError("task horizon must be at least 1");
}

int default_horizon(const GridMap& grid) { return 4 * (grid.width() + grid.height()); }

bool task_eval(const TaskSpec& task, const Word& w) { return dfa_accepts(task.dfa, w); }

Cell demonstrator_start(const GridMap& grid) {
  if (grid.start()) return *grid.start();
  for (int i = 0; i < grid.num_cells(); ++i) {
    if (!grid.label_at(i)) return grid.cell_at(i);
  }
  throw InputError("grid has no unlabeled cell to start from");
}

namespace {

/// Graph over (cell, progress) where progress counts how much of the word has been emitted.
/// Edges that would emit a label other than the next expected one are absent.
class LayeredGraph {
 public:
  LayeredGraph(const GridMap& grid, const Word& w)
      : grid_(grid), word_(w), layers_(static_cast<int>(w.size()) + 1) {}

  int num_nodes() const { return grid_.num_cells() * layers_; }
  int node(int cell, int progress) const { return progress * grid_.num_cells() + cell; }
  int cell_of(int node) const { return node % grid_.num_cells(); }
  bool is_goal(int node) const { return node / grid_.num_cells() == layers_ - 1; }

  /// Node reached by the initial emission at `start`, or -1 if it already violates the word.
  int start_node(Cell start) const {
    auto l = grid_.label(start);
    if (!l) return node(grid_.index(start), 0);
    if (!word_.empty() && word_[0] == *l) return node(grid_.index(start), 1);
    return -1;
  }

  int successor(int from, Action a) const {
    const int progress = from / grid_.num_cells();
    const Cell c = grid_.cell_at(cell_of(from));
    const Cell next = apply_move(grid_, c, a);
    auto l = entry_label(grid_, c, next);
    if (!l) return node(grid_.index(next), progress);
    if (progress < static_cast<int>(word_.size()) && word_[progress] == *l)
      return node(grid_.index(next), progress + 1);
    return -1;
  }

  /// Steps-to-goal for every node by backward breadth-first search; -1 if the goal layer is
  /// unreachable.
  std::vector<int> distance_to_goal() const {
    const int n = num_nodes();
    std::vector<std::vector<int>> reverse(n);
    for (int u = 0; u < n; ++u) {
      for (Action a : kAllActions) {
        if (int v = successor(u, a); v >= 0 && v != u) reverse[v].push_back(u);
      }
    }
    std::vector<int> dist(n, -1);
    std::deque<int> queue;
    for (int u = 0; u < n; ++u) {
      if (is_goal(u)) {
        dist[u] = 0;
        queue.push_back(u);
      }
    }
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (int u : reverse[v]) {
        if (dist[u] < 0) {
          dist[u] = dist[v] + 1;
          queue.push_back(u);
        }
      }
    }
    return dist;
  }

 private:
  const GridMap& grid_;
  const Word& word_;
  int layers_;
};

/// Walks a shortest path; `rng` null picks the first optimal action, otherwise uniform.
Demonstration walk_shortest(const GridMap& grid, const LayeredGraph& graph,
                            const std::vector<int>& dist, int start_node, Rng* rng) {
  Demonstration demo;
  int u = start_node;
  demo.cells.push_back(grid.cell_at(graph.cell_of(u)));
  while (dist[u] > 0) {
    std::vector<std::pair<Action, int>> options;
    for (Action a : kAllActions) {
      const int v = graph.successor(u, a);
      if (v >= 0 && dist[v] == dist[u] - 1) options.emplace_back(a, v);
    }
    const auto& [a, v] = rng ? options[uniform_index(*rng, options.size())] : options.front();
    demo.actions.push_back(a);
    u = v;
    demo.cells.push_back(grid.cell_at(graph.cell_of(u)));
  }
  demo.labels = emitted_labels(grid, demo.cells);
  return demo;
}

}  // namespace

std::optional<Demonstration> plan_execution(const GridMap& grid, Cell start, const Word& w,
                                            int horizon) {
  if (!grid.in_bounds(start)) throw InputError("start cell out of bounds");
  LayeredGraph graph(grid, w);
  const int s = graph.start_node(start);
  if (s < 0) return std::nullopt;
  const std::vector<int> dist = graph.distance_to_goal();
  if (dist[s] < 0 || dist[s] > horizon) return std::nullopt;
  Demonstration demo = walk_shortest(grid, graph, dist, s, nullptr);
  demo.provenance = "query " + format_word(w);
  return demo;
}

std::optional<int> shortest_realization_length(const GridMap& grid, Cell start, const Word& w) {
  LayeredGraph graph(grid, w);
  const int s = graph.start_node(start);
  if (s < 0) return std::nullopt;
  std::vector<int> dist(graph.num_nodes(), -1);
  std::deque<int> queue{s};
  dist[s] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (graph.is_goal(u)) return dist[u];
    for (Action a : kAllActions) {
      const int v = graph.successor(u, a);
      if (v >= 0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return std::nullopt;
}

int execution_horizon(const TaskSpec& task, const Word& w) {
  const long long h = static_cast<long long>(task.horizon) * std::max<std::size_t>(1, w.size());
  return static_cast<int>(std::min<long long>(h, std::numeric_limits<int>::max()));
}

bool answer_membership(const TaskSpec& task, const GridMap& grid, const Word& w) {
  if (!plan_execution(grid, demonstrator_start(grid), w, execution_horizon(task, w))) return false;
  return task_eval(task, w);
}

std::vector<Demonstration> demonstrate(const TaskSpec& task, const GridMap& grid, const Word& w,
                                       int n, std::uint64_t seed, InitialMode mode) {
  if (!answer_membership(task, grid, w))
    throw StateError("cannot demonstrate '" + format_word(w) + "': membership answer is false");
  LayeredGraph graph(grid, w);
  const std::vector<int> dist = graph.distance_to_goal();
  const auto rho = initial_distribution(grid, mode);
  const int fallback = graph.start_node(demonstrator_start(grid));

  std::vector<Demonstration> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    int s = fallback;
    if (rho.size() > 1) {
      double u = uniform01(rng);
      for (const auto& [cell, p] : rho) {
        u -= p;
        if (u < 0.0) {
          s = graph.start_node(cell);
          break;
        }
      }
      if (s < 0 || dist[s] < 0 || dist[s] > execution_horizon(task, w)) s = fallback;
    }
    Demonstration demo = walk_shortest(grid, graph, dist, s, &rng);
    demo.provenance = "query " + format_word(w);
    out.push_back(std::move(demo));
  }
  return out;
}

bool replay_matches(const GridMap& grid, const Demonstration& demo) {
  if (demo.cells.size() != demo.actions.size() + 1) return false;
  if (!grid.in_bounds(demo.cells.front())) return false;
  for (std::size_t t = 0; t < demo.actions.size(); ++t) {
    if (apply_move(grid, demo.cells[t], demo.actions[t]) != demo.cells[t + 1]) return false;
  }
  return emitted_labels(grid, demo.cells) == demo.labels;
}

void save_demonstrations(const std::vector<Demonstration>& demos,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write demonstrations file " + path.string());
  for (const auto& d : demos) {
    out << d.cells.front().x << ' ' << d.cells.front().y << ' ';
    if (d.actions.empty()) out << '-';
    for (Action a : d.actions) out << action_code(a);
    for (LabelSymbol s : d.labels) out << ' ' << s;
    out << '\n';
  }
}

std::vector<Demonstration> load_demonstrations(const GridMap& grid,
                                               const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open demonstrations file " + path.string());
  std::vector<Demonstration> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    int x, y;
    std::string actions;
    if (!(ls >> x >> y >> actions)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InputError("demonstrations line " + std::to_string(line_no) +
                       ": expected 'x y ACTIONS word...'");
    }
    Demonstration d;
    d.cells.push_back({x, y});
    if (!grid.in_bounds(d.cells.front()))
      throw InputError("demonstrations line " + std::to_string(line_no) + ": start out of bounds");
    if (actions != "-") {
      for (char c : actions) {
        try {
          d.actions.push_back(action_from_code(c));
        } catch (const InputError& e) {
          throw InputError("demonstrations line " + std::to_string(line_no) + ": " + e.what());
        }
        d.cells.push_back(apply_move(grid, d.cells.back(), d.actions.back()));
      }
    }
    std::string rest;
    std::getline(ls, rest);
    d.labels = parse_word(rest);
    d.provenance = "file line " + std::to_string(line_no);
    if (!replay_matches(grid, d))
      throw InputError("demonstrations line " + std::to_string(line_no) +
                       ": stored word does not match the replayed trajectory");
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace atig

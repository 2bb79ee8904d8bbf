#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atig/automata.hpp"
#include "atig/grid_env.hpp"
#include "atig/oracle.hpp"
#include "atig/rng.hpp"

#ifndef ATIG_DATA_DIR
#define ATIG_DATA_DIR "data"
#endif

namespace testing {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(ATIG_DATA_DIR) / rel;
}

inline atig::Dfa fixture_dfa(const std::string& name) {
  return atig::load_dfa(data_path("tasks/" + name + ".dfa"));
}

inline atig::GridMap train_env() { return atig::load_grid(data_path("envs/train12.env")); }

inline atig::TaskSpec fixture_task(int n, const atig::GridMap& grid) {
  return atig::TaskSpec(fixture_dfa("task" + std::to_string(n)), "task" + std::to_string(n),
                        atig::default_horizon(grid));
}

/// Grid from rows of object codes.
inline atig::GridMap grid_from_rows(const std::vector<std::string>& rows,
                                    std::optional<atig::Cell> start = atig::Cell{0, 0},
                                    double slip = 0.0) {
  std::vector<atig::ObjectKind> cells;
  for (const auto& r : rows)
    for (char c : r) cells.push_back(atig::object_from_code(c));
  return atig::GridMap(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()),
                       std::move(cells), start, slip);
}

inline atig::Word random_word(atig::Rng& rng, int alphabet, int max_len) {
  atig::Word w(atig::uniform_index(rng, static_cast<std::size_t>(max_len) + 1));
  for (auto& s : w) s = static_cast<int>(atig::uniform_index(rng, alphabet));
  return w;
}

inline atig::Dfa random_dfa(atig::Rng& rng, int states, int alphabet) {
  std::vector<int> delta(static_cast<std::size_t>(states) * alphabet);
  for (auto& t : delta) t = static_cast<int>(atig::uniform_index(rng, states));
  std::vector<bool> acc(states);
  for (int q = 0; q < states; ++q) acc[q] = atig::uniform01(rng) < 0.4;
  return atig::Dfa(states, alphabet, std::move(delta), 0, std::move(acc));
}

/// Grid with uniformly random object kinds, which gives scattered (often absent) regions.
inline atig::GridMap random_grid(atig::Rng& rng, int w, int h, double slip = 0.0) {
  std::vector<atig::ObjectKind> cells(static_cast<std::size_t>(w) * h);
  for (auto& c : cells) c = static_cast<atig::ObjectKind>(atig::uniform_index(rng, 6));
  const atig::Cell start{static_cast<int>(atig::uniform_index(rng, w)),
                         static_cast<int>(atig::uniform_index(rng, h))};
  return atig::GridMap(w, h, std::move(cells), start, slip);
}

/// Every word over `alphabet` up to length `max_len`, shortest first.
inline std::vector<atig::Word> all_words(int alphabet, int max_len) {
  std::vector<atig::Word> out{{}};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (static_cast<int>(out[i].size()) == max_len) continue;
    for (int s = 0; s < alphabet; ++s) {
      atig::Word w = out[i];
      w.push_back(s);
      out.push_back(std::move(w));
    }
  }
  return out;
}

/// Reference planner: forward search over (cell, symbols emitted so far) using only the
/// movement rule and per-cell labels. Length of the shortest exact realization of `w`.
inline std::optional<int> reference_plan_length(const atig::GridMap& g, atig::Cell start,
                                                const atig::Word& w) {
  const int n = static_cast<int>(w.size());
  auto emit_ok = [&](std::optional<int> label, int progress) {
    return !label || (progress < n && w[progress] == *label);
  };
  int p0 = 0;
  if (auto l = g.label(start)) {
    if (!emit_ok(l, 0)) return std::nullopt;
    p0 = 1;
  }
  std::map<std::pair<int, int>, int> dist{{{g.index(start), p0}, 0}};
  std::deque<std::pair<atig::Cell, int>> queue{{start, p0}};
  while (!queue.empty()) {
    const auto [c, p] = queue.front();
    queue.pop_front();
    const int d = dist[{g.index(c), p}];
    if (p == n) return d;
    for (atig::Action a : atig::kAllActions) {
      const atig::Cell next = atig::apply_move(g, c, a);
      if (next == c) continue;
      const auto l = g.label(next);
      if (!emit_ok(l, p)) continue;
      const int p2 = l ? p + 1 : p;
      if (dist.emplace(std::make_pair(g.index(next), p2), d + 1).second)
        queue.push_back({next, p2});
    }
  }
  return std::nullopt;
}

}  // namespace testing

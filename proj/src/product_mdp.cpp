#include <deque>

#include "atig/automata.hpp"
#include "atig/error.hpp"

namespace atig {

ProductMdp build_product(const GridMap& grid, const Dfa& dfa, InitialMode mode) {
  for (int i = 0; i < grid.num_cells(); ++i) {
    if (auto l = grid.label_at(i); l && *l >= dfa.alphabet_size())
      throw InputError("grid region type " + std::to_string(*l) +
                       " is outside the DFA alphabet of size " +
                       std::to_string(dfa.alphabet_size()));
  }

  ProductMdp p{.dfa = dfa, .grid_width = grid.width(), .grid_height = grid.height()};
  const int nq = dfa.num_states();
  const std::vector<bool> dfa_trap = trap_states(dfa);
  const bool seal_traps = dfa.has_accepting();
  p.lookup.assign(static_cast<std::size_t>(grid.num_cells()) * nq, -1);

  std::deque<int> frontier;
  auto intern = [&](int cell, int q) {
    int& slot = p.lookup[cell * nq + q];
    if (slot < 0) {
      slot = p.num_states();
      p.states.push_back({cell, q});
      p.accepting.push_back(dfa.is_accepting(q));
      p.trap.push_back(dfa_trap[q]);
      frontier.push_back(slot);
    }
    return slot;
  };

  for (const auto& [cell, prob] : initial_distribution(grid, mode)) {
    const int z = intern(grid.index(cell), dfa.advance(dfa.initial(), grid.label(cell)));
    bool merged = false;
    for (auto& [z0, p0] : p.initial) {
      if (z0 == z) {
        p0 += prob;
        merged = true;
      }
    }
    if (!merged) p.initial.emplace_back(z, prob);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  while (!frontier.empty()) {
    const int z = frontier.front();
    frontier.pop_front();
    const auto [cell, q] = p.states[z];
    const bool absorbing = dfa.is_accepting(q) || (seal_traps && dfa_trap[q]);
    const Cell from = grid.cell_at(cell);
    for (int a = 0; a < kNumActions; ++a) {
      const int row = z * kNumActions + a;
      if (absorbing) {
        triplets.emplace_back(row, z, 1.0);
        continue;
      }
      for (const Transition& t : step_distribution(grid, from, kAllActions[a])) {
        const int q2 = dfa.advance(q, entry_label(grid, from, t.cell));
        triplets.emplace_back(row, intern(grid.index(t.cell), q2), t.prob);
      }
    }
  }

  p.transitions.resize(p.num_pairs(), p.num_states());
  p.transitions.setFromTriplets(triplets.begin(), triplets.end());
  p.transitions.makeCompressed();
  return p;
}

}  // namespace atig

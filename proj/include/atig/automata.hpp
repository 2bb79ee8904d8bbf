#pragma once

#include <Eigen/SparseCore>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atig/grid_env.hpp"

namespace atig {

/// Total deterministic finite automaton over the alphabet {0, ..., alphabet_size-1}.
class Dfa {
 public:
  /// `delta` is row-major: delta[q * alphabet_size + symbol]. Throws InputError on a
  /// partial or out-of-range table.
  Dfa(int num_states, int alphabet_size, std::vector<int> delta, int initial,
      std::vector<bool> accepting);

  int num_states() const { return num_states_; }
  int alphabet_size() const { return alphabet_size_; }
  int initial() const { return initial_; }
  bool is_accepting(int q) const { return accepting_[q]; }
  const std::vector<bool>& accepting() const { return accepting_; }
  bool has_accepting() const;

  /// delta(q, symbol); throws InputError on an invalid symbol.
  int step(int q, LabelSymbol symbol) const;
  /// Transition on an optional label: no label leaves the state unchanged.
  int advance(int q, std::optional<LabelSymbol> label) const {
    return label ? step(q, *label) : q;
  }
  /// Extended transition from q over a word.
  int run_from(int q, const Word& w) const;

  bool operator==(const Dfa&) const = default;

 private:
  int num_states_;
  int alphabet_size_;
  std::vector<int> delta_;
  int initial_;
  std::vector<bool> accepting_;
};

/// State sequence q_0..q_k visited while reading `w`.
std::vector<int> dfa_run(const Dfa& dfa, const Word& w);
bool dfa_accepts(const Dfa& dfa, const Word& w);

/// A shortest word on which the two automata disagree, or nullopt if their languages are
/// equal. Breadth-first search over the pair automaton.
std::optional<Word> exact_equivalence(const Dfa& a, const Dfa& b);

/// States from which no accepting state is reachable.
std::vector<bool> trap_states(const Dfa& dfa);

/// One bit per region type recording whether it has been visited; no accepting states.
Dfa info_bits_automaton(int num_types);
/// Single state with self-loops on every symbol; no accepting states.
Dfa trivial_automaton(int alphabet_size = kNumRegionTypes);

/// Text format: "states N", "alphabet K", "init q", "accept q...", then "trans q s q'" lines.
std::string format_dfa(const Dfa& dfa);
Dfa parse_dfa(std::string_view text);
Dfa load_dfa(const std::filesystem::path& path);
void save_dfa(const Dfa& dfa, const std::filesystem::path& path);

/// Product of the grid MDP with a DFA, restricted to states reachable from the initial set.
///
/// Product states are indexed 0..num_states()-1. Transitions are stored as a sparse
/// row-major matrix with one row per (z, a) pair (row z * kNumActions + a) and one column per
/// successor product state. Accepting and trap states are sealed: every action self-loops.
/// Trap states are only sealed when the DFA has at least one accepting state, since an
/// automaton with F empty only carries memory.
struct ProductMdp {
  using TransitionMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  struct State {
    int cell = 0;  ///< grid cell index
    int q = 0;     ///< DFA state
  };

  Dfa dfa;
  int grid_width = 0;
  int grid_height = 0;
  std::vector<State> states;
  std::vector<int> lookup;  ///< cell * dfa.num_states() + q -> product index or -1
  std::vector<std::pair<int, double>> initial;
  TransitionMatrix transitions;
  std::vector<bool> accepting;
  std::vector<bool> trap;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_pairs() const { return num_states() * kNumActions; }
  bool is_absorbing(int z) const { return accepting[z] || (trap[z] && dfa.has_accepting()); }
  /// Product index of (cell, q), or -1 if unreachable.
  int find(int cell, int q) const { return lookup[cell * dfa.num_states() + q]; }
};

/// Builds the reachable product of `grid` and `dfa`. Throws InputError if the grid carries a
/// region type outside the DFA alphabet.
ProductMdp build_product(const GridMap& grid, const Dfa& dfa,
                         InitialMode mode = InitialMode::Start);

}  // namespace atig

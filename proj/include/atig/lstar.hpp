#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "atig/automata.hpp"
#include "atig/grid_env.hpp"

namespace atig {

/// Caching wrapper around a membership answer function. Every distinct word is forwarded to
/// the underlying function exactly once, in the order it is first asked.
class MembershipOracle {
 public:
  using AnswerFn = std::function<bool(const Word&)>;

  struct Record {
    std::size_t index = 0;
    Word word;
    bool answer = false;
  };

  explicit MembershipOracle(AnswerFn answer) : answer_(std::move(answer)) {}

  bool query(const Word& w);
  const std::vector<Record>& log() const { return log_; }
  std::size_t num_queries() const { return log_.size(); }

  /// CSV with columns index, word, answer.
  void write_csv(std::ostream& out) const;

 private:
  AnswerFn answer_;
  std::map<Word, bool> cache_;
  std::vector<Record> log_;
};

/// L* observation table. P is prefix-closed and X suffix-ordered; both start as {epsilon}.
struct ObservationTable {
  explicit ObservationTable(int alphabet);

  int alphabet_size;
  std::vector<Word> prefixes;
  std::vector<Word> suffixes;
  std::map<Word, bool> membership;

  bool has_prefix(const Word& p) const { return prefix_set_.count(p) > 0; }
  void add_prefix(const Word& p);
  bool add_suffix(const Word& x);
  /// P . Sigma minus P, in scan order.
  std::vector<Word> boundary() const;

 private:
  std::set<Word> prefix_set_;
  std::set<Word> suffix_set_;
};

using Row = std::vector<bool>;

/// Membership bits of p . x for every suffix x, in suffix order. Throws InputError when p is
/// neither in P nor in P . Sigma, StateError when an entry is missing.
Row row(const ObservationTable& table, const Word& p);

/// Queries every missing entry of (P u P.Sigma) . X.
void fill_table(ObservationTable& table, MembershipOracle& oracle);

bool is_closed(const ObservationTable& table);
bool is_consistent(const ObservationTable& table);

/// Repairs closedness and consistency until both hold.
void close_and_make_consistent(ObservationTable& table, MembershipOracle& oracle);

/// Hypothesis DFA whose states are the distinct rows of P; state 0 is row(epsilon).
/// Throws StateError if the table is not closed and consistent.
Dfa build_hypothesis(const ObservationTable& table);

/// Adds every prefix of `ce` to P and fills the new entries. If `current` is given and does
/// not actually disagree with the oracle on `ce`, a warning is written to std::clog.
void process_counterexample(ObservationTable& table, const Word& ce, MembershipOracle& oracle,
                            const Dfa* current = nullptr);

/// Equivalence query: nullopt when the hypothesis is accepted, otherwise a counterexample.
using EquivalenceFn = std::function<std::optional<Word>(const Dfa&)>;

struct LStarResult {
  Dfa hypothesis;
  std::vector<int> state_counts;  ///< hypothesis size after each round
  std::size_t membership_queries = 0;
  bool converged = false;
};

/// Full L* loop with an external equivalence oracle.
LStarResult learn_dfa(int alphabet, MembershipOracle& oracle, const EquivalenceFn& equivalence,
                      int max_rounds = 50);

}  // namespace atig

#include "atig/lstar.hpp"

#include <iostream>
#include <ostream>

#include "atig/error.hpp"

namespace atig {

namespace {

Word concat(const Word& a, const Word& b) {
  Word w = a;
  w.insert(w.end(), b.begin(), b.end());
  return w;
}

Word append(const Word& a, LabelSymbol s) {
  Word w = a;
  w.push_back(s);
  return w;
}

bool table_lookup(const ObservationTable& t, const Word& w) {
  auto it = t.membership.find(w);
  if (it == t.membership.end()) throw StateError("observation table entry missing for '" +
                                                 format_word(w) + "'");
  return it->second;
}

}  // namespace

bool MembershipOracle::query(const Word& w) {
  if (auto it = cache_.find(w); it != cache_.end()) return it->second;
  const bool answer = answer_(w);
  cache_.emplace(w, answer);
  log_.push_back({log_.size(), w, answer});
  return answer;
}

void MembershipOracle::write_csv(std::ostream& out) const {
  out << "index,word,answer\n";
  for (const auto& r : log_) out << r.index << ',' << format_word(r.word) << ',' << r.answer << '\n';
}

ObservationTable::ObservationTable(int alphabet) : alphabet_size(alphabet) {
  if (alphabet < 0) throw InputError("negative alphabet size");
  add_prefix({});
  add_suffix({});
}

void ObservationTable::add_prefix(const Word& p) {
  if (prefix_set_.insert(p).second) prefixes.push_back(p);
}

bool ObservationTable::add_suffix(const Word& x) {
  if (!suffix_set_.insert(x).second) return false;
  suffixes.push_back(x);
  return true;
}

std::vector<Word> ObservationTable::boundary() const {
  std::vector<Word> out;
  for (const Word& p : prefixes) {
    for (int s = 0; s < alphabet_size; ++s) {
      Word ps = append(p, s);
      if (!has_prefix(ps)) out.push_back(std::move(ps));
    }
  }
  return out;
}

Row row(const ObservationTable& table, const Word& p) {
  bool known = table.has_prefix(p);
  if (!known && !p.empty()) {
    Word parent(p.begin(), p.end() - 1);
    known = table.has_prefix(parent) && p.back() >= 0 && p.back() < table.alphabet_size;
  }
  if (!known) throw InputError("row requested for unknown prefix '" + format_word(p) + "'");
  Row r;
  r.reserve(table.suffixes.size());
  for (const Word& x : table.suffixes) r.push_back(table_lookup(table, concat(p, x)));
  return r;
}

void fill_table(ObservationTable& table, MembershipOracle& oracle) {
  auto fill_row = [&](const Word& p) {
    for (const Word& x : table.suffixes) {
      Word w = concat(p, x);
      if (!table.membership.count(w)) table.membership.emplace(w, oracle.query(w));
    }
  };
  for (const Word& p : table.prefixes) fill_row(p);
  for (const Word& p : table.boundary()) fill_row(p);
}

namespace {

std::optional<Word> find_unclosed(const ObservationTable& table) {
  std::set<Row> rows;
  for (const Word& p : table.prefixes) rows.insert(row(table, p));
  for (const Word& p : table.prefixes) {
    for (int s = 0; s < table.alphabet_size; ++s) {
      Word ps = append(p, s);
      if (!rows.count(row(table, ps))) return ps;
    }
  }
  return std::nullopt;
}

std::optional<Word> find_inconsistency(const ObservationTable& table) {
  const auto& P = table.prefixes;
  std::vector<Row> rows;
  rows.reserve(P.size());
  for (const Word& p : P) rows.push_back(row(table, p));
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t j = i + 1; j < P.size(); ++j) {
      if (rows[i] != rows[j]) continue;
      for (int s = 0; s < table.alphabet_size; ++s) {
        const Word a = append(P[i], s), b = append(P[j], s);
        for (const Word& x : table.suffixes) {
          if (table_lookup(table, concat(a, x)) != table_lookup(table, concat(b, x))) {
            Word sx{s};
            sx.insert(sx.end(), x.begin(), x.end());
            return sx;
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

bool is_closed(const ObservationTable& table) { return !find_unclosed(table); }
bool is_consistent(const ObservationTable& table) { return !find_inconsistency(table); }

void close_and_make_consistent(ObservationTable& table, MembershipOracle& oracle) {
  fill_table(table, oracle);
  while (true) {
    if (auto p = find_unclosed(table)) {
      table.add_prefix(*p);
      fill_table(table, oracle);
      continue;
    }
    if (auto x = find_inconsistency(table)) {
      table.add_suffix(*x);
      fill_table(table, oracle);
      continue;
    }
    return;
  }
}

Dfa build_hypothesis(const ObservationTable& table) {
  if (!is_closed(table) || !is_consistent(table))
    throw StateError("observation table is not closed and consistent");
  std::map<Row, int> state_of;
  std::vector<const Word*> representative;
  for (const Word& p : table.prefixes) {
    Row r = row(table, p);
    if (!state_of.count(r)) {
      state_of.emplace(std::move(r), static_cast<int>(representative.size()));
      representative.push_back(&p);
    }
  }
  const int n = static_cast<int>(representative.size());
  const int k = table.alphabet_size;
  std::vector<int> delta(static_cast<std::size_t>(n) * k);
  std::vector<bool> accepting(n);
  for (int q = 0; q < n; ++q) {
    const Word& p = *representative[q];
    accepting[q] = table_lookup(table, p);
    for (int s = 0; s < k; ++s) delta[q * k + s] = state_of.at(row(table, append(p, s)));
  }
  return Dfa(n, k, std::move(delta), state_of.at(row(table, Word{})), std::move(accepting));
}

void process_counterexample(ObservationTable& table, const Word& ce, MembershipOracle& oracle,
                            const Dfa* current) {
  if (current && dfa_accepts(*current, ce) == oracle.query(ce)) {
    std::clog << "warning: counterexample '" << format_word(ce)
              << "' does not distinguish the hypothesis from the target\n";
  }
  for (std::size_t len = 0; len <= ce.size(); ++len) {
    table.add_prefix(Word(ce.begin(), ce.begin() + static_cast<long>(len)));
  }
  fill_table(table, oracle);
}

LStarResult learn_dfa(int alphabet, MembershipOracle& oracle, const EquivalenceFn& equivalence,
                      int max_rounds) {
  ObservationTable table(alphabet);
  close_and_make_consistent(table, oracle);
  Dfa hyp = build_hypothesis(table);
  LStarResult result{.hypothesis = hyp};
  result.state_counts.push_back(hyp.num_states());
  for (int round = 0; round < max_rounds; ++round) {
    auto ce = equivalence(hyp);
    if (!ce) {
      result.converged = true;
      break;
    }
    process_counterexample(table, *ce, oracle, &hyp);
    close_and_make_consistent(table, oracle);
    hyp = build_hypothesis(table);
    result.state_counts.push_back(hyp.num_states());
  }
  result.hypothesis = hyp;
  result.membership_queries = oracle.num_queries();
  return result;
}

}  // namespace atig

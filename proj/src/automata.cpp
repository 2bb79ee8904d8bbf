#include "atig/automata.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include "atig/error.hpp"

namespace atig {

Dfa::Dfa(int num_states, int alphabet_size, std::vector<int> delta, int initial,
         std::vector<bool> accepting)
    : num_states_(num_states),
      alphabet_size_(alphabet_size),
      delta_(std::move(delta)),
      initial_(initial),
      accepting_(std::move(accepting)) {
  if (num_states_ < 1) throw InputError("DFA needs at least one state");
  if (alphabet_size_ < 0) throw InputError("negative alphabet size");
  if (static_cast<long>(delta_.size()) != static_cast<long>(num_states_) * alphabet_size_)
    throw InputError("DFA transition table is not total");
  for (int t : delta_) {
    if (t < 0 || t >= num_states_) throw InputError("DFA transition target out of range");
  }
  if (initial_ < 0 || initial_ >= num_states_) throw InputError("DFA initial state out of range");
  if (static_cast<int>(accepting_.size()) != num_states_)
    throw InputError("DFA accepting mask has wrong size");
}

bool Dfa::has_accepting() const {
  for (bool a : accepting_) {
    if (a) return true;
  }
  return false;
}

int Dfa::step(int q, LabelSymbol symbol) const {
  if (symbol < 0 || symbol >= alphabet_size_)
    throw InputError("symbol " + std::to_string(symbol) + " outside DFA alphabet");
  return delta_[q * alphabet_size_ + symbol];
}

int Dfa::run_from(int q, const Word& w) const {
  for (LabelSymbol s : w) q = step(q, s);
  return q;
}

std::vector<int> dfa_run(const Dfa& dfa, const Word& w) {
  std::vector<int> out;
  out.reserve(w.size() + 1);
  int q = dfa.initial();
  out.push_back(q);
  for (LabelSymbol s : w) {
    q = dfa.step(q, s);
    out.push_back(q);
  }
  return out;
}

bool dfa_accepts(const Dfa& dfa, const Word& w) {
  return dfa.is_accepting(dfa.run_from(dfa.initial(), w));
}

std::optional<Word> exact_equivalence(const Dfa& a, const Dfa& b) {
  if (a.alphabet_size() != b.alphabet_size()) throw InputError("DFA alphabet mismatch");
  const int nb = b.num_states();
  const int k = a.alphabet_size();
  const int n = a.num_states() * nb;
  std::vector<int> parent(n, -1), via(n, -1);
  std::vector<bool> seen(n, false);
  std::deque<int> queue;
  const int root = a.initial() * nb + b.initial();
  seen[root] = true;
  queue.push_back(root);
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    const int qa = cur / nb, qb = cur % nb;
    if (a.is_accepting(qa) != b.is_accepting(qb)) {
      Word w;
      for (int x = cur; x != root; x = parent[x]) w.push_back(via[x]);
      return Word(w.rbegin(), w.rend());
    }
    for (int s = 0; s < k; ++s) {
      const int next = a.step(qa, s) * nb + b.step(qb, s);
      if (!seen[next]) {
        seen[next] = true;
        parent[next] = cur;
        via[next] = s;
        queue.push_back(next);
      }
    }
  }
  return std::nullopt;
}

std::vector<bool> trap_states(const Dfa& dfa) {
  const int n = dfa.num_states();
  std::vector<std::vector<int>> reverse(n);
  for (int q = 0; q < n; ++q) {
    for (int s = 0; s < dfa.alphabet_size(); ++s) reverse[dfa.step(q, s)].push_back(q);
  }
  std::vector<bool> live(n, false);
  std::deque<int> queue;
  for (int q = 0; q < n; ++q) {
    if (dfa.is_accepting(q)) {
      live[q] = true;
      queue.push_back(q);
    }
  }
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    for (int p : reverse[q]) {
      if (!live[p]) {
        live[p] = true;
        queue.push_back(p);
      }
    }
  }
  std::vector<bool> trap(n);
  for (int q = 0; q < n; ++q) trap[q] = !live[q];
  return trap;
}

Dfa info_bits_automaton(int num_types) {
  if (num_types < 0 || num_types > 20) throw InputError("info-bits automaton: bad type count");
  const int n = 1 << num_types;
  std::vector<int> delta(static_cast<std::size_t>(n) * num_types);
  for (int q = 0; q < n; ++q) {
    for (int s = 0; s < num_types; ++s) delta[q * num_types + s] = q | (1 << s);
  }
  return Dfa(n, num_types, std::move(delta), 0, std::vector<bool>(n, false));
}

Dfa trivial_automaton(int alphabet_size) {
  return Dfa(1, alphabet_size, std::vector<int>(alphabet_size, 0), 0, {false});
}

std::string format_dfa(const Dfa& dfa) {
  std::ostringstream out;
  out << "states " << dfa.num_states() << '\n';
  out << "alphabet " << dfa.alphabet_size() << '\n';
  out << "init " << dfa.initial() << '\n';
  out << "accept";
  for (int q = 0; q < dfa.num_states(); ++q) {
    if (dfa.is_accepting(q)) out << ' ' << q;
  }
  out << '\n';
  for (int q = 0; q < dfa.num_states(); ++q) {
    for (int s = 0; s < dfa.alphabet_size(); ++s) {
      out << "trans " << q << ' ' << s << ' ' << dfa.step(q, s) << '\n';
    }
  }
  return out.str();
}

Dfa parse_dfa(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  int n = -1, k = -1, init = -1;
  std::vector<int> accept;
  std::vector<int> delta;
  auto fail = [&](const std::string& msg) -> InputError {
    return InputError("DFA file line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "states") {
      if (!(ls >> n) || n < 1) throw fail("bad state count");
    } else if (key == "alphabet") {
      if (!(ls >> k) || k < 0) throw fail("bad alphabet size");
    } else if (key == "init") {
      if (!(ls >> init)) throw fail("bad initial state");
    } else if (key == "accept") {
      int q;
      while (ls >> q) accept.push_back(q);
      if (!ls.eof()) throw fail("bad accepting state");
    } else if (key == "trans") {
      if (n < 0 || k < 0) throw fail("'trans' before 'states' and 'alphabet'");
      if (delta.empty()) delta.assign(static_cast<std::size_t>(n) * k, -1);
      int q, s, t;
      if (!(ls >> q >> s >> t)) throw fail("expected 'trans q symbol q2'");
      if (q < 0 || q >= n || s < 0 || s >= k || t < 0 || t >= n) throw fail("index out of range");
      if (delta[q * k + s] >= 0 && delta[q * k + s] != t) throw fail("conflicting transition");
      delta[q * k + s] = t;
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  if (n < 0 || k < 0 || init < 0) throw InputError("DFA file: missing states/alphabet/init");
  if (delta.empty()) delta.assign(static_cast<std::size_t>(n) * k, -1);
  for (int q = 0; q < n; ++q) {
    for (int s = 0; s < k; ++s) {
      if (delta[q * k + s] < 0)
        throw InputError("DFA file: missing transition for state " + std::to_string(q) +
                         " symbol " + std::to_string(s));
    }
  }
  std::vector<bool> acc(n, false);
  for (int q : accept) {
    if (q < 0 || q >= n) throw InputError("DFA file: accepting state out of range");
    acc[q] = true;
  }
  return Dfa(n, k, std::move(delta), init, std::move(acc));
}

Dfa load_dfa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open DFA file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dfa(ss.str());
}

void save_dfa(const Dfa& dfa, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write DFA file " + path.string());
  out << format_dfa(dfa);
}

}  // namespace atig

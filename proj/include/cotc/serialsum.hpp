// The overflow-tracking iterated-addition algorithm for fixed-point floats
// (e = 0) and brute-force checkers for the automaton properties behind it:
// rounded addition as an automaton over F_{0,s} is ordered, and ordered
// automata are counter-free (aperiodic transformation monoid).
//
// The algorithm reconstructs the left-fold rounded sum from exact prefix sums
// and suffix extrema: bootstrap y_{-2}=0, y_{-1}=y_0=sign(x_1)B,
// y_1=x_1-sign(x_1)B, take S_i = sum_{j=-2..i} y_j (so S_{-2}=0,
// S_{-1}=sign(x_1)B, S_0=2 sign(x_1)B), find the last window i* with
// U_{i*}-L_{i*} >= 2B, locate the last prefix k* pinned at the opposite
// extreme, and return O + S_n - S_{k*} with O = +-B.

#pragma once

#include <cotc/fpnum.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cotc {

class ClosureTooLargeError : public std::runtime_error {
 public:
  explicit ClosureTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

// Equals sum_iter(xs) for every input (proved via the window argument; the
// test suite checks it exhaustively and at random).  Fixed-point only.
inline FpNumber gridworld_sum(std::span<const FpNumber> xs) {
  if (xs.empty()) throw std::invalid_argument("gridworld_sum: empty sequence");
  const PrecisionConfig cfg = xs[0].cfg();
  if (cfg.e != 0)
    throw std::invalid_argument("gridworld_sum is defined for fixed-point inputs (e = 0)");
  for (const FpNumber& x : xs)
    if (!(x.cfg() == cfg)) throw std::invalid_argument("mixed PrecisionConfig inputs");

  const __int128 big = cfg.max_significand();
  const std::int64_t sign1 = xs[0].signed_significand() < 0 ? -1 : 1;  // sign(0) = +1

  // scaled by 2^s; prefix sums are exact
  const std::size_t n = xs.size();
  std::vector<__int128> prefix(n + 3);  // prefix[i+2] = S_i, i = -2..n
  prefix[0] = 0;                        // S_{-2}
  prefix[1] = sign1 > 0 ? big : -big;   // S_{-1}
  prefix[2] = 2 * prefix[1];            // S_0
  __int128 y1 = static_cast<__int128>(xs[0].signed_significand()) - (sign1 > 0 ? big : -big);
  prefix[3] = prefix[2] + y1;           // S_1
  for (std::size_t i = 2; i <= n; ++i)
    prefix[i + 2] = prefix[i + 1] + xs[i - 1].signed_significand();

  const std::size_t m = n + 3;  // number of S entries
  std::vector<__int128> hi(m), lo(m);
  hi[m - 1] = lo[m - 1] = prefix[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) {
    hi[i] = std::max(prefix[i], hi[i + 1]);
    lo[i] = std::min(prefix[i], lo[i + 1]);
  }

  std::size_t istar = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (hi[i] - lo[i] >= 2 * big) istar = i;  // max index; i = -2 always qualifies

  __int128 offset, target;
  if (prefix[istar] == hi[istar]) {
    target = lo[istar];
    offset = -big;
  } else {
    target = hi[istar];
    offset = big;
  }
  std::size_t kstar = istar;
  for (std::size_t k = istar; k < m; ++k)
    if (prefix[k] == target) kstar = k;

  __int128 ans = offset + prefix[m - 1] - prefix[kstar];
  if (ans > big || ans < -big) throw std::logic_error("gridworld_sum: result off the grid");
  return FpNumber::from_scaled(static_cast<std::int64_t>(ans), 0, cfg);
}

// ---------------------------------------------------------------------------
// The rounded-addition automaton and its order / aperiodicity checks
// ---------------------------------------------------------------------------

// A_{e,s} = (F_{e,s}, F_{e,s}, delta) with delta(x, y) = round(x + y).
// States are sorted ascending; delta is a dense table of state indices.
struct AdditionAutomaton {
  PrecisionConfig cfg;
  std::vector<FpNumber> states;             // ascending
  std::vector<std::vector<int>> delta;      // delta[state][letter]

  std::size_t size() const { return states.size(); }
};

inline AdditionAutomaton build_addition_automaton(PrecisionConfig cfg) {
  cfg.validate();
  std::map<Rational, FpNumber> by_value;
  for (int e = cfg.exponent_min(); e <= cfg.exponent_max(); ++e)
    for (std::int64_t s = 0; s <= cfg.max_significand(); ++s) {
      FpNumber pos = FpNumber::from_scaled(s, e, cfg);
      FpNumber neg = FpNumber::from_scaled(-s, e, cfg);
      by_value.emplace(pos.value(), pos);
      by_value.emplace(neg.value(), neg);
    }
  AdditionAutomaton a;
  a.cfg = cfg;
  for (auto& [v, f] : by_value) a.states.push_back(f);

  std::map<Rational, int> index;
  for (std::size_t i = 0; i < a.states.size(); ++i)
    index.emplace(a.states[i].value(), static_cast<int>(i));
  a.delta.assign(a.size(), std::vector<int>(a.size()));
  for (std::size_t x = 0; x < a.size(); ++x)
    for (std::size_t y = 0; y < a.size(); ++y)
      a.delta[x][y] = index.at(add_rounded(a.states[x], a.states[y]).value());
  return a;
}

struct OrderedCheckResult {
  bool ordered = false;
  // (x, x', y) indices with x <= x' but delta(x,y) > delta(x',y)
  std::optional<std::array<int, 3>> counterexample;
};

// Exhaustive triple scan: for all x <= x' and every letter y, transitions
// must preserve the state order.
inline OrderedCheckResult check_ordered(const AdditionAutomaton& a) {
  const int n = static_cast<int>(a.size());
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int x2 = x; x2 < n; ++x2)
        if (a.delta[x][y] > a.delta[x2][y])
          return {false, std::array<int, 3>{x, x2, y}};
  return {true, std::nullopt};
}

inline OrderedCheckResult check_ordered(PrecisionConfig cfg) {
  if (cfg.e > 2 || cfg.s > 3)
    throw std::invalid_argument("exhaustive order check limited to e <= 2, s <= 3");
  return check_ordered(build_addition_automaton(cfg));
}

// Closure of arbitrary generator maps under composition, then the aperiodicity
// test t^k = t^{k+1} with k <= |Q| for every element.  |Q| steps suffice: the
// image chain of t stabilizes within |Q| compositions, and an aperiodic t acts
// as the identity on its stable image.
inline bool transformation_monoid_aperiodic(const std::vector<std::vector<int>>& generators,
                                            std::size_t closure_cap = 1 << 20) {
  if (generators.empty()) return true;
  const std::size_t n_states = generators[0].size();
  std::set<std::vector<int>> closure(generators.begin(), generators.end());
  std::vector<std::vector<int>> frontier(generators.begin(), generators.end());
  while (!frontier.empty()) {
    std::vector<std::vector<int>> next;
    for (const auto& t : frontier)
      for (const auto& g : generators) {
        std::vector<int> composed(n_states);
        for (std::size_t q = 0; q < n_states; ++q)
          composed[q] = g[static_cast<std::size_t>(t[q])];
        if (closure.insert(composed).second) next.push_back(std::move(composed));
        if (closure.size() > closure_cap)
          throw ClosureTooLargeError("transformation monoid closure exceeds cap");
      }
    frontier = std::move(next);
  }

  for (const auto& t : closure) {
    std::vector<int> power = t;
    bool settled = false;
    for (std::size_t k = 0; k < n_states; ++k) {
      std::vector<int> next_power(n_states);
      for (std::size_t q = 0; q < n_states; ++q)
        next_power[q] = t[static_cast<std::size_t>(power[q])];
      if (next_power == power) {
        settled = true;
        break;
      }
      power = std::move(next_power);
    }
    if (!settled) return false;
  }
  return true;
}

inline bool check_aperiodic(const AdditionAutomaton& a, std::size_t closure_cap = 1 << 20) {
  std::vector<std::vector<int>> generators;
  generators.reserve(a.size());
  for (std::size_t y = 0; y < a.size(); ++y) {
    std::vector<int> g(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) g[x] = a.delta[x][y];
    generators.push_back(std::move(g));
  }
  return transformation_monoid_aperiodic(generators, closure_cap);
}

inline bool check_aperiodic(PrecisionConfig cfg, std::size_t closure_cap = 1 << 20) {
  if (cfg.e > 0 || cfg.s > 1)
    throw std::invalid_argument("monoid closure check limited to e = 0, s = 1 by default");
  return check_aperiodic(build_addition_automaton(cfg), closure_cap);
}

}  // namespace cotc

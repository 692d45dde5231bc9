#include <cotc/serialsum.hpp>

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "test_support.hpp"

using namespace cotc;
using testsupport::fp;

namespace {
const PrecisionConfig S1{0, 1};
const PrecisionConfig S2{0, 2};

FpVec random_sequence(std::mt19937_64& rng, PrecisionConfig cfg, std::size_t len) {
  FpVec xs;
  xs.reserve(len);
  const auto m = static_cast<std::uint64_t>(cfg.max_significand());
  for (std::size_t i = 0; i < len; ++i) {
    auto sig = static_cast<std::int64_t>(testsupport::uniform_below(rng, 2 * m + 1)) -
               static_cast<std::int64_t>(m);
    xs.push_back(FpNumber::from_scaled(sig, 0, cfg));
  }
  return xs;
}
}  // namespace

TEST_CASE("gridworld_sum: worked examples") {
  REQUIRE(gridworld_sum(FpVec{fp("0.5", S1)}) == fp("0.5", S1));
  REQUIRE(gridworld_sum(FpVec{fp("-1.5", S1)}) == fp("-1.5", S1));

  // overflow bookkeeping: fold saturates at B then cancels back to 0
  FpVec sat{fp("1.5", S1), fp("1.5", S1), fp("-1.5", S1)};
  REQUIRE(gridworld_sum(sat) == fp("0", S1));
  REQUIRE(gridworld_sum(sat) == sum_iter(sat));

  // no overflow: plain prefix arithmetic
  FpVec plain{fp("0.5", S2), fp("0.5", S2)};
  REQUIRE(gridworld_sum(plain) == fp("1", S2));

  REQUIRE_THROWS_AS(gridworld_sum(FpVec{}), std::invalid_argument);
  FpNumber e1 = FpNumber::from_scaled(1, 0, PrecisionConfig{1, 2});
  REQUIRE_THROWS_AS(gridworld_sum(FpVec{e1}), std::invalid_argument);
}

TEST_CASE("gridworld_sum equals the left fold exhaustively at s=1, length <= 4") {
  auto grid = testsupport::enumerate_grid(S1);
  std::vector<FpNumber> values;
  for (const auto& q : grid) values.push_back(FpNumber::from_rational_exact(q, S1));
  REQUIRE(values.size() == 7);

  std::size_t cases = 0;
  for (std::size_t len = 1; len <= 4; ++len) {
    std::vector<std::size_t> idx(len, 0);
    for (;;) {
      FpVec xs;
      for (std::size_t i : idx) xs.push_back(values[i]);
      REQUIRE(gridworld_sum(xs) == sum_iter(xs));
      ++cases;
      std::size_t p = 0;
      while (p < len && ++idx[p] == values.size()) idx[p++] = 0;
      if (p == len) break;
    }
  }
  REQUIRE(cases == 7 + 49 + 343 + 2401);
}

TEST_CASE("gridworld_sum equals the left fold on long random sequences") {
  std::mt19937_64 rng(0xfeed);
  for (int s : {4, 8, 16}) {
    PrecisionConfig cfg{0, s};
    for (int trial = 0; trial < 300; ++trial) {
      FpVec xs = random_sequence(rng, cfg, 1000);
      REQUIRE(gridworld_sum(xs) == sum_iter(xs));
    }
  }
}

TEST_CASE("gridworld_sum is order-sensitive exactly as the fold is") {
  FpVec a{fp("1.5", S1), fp("0.5", S1), fp("-0.5", S1)};
  FpVec b{fp("0.5", S1), fp("-0.5", S1), fp("1.5", S1)};
  REQUIRE(gridworld_sum(a) == sum_iter(a));
  REQUIRE(gridworld_sum(b) == sum_iter(b));
  REQUIRE(gridworld_sum(a) != gridworld_sum(b));
}

TEST_CASE("rounded addition is an ordered automaton for all small configs") {
  for (int e = 0; e <= 2; ++e)
    for (int s = 1; s <= 3; ++s) {
      OrderedCheckResult r = check_ordered(PrecisionConfig{e, s});
      INFO("e=" << e << " s=" << s);
      REQUIRE(r.ordered);
      REQUIRE_FALSE(r.counterexample.has_value());
    }
  REQUIRE_THROWS_AS(check_ordered(PrecisionConfig{3, 1}), std::invalid_argument);
}

TEST_CASE("a mutated transition table breaks the order with a counterexample") {
  AdditionAutomaton a = build_addition_automaton(S1);
  REQUIRE(a.size() == 7);
  // swap two outputs in one letter's column
  std::swap(a.delta[1][3], a.delta[2][3]);
  bool changed = a.delta[1][3] != a.delta[2][3];
  OrderedCheckResult r = check_ordered(a);
  if (changed) {
    REQUIRE_FALSE(r.ordered);
    REQUIRE(r.counterexample.has_value());
    auto [x, x2, y] = *r.counterexample;
    REQUIRE(x <= x2);
    REQUIRE(y == 3);
    REQUIRE(a.delta[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] >
            a.delta[static_cast<std::size_t>(x2)][static_cast<std::size_t>(y)]);
  }
}

TEST_CASE("the rounded-addition monoid is aperiodic; a parity flip is not") {
  REQUIRE(check_aperiodic(PrecisionConfig{0, 1}));

  // two-state flip: flip^2 = id != flip, the canonical counter
  std::vector<std::vector<int>> flip{{1, 0}};
  REQUIRE_FALSE(transformation_monoid_aperiodic(flip));

  std::vector<std::vector<int>> identity_only{{0, 1, 2}};
  REQUIRE(transformation_monoid_aperiodic(identity_only));

  REQUIRE_THROWS_AS(check_aperiodic(PrecisionConfig{0, 2}), std::invalid_argument);
  AdditionAutomaton a = build_addition_automaton(S1);
  REQUIRE_THROWS_AS(check_aperiodic(a, 3), ClosureTooLargeError);
}

TEST_CASE("automaton state count matches |F_{e,s}|") {
  AdditionAutomaton s1 = build_addition_automaton(S1);
  REQUIRE(s1.size() == 7);  // 2*(2^2 - 1) + 1
  AdditionAutomaton s2 = build_addition_automaton(S2);
  REQUIRE(s2.size() == 31);  // 2*(2^4 - 1) + 1
  for (std::size_t i = 0; i + 1 < s2.size(); ++i)
    REQUIRE(s2.states[i] < s2.states[i + 1]);
}

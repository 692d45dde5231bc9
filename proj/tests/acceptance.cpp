// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Every tolerance is exact (bit-level) and every time bound is
// enforced here.

#include <cotc/compiler.hpp>
#include <cotc/serialsum.hpp>
#include <cotc/tasks.hpp>
#include <cotc/transformer.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cotc;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail, double secs) {
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), secs);
  std::fflush(stdout);
}

struct Timer {
  Clock::time_point t0 = Clock::now();
  double seconds() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }
};

std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

Circuit random_and_not_circuit(std::mt19937_64& rng, int n_inputs, int n_gates) {
  Circuit c;
  c.n_inputs = n_inputs;
  for (int i = 1; i <= n_inputs; ++i) c.gates.push_back({i, GateKind::Input, 0, 0});
  for (int g = 0; g < n_gates; ++g) {
    int id = c.total_gates() + 1;
    int a = 1 + static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(id - 1)));
    if (rng_below(rng, 2) == 0) {
      c.gates.push_back({id, GateKind::Not, a, 0});
    } else {
      int b = 1 + static_cast<int>(rng_below(rng, static_cast<std::uint64_t>(id - 1)));
      c.gates.push_back({id, GateKind::And, a, b});
    }
  }
  c.output = c.total_gates();
  return c;
}

// Criteria 1 and 2 share one corpus and one decode per input: the final bit
// must match the circuit output, and the whole T-token trace must match the
// topological gate values.
void criteria_1_2() {
  Timer timer;
  std::mt19937_64 rng(20240101);
  const int n_circuits = 200;
  std::size_t inputs_total = 0, final_ok = 0, trace_ok = 0;
  for (int ci = 0; ci < n_circuits; ++ci) {
    int n = 2 + static_cast<int>(rng_below(rng, 7));
    int gates = 1 + static_cast<int>(rng_below(rng, 64));
    Circuit c = random_and_not_circuit(rng, n, gates);
    CompiledArtifact art = compile(c, 2);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
      std::vector<int> prompt(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = (v >> i) & 1u;
        prompt[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
      }
      GateValueRow row = evaluate(c, x);
      CotTrace trace = decode_cot(art.params, prompt, static_cast<std::size_t>(art.n_steps));
      ++inputs_total;
      if (trace.complete() && trace.tokens.back() == row.output_bit) ++final_ok;
      bool whole = trace.complete();
      for (int i = 0; whole && i < art.n_steps; ++i)
        whole = trace.tokens[static_cast<std::size_t>(i)] ==
                row.values[static_cast<std::size_t>(art.n_inputs + i)];
      if (whole) ++trace_ok;
    }
  }
  double secs = timer.seconds();
  std::ostringstream d1;
  d1 << n_circuits << " circuits, " << final_ok << "/" << inputs_total
     << " inputs decode the circuit output";
  report(1, "compiled CoT equals circuit evaluation on all inputs",
         final_ok == inputs_total && secs < 60.0, d1.str() + (secs < 60.0 ? "" : ", OVER TIME"),
         secs);
  std::ostringstream d2;
  d2 << trace_ok << "/" << inputs_total << " full traces equal the gate-value sequence";
  report(2, "CoT trace fidelity", trace_ok == inputs_total, d2.str(), secs);
}

void criterion_3() {
  Timer timer;
  bool ok = true;
  for (int s = 1; s <= 8; ++s) {
    PrecisionConfig cfg{0, s};
    FpNumber b = FpNumber::max_positive(cfg);
    FpNumber nb = sub_rounded(FpNumber::zero(cfg), b);
    ok &= exp_rounded(nb).is_zero();
    ok &= exp_rounded(b) == b;
  }
  report(3, "round(exp(-B_s)) = 0 and round(exp(B_s)) = B_s for s=1..8", ok, "exact", timer.seconds());
}

void criterion_4() {
  Timer timer;
  PrecisionConfig s2{0, 2};
  bool ok = true;
  std::size_t pairs = 0;
  for (int k = 1; k <= 6; ++k) {
    SelectionGadget g = build_selection_qk(k, s2);
    std::vector<int> all_ids;
    for (int j = 1; j < (1 << k); ++j) all_ids.push_back(j);
    for (int i = 1; i < (1 << k); ++i) {
      FpVec sc = g.scores(i, all_ids);
      for (int j = 1; j < (1 << k); ++j, ++pairs)
        ok &= sc[static_cast<std::size_t>(j - 1)] == FpNumber::from_int(i == j ? 1 : 0, s2);
    }
  }
  report(4, "selection softmax is exactly one-hot for k=1..6, s=2", ok,
         std::to_string(pairs) + " (query,key) pairs", timer.seconds());
}

void criterion_5() {
  Timer timer;
  PrecisionConfig s2{0, 2};
  bool ok = true;
  std::size_t rows = 0;
  for (int n = 1; n <= 10; ++n) {
    LayerParams andg = build_boolean_ff_gate(BoolGate::And, n, s2);
    LayerParams org = build_boolean_ff_gate(BoolGate::Or, n, s2);
    int ms = std::max(2, static_cast<int>(std::bit_width(static_cast<unsigned>(n) - 1)) + 1);
    PrecisionConfig mcfg{0, ms};
    LayerParams majg = build_boolean_ff_gate(BoolGate::Majority, n, mcfg);
    for (unsigned v = 0; v < (1u << n); ++v, ++rows) {
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
      int ones = 0;
      for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = (v >> i) & 1u;
        ones += x[static_cast<std::size_t>(i)];
      }
      ok &= eval_boolean_ff_gate(andg, x, s2) == (ones == n ? 1 : 0);
      ok &= eval_boolean_ff_gate(org, x, s2) == (ones > 0 ? 1 : 0);
      ok &= eval_boolean_ff_gate(majg, x, mcfg) == (2 * ones > n ? 1 : 0);
    }
  }
  report(5, "AND/OR at s=2 and MAJORITY at s=max(2,ceil(log2 n)+1), fan-in <= 10", ok,
         std::to_string(rows) + " truth-table rows, exhaustive", timer.seconds());
}

void criterion_6() {
  Timer timer;
  bool ok = true;
  std::size_t cases = 0;
  {
    PrecisionConfig cfg{0, 1};
    std::vector<FpNumber> values;
    for (std::int64_t sig = -3; sig <= 3; ++sig)
      values.push_back(FpNumber::from_scaled(sig, 0, cfg));
    std::vector<std::size_t> idx(4, 0);
    for (;;) {
      FpVec xs;
      for (std::size_t i : idx) xs.push_back(values[i]);
      ok &= gridworld_sum(xs) == sum_iter(xs);
      ++cases;
      std::size_t p = 0;
      while (p < 4 && ++idx[p] == values.size()) idx[p++] = 0;
      if (p == 4) break;
    }
  }
  for (int s : {4, 8, 16}) {
    PrecisionConfig cfg{0, s};
    const auto m = static_cast<std::uint64_t>(cfg.max_significand());
    std::mt19937_64 rng(0xabcd0000u + static_cast<unsigned>(s));
    for (int trial = 0; trial < 100000; ++trial, ++cases) {
      FpVec xs;
      xs.reserve(1000);
      for (int i = 0; i < 1000; ++i) {
        auto sig = static_cast<std::int64_t>(rng_below(rng, 2 * m + 1)) - static_cast<std::int64_t>(m);
        xs.push_back(FpNumber::from_scaled(sig, 0, cfg));
      }
      ok &= gridworld_sum(xs) == sum_iter(xs);
    }
  }
  double secs = timer.seconds();
  report(6, "overflow-tracking sum equals the left fold", ok && secs < 120.0,
         std::to_string(cases) + " sequences (2401 exhaustive at s=1 + 3x100000 random length-1000)" +
             (secs < 120.0 ? "" : ", OVER TIME"),
         secs);
}

void criterion_7() {
  Timer timer;
  bool ok = true;
  for (int e = 0; e <= 2; ++e)
    for (int s = 1; s <= 3; ++s) ok &= check_ordered(PrecisionConfig{e, s}).ordered;
  bool aperiodic = check_aperiodic(PrecisionConfig{0, 1});
  report(7, "rounded addition is ordered (e<=2, s<=3) and its monoid aperiodic (e=0, s=1)",
         ok && aperiodic, "exhaustive", timer.seconds());
}

void criterion_8() {
  Timer timer;
  bool ok = true;
  std::ostringstream witnesses;
  for (int s = 1; s <= 8; ++s) {
    PrecisionConfig cfg{0, s};
    std::vector<FpNumber> grid;
    for (std::int64_t sig = cfg.max_significand(); sig >= -cfg.max_significand(); --sig)
      grid.push_back(FpNumber::from_scaled(sig, 0, cfg));  // descending
    bool found = false;
    for (std::size_t ia = 0; ia < grid.size() && !found; ++ia)
      for (std::size_t ib = 0; ib < grid.size() && !found; ++ib)
        for (std::size_t ic = grid.size(); ic-- > 0 && !found;) {
          const FpNumber &a = grid[ia], &b = grid[ib], &c = grid[ic];
          FpNumber left = add_rounded(add_rounded(a, b), c);
          FpNumber right = add_rounded(a, add_rounded(b, c));
          if (left != right) {
            found = true;
            witnesses << " s=" << s << ":(" << a.to_decimal_string() << ","
                      << b.to_decimal_string() << "," << c.to_decimal_string() << ")";
          }
        }
    ok &= found;
  }
  report(8, "non-associativity witness found for every s=1..8", ok, "witnesses:" + witnesses.str(),
         timer.seconds());
}

void criterion_9() {
  Timer timer;
  bool ok = true;
  std::size_t cases = 0;
  // exhaustive at small configurations: fixed points, idempotence, odd
  // symmetry over the grid and all midpoints, monotonicity over all pairs
  for (int e = 0; e <= 1; ++e)
    for (int s = 1; s <= 3; ++s) {
      PrecisionConfig cfg{e, s};
      std::vector<Rational> grid;
      for (int ex = cfg.exponent_min(); ex <= cfg.exponent_max(); ++ex)
        for (std::int64_t sig = -cfg.max_significand(); sig <= cfg.max_significand(); ++sig)
          grid.push_back(FpNumber::from_scaled(sig, ex, cfg).value());
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      std::vector<Rational> probes = grid;
      for (std::size_t i = 0; i + 1 < grid.size(); ++i) probes.push_back((grid[i] + grid[i + 1]) / 2);
      Rational prev_rounded;
      bool have_prev = false;
      std::sort(probes.begin(), probes.end());
      for (const Rational& q : probes) {
        FpNumber r = round_to_grid(q, cfg);
        ok &= round_to_grid(r.value(), cfg) == r;                 // idempotent
        ok &= round_to_grid(-q, cfg).value() == -r.value();       // odd symmetry
        if (have_prev) ok &= prev_rounded <= r.value();           // monotone in probe order
        prev_rounded = r.value();
        have_prev = true;
        ++cases;
      }
    }
  // randomized bulk: one million cases across larger configurations
  std::mt19937_64 rng(555);
  const PrecisionConfig cfgs[] = {{0, 8}, {0, 16}, {2, 4}, {4, 6}};
  for (const PrecisionConfig& cfg : cfgs) {
    for (int trial = 0; trial < 250000; ++trial, ++cases) {
      auto num = static_cast<long>(rng_below(rng, 1 << 21)) - (1 << 20);
      auto den = static_cast<long>(rng_below(rng, 1 << 10)) + 1;
      Rational x(num, den);
      x.canonicalize();
      auto num2 = static_cast<long>(rng_below(rng, 1 << 21)) - (1 << 20);
      Rational y(num2, den);
      y.canonicalize();
      if (y < x) std::swap(x, y);
      FpNumber rx = round_to_grid(x, cfg), ry = round_to_grid(y, cfg);
      ok &= rx.value() <= ry.value();                        // monotone
      ok &= round_to_grid(rx.value(), cfg) == rx;            // idempotent
      ok &= round_to_grid(-x, cfg).value() == -rx.value();   // odd symmetry
    }
  }
  report(9, "kernel laws: idempotence, monotonicity, odd symmetry", ok,
         std::to_string(cases) + " cases, zero failures allowed", timer.seconds());
}

void criterion_10() {
  Timer timer;
  bool ok = true;
  std::ostringstream detail;
  GeneratorConfig cfgs[4];
  cfgs[0].task = TaskKind::ModAdd;
  cfgs[0].modulus = 7;
  cfgs[0].length = 16;
  cfgs[1].task = TaskKind::PermComp;
  cfgs[1].perm_size = 5;
  cfgs[1].perm_count = 6;
  cfgs[2].task = TaskKind::IterSq;
  cfgs[2].bound = 1000;
  cfgs[2].max_squarings = 8;
  cfgs[3].task = TaskKind::Cvp;
  cfgs[3].cvp_gates = 20;
  for (GeneratorConfig& cfg : cfgs) {
    cfg.count = 10000;
    cfg.seed = 777;
    auto data = generate_dataset(cfg);
    std::size_t bad = 0;
    for (const auto& inst : data)
      if (verify_task_instance(cfg, inst)) ++bad;
    bool bytes_ok = true;
    for (DatasetVariant v : {DatasetVariant::Base, DatasetVariant::Cot, DatasetVariant::Hint}) {
      std::string once = serialize_dataset(data, v, cfg);
      std::string again = serialize_dataset(generate_dataset(cfg), v, cfg);
      bytes_ok &= once == again;
    }
    ok &= bad == 0 && bytes_ok;
    detail << task_kind_name(cfg.task) << ":" << (data.size() - bad) << "/" << data.size()
           << (bytes_ok ? " bytes-stable " : " BYTES-DIFFER ");
  }
  report(10, "dataset invariants and byte-identical regeneration (10^4 per task)", ok, detail.str(),
         timer.seconds());
}

}  // namespace

int main() {
  Timer total;
  criteria_1_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%s: %d criterion failure(s), %.1f s total\n", g_failures == 0 ? "ACCEPTED" : "REJECTED",
              g_failures, total.seconds());
  return g_failures == 0 ? 0 : 1;
}

// cotc: batch front end for the finite-precision transformer toolkit.
//
// Subcommands:
//   compile  circuit text -> weights file (+ optional sidecar metadata)
//   run      greedy CoT decoding from a weights file
//   eval     reference circuit evaluation (no transformer)
//   verify   compiled model vs. circuit evaluator, exhaustive or sampled
//   check    property suites: rounding, lemmas, automaton, gates, sum
//   gen      synthetic task datasets (modadd / permcomp / itersq / cvp)
//   sum      one iterated rounded sum, fold and overflow-tracking algorithm
//
// Every subcommand is deterministic given its flags; randomness always comes
// from an explicit --seed.  Exit status 0 iff all requested checks passed.

#include <cotc/circuit.hpp>
#include <cotc/compiler.hpp>
#include <cotc/fpnum.hpp>
#include <cotc/serialsum.hpp>
#include <cotc/tasks.hpp>
#include <cotc/transformer.hpp>
#include <cotc/weights_io.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace cotc;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

// "1,0,1", "1 0 1", or "101" (single-character tokens) -> token strings
std::vector<std::string> split_input_tokens(const std::string& text) {
  std::vector<std::string> toks;
  if (text.find(',') != std::string::npos || text.find(' ') != std::string::npos) {
    std::string cur;
    for (char c : text) {
      if (c == ',' || c == ' ') {
        if (!cur.empty()) toks.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) toks.push_back(std::move(cur));
  } else {
    for (char c : text) toks.emplace_back(1, c);
  }
  if (toks.empty()) throw std::runtime_error("empty input token string");
  return toks;
}

std::vector<std::uint8_t> parse_bits(const std::vector<std::string>& toks) {
  std::vector<std::uint8_t> bits;
  for (const auto& t : toks) {
    if (t == "0")
      bits.push_back(0);
    else if (t == "1")
      bits.push_back(1);
    else
      throw std::runtime_error("input token '" + t + "' is not a bit");
  }
  return bits;
}

unsigned default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// --- compile ---------------------------------------------------------------

int cmd_compile(const std::string& circuit_path, int precision, const std::string& out_path,
                std::string meta_path, bool lower) {
  Circuit c = parse_circuit(read_file(circuit_path));
  if (lower) c = lower_to_and_not(c);
  CompiledArtifact art = compile(c, precision);
  save_weights(art.params, out_path);
  if (meta_path.empty()) meta_path = out_path + ".meta.json";
  write_file(meta_path, artifact_metadata_to_json(art).dump(1) + "\n");
  std::cout << "compiled " << circuit_path << ": n=" << art.n_inputs << " T=" << art.n_steps
            << " k=" << art.k << " d=" << art.params.d << " s=" << precision << "\n";
  return 0;
}

// --- run ---------------------------------------------------------------------

int cmd_run(const std::string& weights_path, const std::string& input, std::size_t steps,
            bool trace) {
  TransformerParams params = load_weights(weights_path);
  std::vector<int> prompt;
  for (const auto& tok : split_input_tokens(input)) prompt.push_back(params.token_id(tok));
  CotTrace t = decode_cot(params, prompt, steps);
  for (std::size_t i = 0; i < t.tokens.size(); ++i)
    std::cout << (i ? " " : "") << params.vocab[static_cast<std::size_t>(t.tokens[i])];
  std::cout << "\n";
  if (trace) {
    for (std::size_t i = 0; i < t.tokens.size(); ++i) {
      std::cout << "step " << i + 1 << " token=" << params.vocab[static_cast<std::size_t>(t.tokens[i])]
                << " logits=[";
      for (std::size_t j = 0; j < t.step_logits[i].size(); ++j)
        std::cout << (j ? " " : "") << t.step_logits[i][j].to_decimal_string();
      std::cout << "]\n";
    }
  }
  if (!t.complete()) {
    std::cerr << "run failed: " << t.error << "\n";
    return 1;
  }
  return 0;
}

// --- eval (circuit only) -----------------------------------------------------

int cmd_eval(const std::string& circuit_path, const std::string& input) {
  Circuit c = parse_circuit(read_file(circuit_path));
  auto bits = parse_bits(split_input_tokens(input));
  GateValueRow row = evaluate(c, bits);
  std::cout << "gates:";
  for (std::size_t i = static_cast<std::size_t>(c.n_inputs); i < row.values.size(); ++i)
    std::cout << " " << static_cast<int>(row.values[i]);
  std::cout << "\noutput: " << static_cast<int>(row.output_bit) << "\n";
  return 0;
}

// --- verify -------------------------------------------------------------------

int cmd_verify(const std::string& circuit_path, int precision, bool exhaustive, std::size_t samples,
               std::uint64_t seed, const std::string& weights_override, bool lower,
               const std::string& report_path, unsigned threads) {
  Circuit c = parse_circuit(read_file(circuit_path));
  if (lower) c = lower_to_and_not(c);
  CompiledArtifact art = compile(c, precision);
  if (!weights_override.empty()) art.params = load_weights(weights_override);
  VerifyMode mode = exhaustive ? VerifyMode::Exhaustive() : VerifyMode::Sampled(samples, seed);
  VerifyReport r = verify_compiled(art, c, mode, threads);

  if (!report_path.empty()) {
    std::ostringstream out;
    for (const auto& mm : r.mismatches) {
      nlohmann::json rec;
      std::string bits;
      for (auto b : mm.input) bits.push_back(b ? '1' : '0');
      rec["input"] = bits;
      rec["first_divergent_gate"] = mm.first_divergent_gate;
      rec["expected"] = mm.expected;
      rec["got"] = mm.got;
      out << rec.dump() << "\n";
    }
    write_file(report_path, out.str());
  }
  std::cout << r.agreements << "/" << r.inputs_checked << " agree\n";
  for (std::size_t i = 0; i < r.mismatches.size() && i < 5; ++i) {
    const auto& mm = r.mismatches[i];
    std::string bits;
    for (auto b : mm.input) bits.push_back(b ? '1' : '0');
    std::cout << "mismatch input=" << bits << " first divergent gate " << mm.first_divergent_gate
              << " expected " << mm.expected << " got " << mm.got << "\n";
  }
  return r.all_agree() ? 0 : 1;
}

// --- check --------------------------------------------------------------------

struct CheckCounter {
  int passed = 0;
  int failed = 0;

  void report(const std::string& name, bool ok) {
    (ok ? passed : failed) += 1;
    std::cout << (ok ? "ok " : "FAIL ") << name << "\n";
  }
  int exit_code() const {
    std::cout << passed << " passed, " << failed << " failed\n";
    return failed == 0 ? 0 : 1;
  }
};

int check_rounding(std::size_t trials, std::uint64_t seed) {
  CheckCounter cc;
  std::mt19937_64 rng(seed);
  for (int e = 0; e <= 1; ++e)
    for (int s = 1; s <= 3; ++s) {
      PrecisionConfig cfg{e, s};
      bool fixed = true, odd = true;
      for (int ex = cfg.exponent_min(); ex <= cfg.exponent_max(); ++ex)
        for (std::int64_t sig = -cfg.max_significand(); sig <= cfg.max_significand(); ++sig) {
          FpNumber v = FpNumber::from_scaled(sig, ex, cfg);
          fixed &= round_to_grid(v.value(), cfg) == v;
          odd &= round_to_grid(-v.value(), cfg).value() == -v.value();
        }
      cc.report("fixed points e=" + std::to_string(e) + " s=" + std::to_string(s), fixed);
      cc.report("odd symmetry e=" + std::to_string(e) + " s=" + std::to_string(s), odd);
    }
  PrecisionConfig cfg{0, 4};
  bool mono = true, idem = true;
  for (std::size_t t = 0; t < trials; ++t) {
    auto draw = [&] {
      auto num = static_cast<long>(rng() % 4096) - 2048;
      auto den = static_cast<long>(rng() % 128) + 1;
      Rational q(num, den);
      q.canonicalize();
      return q;
    };
    Rational x = draw(), y = draw();
    if (y < x) std::swap(x, y);
    FpNumber rx = round_to_grid(x, cfg), ry = round_to_grid(y, cfg);
    mono &= rx.value() <= ry.value();
    idem &= round_to_grid(rx.value(), cfg) == rx;
  }
  cc.report("monotone over " + std::to_string(trials) + " random rationals", mono);
  cc.report("idempotent over " + std::to_string(trials) + " random rationals", idem);
  return cc.exit_code();
}

int check_lemmas() {
  CheckCounter cc;
  // exp endpoints, s = 1..8
  bool exp_lo = true, exp_hi = true;
  for (int s = 1; s <= 8; ++s) {
    PrecisionConfig cfg{0, s};
    FpNumber b = FpNumber::max_positive(cfg);
    FpNumber nb = sub_rounded(FpNumber::zero(cfg), b);
    exp_lo &= exp_rounded(nb).is_zero();
    exp_hi &= exp_rounded(b) == b;
  }
  cc.report("round(exp(-B_s)) = 0 for s=1..8", exp_lo);
  cc.report("round(exp(B_s)) = B_s for s=1..8", exp_hi);

  // selection scores one-hot, k = 1..6 at s = 2
  PrecisionConfig s2{0, 2};
  bool onehot = true;
  for (int k = 1; k <= 6 && onehot; ++k) {
    SelectionGadget g = build_selection_qk(k, s2);
    for (int i = 1; i < (1 << k) && onehot; ++i)
      for (int j = 1; j < (1 << k); ++j) {
        FpNumber e = exp_rounded(inner_rounded(g.query(i), g.key(j)));
        if (!(e == FpNumber::from_int(i == j ? 1 : 0, s2))) {
          onehot = false;
          break;
        }
      }
  }
  cc.report("selection gadget exact one-hot, k=1..6", onehot);

  // relu(a) - relu(a-1) = 1[a > 0] on the integer points of F_{0,2}
  bool indicator = true;
  for (int a = -3; a <= 3; ++a) {
    FpNumber fa = FpNumber::from_int(a, s2);
    FpNumber d = sub_rounded(relu(fa), relu(sub_rounded(fa, FpNumber::from_int(1, s2))));
    indicator &= d == FpNumber::from_int(a > 0 ? 1 : 0, s2);
  }
  cc.report("relu indicator identity on integer grid", indicator);

  // boolean gates at small fan-in
  bool gates_ok = true;
  for (int n = 1; n <= 5; ++n) {
    LayerParams andg = build_boolean_ff_gate(BoolGate::And, n, s2);
    LayerParams org = build_boolean_ff_gate(BoolGate::Or, n, s2);
    int ms = std::max(2, static_cast<int>(std::bit_width(static_cast<unsigned>(n) - 1)) + 1);
    PrecisionConfig mcfg{0, ms};
    LayerParams majg = build_boolean_ff_gate(BoolGate::Majority, n, mcfg);
    for (unsigned v = 0; v < (1u << n); ++v) {
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
      int ones = 0;
      for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = (v >> i) & 1u;
        ones += x[static_cast<std::size_t>(i)];
      }
      gates_ok &= eval_boolean_ff_gate(andg, x, s2) == (ones == n ? 1 : 0);
      gates_ok &= eval_boolean_ff_gate(org, x, s2) == (ones > 0 ? 1 : 0);
      gates_ok &= eval_boolean_ff_gate(majg, x, mcfg) == (2 * ones > n ? 1 : 0);
    }
  }
  cc.report("AND/OR/MAJORITY feed-forward gates, fan-in 1..5", gates_ok);
  return cc.exit_code();
}

int check_automaton(int e, int s) {
  CheckCounter cc;
  PrecisionConfig cfg{e, s};
  AdditionAutomaton a = build_addition_automaton(cfg);
  OrderedCheckResult r = check_ordered(a);
  cc.report("ordered (|Q|=" + std::to_string(a.size()) + ")", r.ordered);
  if (e == 0 && s == 1) cc.report("transformation monoid aperiodic", check_aperiodic(a));
  return cc.exit_code();
}

int check_gates() {
  CheckCounter cc;
  PrecisionConfig s2{0, 2};
  for (int n = 1; n <= 10; ++n) {
    LayerParams andg = build_boolean_ff_gate(BoolGate::And, n, s2);
    LayerParams org = build_boolean_ff_gate(BoolGate::Or, n, s2);
    int ms = std::max(2, static_cast<int>(std::bit_width(static_cast<unsigned>(n) - 1)) + 1);
    PrecisionConfig mcfg{0, ms};
    LayerParams majg = build_boolean_ff_gate(BoolGate::Majority, n, mcfg);
    bool ok = true;
    for (unsigned v = 0; v < (1u << n); ++v) {
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
    cc.report("fan-in " + std::to_string(n) + " exhaustive", ok);
  }
  return cc.exit_code();
}

int check_sum(int s, std::size_t trials, std::size_t length, std::uint64_t seed) {
  CheckCounter cc;
  {
    // exhaustive at s=1 over all sequences of length <= 4
    PrecisionConfig cfg{0, 1};
    std::vector<FpNumber> values;
    for (std::int64_t sig = -3; sig <= 3; ++sig) values.push_back(FpNumber::from_scaled(sig, 0, cfg));
    bool ok = true;
    for (std::size_t len = 1; len <= 4 && ok; ++len) {
      std::vector<std::size_t> idx(len, 0);
      for (;;) {
        FpVec xs;
        for (std::size_t i : idx) xs.push_back(values[i]);
        if (!(gridworld_sum(xs) == sum_iter(xs))) {
          ok = false;
          break;
        }
        std::size_t p = 0;
        while (p < len && ++idx[p] == values.size()) idx[p++] = 0;
        if (p == len) break;
      }
    }
    cc.report("exhaustive s=1 length<=4", ok);
  }
  PrecisionConfig cfg{0, s};
  std::mt19937_64 rng(seed);
  const auto m = static_cast<std::uint64_t>(cfg.max_significand());
  bool ok = true;
  std::size_t first_bad = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    FpVec xs;
    xs.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
      auto sig = static_cast<std::int64_t>(rng() % (2 * m + 1)) - static_cast<std::int64_t>(m);
      xs.push_back(FpNumber::from_scaled(sig, 0, cfg));
    }
    if (!(gridworld_sum(xs) == sum_iter(xs))) {
      ok = false;
      first_bad = t;
      break;
    }
  }
  std::string name = "gridworld = fold, s=" + std::to_string(s) + ", " + std::to_string(trials) +
                     " random sequences of length " + std::to_string(length);
  cc.report(ok ? name : name + " (first mismatch at trial " + std::to_string(first_bad) + ")", ok);
  return cc.exit_code();
}

// --- gen ----------------------------------------------------------------------

int cmd_gen(const GeneratorConfig& cfg, DatasetVariant variant, const std::string& out_path) {
  auto data = generate_dataset(cfg);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto err = verify_task_instance(cfg, data[i]);
    if (err) throw std::logic_error("generated instance " + std::to_string(i) + " invalid: " + *err);
  }
  write_dataset(data, variant, cfg, out_path);
  std::cout << "wrote " << data.size() << " " << task_kind_name(cfg.task) << " instances ("
            << dataset_variant_name(variant) << ") to " << out_path << "\n";
  return 0;
}

// --- sum ----------------------------------------------------------------------

int cmd_sum(int e, int s, const std::string& values) {
  PrecisionConfig cfg{e, s};
  cfg.validate();
  FpVec xs;
  for (const auto& tok : split_input_tokens(values)) xs.push_back(parse_decimal_exact(tok, cfg));
  FpNumber fold = sum_iter(xs);
  std::cout << "fold: " << fold.to_decimal_string() << "\n";
  if (e == 0) {
    FpNumber gw = gridworld_sum(xs);
    std::cout << "gridworld: " << gw.to_decimal_string() << "\n";
    std::cout << (gw == fold ? "agree" : "MISMATCH") << "\n";
    return gw == fold ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-precision transformers that execute boolean circuits"};
  app.require_subcommand(1);

  std::string circuit_path, out_path, meta_path, weights_path, input, values, report_path;
  int precision = 2;
  bool lower = false, trace = false, exhaustive = false;
  std::size_t steps = 0, samples = 256;
  std::uint64_t seed = 0;
  unsigned threads = default_threads();

  auto* compile_cmd = app.add_subcommand("compile", "compile a circuit into transformer weights");
  compile_cmd->add_option("--circuit", circuit_path, "circuit text file")->required();
  compile_cmd->add_option("--s", precision, "precision (s >= 2)")->capture_default_str();
  compile_cmd->add_option("--out", out_path, "weights file to write")->required();
  compile_cmd->add_option("--meta", meta_path, "sidecar metadata file (default: <out>.meta.json)");
  compile_cmd->add_flag("--lower", lower, "lower OR gates via De Morgan first");

  auto* run_cmd = app.add_subcommand("run", "greedy chain-of-thought decoding");
  run_cmd->add_option("--weights", weights_path, "weights file")->required();
  run_cmd->add_option("--input", input, "input tokens (e.g. \"11\" or \"1,1\")")->required();
  run_cmd->add_option("--steps", steps, "number of CoT steps")->required();
  run_cmd->add_flag("--trace", trace, "dump per-step logits");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a circuit with the reference evaluator");
  eval_cmd->add_option("--circuit", circuit_path, "circuit text file")->required();
  eval_cmd->add_option("--input", input, "input bits")->required();

  auto* verify_cmd = app.add_subcommand("verify", "compare compiled decoding against the evaluator");
  verify_cmd->add_option("--circuit", circuit_path, "circuit text file")->required();
  verify_cmd->add_option("--s", precision, "precision (s >= 2)")->capture_default_str();
  verify_cmd->add_flag("--exhaustive", exhaustive, "all 2^n inputs (n <= 20)");
  verify_cmd->add_option("--samples", samples, "random inputs when not exhaustive")->capture_default_str();
  verify_cmd->add_option("--seed", seed, "sampling seed")->capture_default_str();
  verify_cmd->add_option("--weights", weights_path, "override weights (fault injection)");
  verify_cmd->add_flag("--lower", lower, "lower OR gates via De Morgan first");
  verify_cmd->add_option("--report", report_path, "write mismatch records (JSON lines)");
  verify_cmd->add_option("--threads", threads, "worker threads")->capture_default_str();

  auto* check_cmd = app.add_subcommand("check", "run a property suite");
  std::string suite;
  int auto_e = 0, auto_s = 1;
  std::size_t trials = 10000, length = 1000;
  check_cmd->add_option("--suite", suite, "rounding|lemmas|automaton|gates|sum")->required();
  check_cmd->add_option("--e", auto_e, "exponent bits (automaton)")->capture_default_str();
  check_cmd->add_option("--s", auto_s, "precision (automaton/sum)")->capture_default_str();
  check_cmd->add_option("--trials", trials, "randomized trials (rounding/sum)")->capture_default_str();
  check_cmd->add_option("--len", length, "sequence length (sum)")->capture_default_str();
  check_cmd->add_option("--seed", seed, "randomized-trial seed")->capture_default_str();

  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic task dataset");
  std::string task = "modadd", variant = "cot";
  GeneratorConfig gcfg;
  std::size_t gen_m = 0;
  int gen_p = 0;
  gen_cmd->add_option("--task", task, "modadd|permcomp|itersq|cvp")->required();
  gen_cmd->add_option("--variant", variant, "base|cot|hint")->capture_default_str();
  gen_cmd->add_option("--count", gcfg.count, "instances")->capture_default_str();
  gen_cmd->add_option("--seed", gcfg.seed, "dataset seed")->capture_default_str();
  gen_cmd->add_option("--out", out_path, "output file")->required();
  gen_cmd->add_option("--p", gen_p, "modadd modulus / permcomp permutation size");
  gen_cmd->add_option("--n", gcfg.length, "modadd sequence length");
  gen_cmd->add_option("--m", gen_m, "permcomp count / cvp gate count");
  gen_cmd->add_option("--bound", gcfg.bound, "itersq vocabulary bound")->capture_default_str();
  gen_cmd->add_option("--max-squarings", gcfg.max_squarings, "itersq maximum squarings")
      ->capture_default_str();

  auto* sum_cmd = app.add_subcommand("sum", "iterated rounded sum of explicit values");
  int sum_e = 0, sum_s = 2;
  sum_cmd->add_option("--e", sum_e, "exponent bits")->capture_default_str();
  sum_cmd->add_option("--s", sum_s, "precision")->capture_default_str();
  sum_cmd->add_option("--values", values, "comma-separated exact decimals")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile_cmd) return cmd_compile(circuit_path, precision, out_path, meta_path, lower);
    if (*run_cmd) return cmd_run(weights_path, input, steps, trace);
    if (*eval_cmd) return cmd_eval(circuit_path, input);
    if (*verify_cmd)
      return cmd_verify(circuit_path, precision, exhaustive, samples, seed, weights_path, lower,
                        report_path, threads);
    if (*check_cmd) {
      if (suite == "rounding") return check_rounding(trials, seed);
      if (suite == "lemmas") return check_lemmas();
      if (suite == "automaton") return check_automaton(auto_e, auto_s);
      if (suite == "gates") return check_gates();
      if (suite == "sum") return check_sum(auto_s, trials, length, seed);
      std::cerr << "unknown suite '" << suite << "'\n";
      return 2;
    }
    if (*gen_cmd) {
      if (task == "modadd") {
        gcfg.task = TaskKind::ModAdd;
        if (gen_p) gcfg.modulus = gen_p;
      } else if (task == "permcomp") {
        gcfg.task = TaskKind::PermComp;
        if (gen_p) gcfg.perm_size = gen_p;
        if (gen_m) gcfg.perm_count = gen_m;
      } else if (task == "itersq") {
        gcfg.task = TaskKind::IterSq;
      } else if (task == "cvp") {
        gcfg.task = TaskKind::Cvp;
        if (gen_m) gcfg.cvp_gates = gen_m;
      } else {
        std::cerr << "unknown task '" << task << "'\n";
        return 2;
      }
      DatasetVariant v;
      if (variant == "base")
        v = DatasetVariant::Base;
      else if (variant == "cot")
        v = DatasetVariant::Cot;
      else if (variant == "hint")
        v = DatasetVariant::Hint;
      else {
        std::cerr << "unknown variant '" << variant << "'\n";
        return 2;
      }
      return cmd_gen(gcfg, v, out_path);
    }
    if (*sum_cmd) return cmd_sum(sum_e, sum_s, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

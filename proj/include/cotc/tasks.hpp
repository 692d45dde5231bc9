// Deterministic, seeded generators for the four synthetic benchmark tasks --
// modular addition, S_p permutation composition, iterated squaring, and the
// circuit value problem -- in base / cot / hint variants, plus the
// line-delimited dataset format and per-task consistency checks.
//
// Tokens are strings everywhere.  Each instance carries its input tokens
// (ending in '='), the chain of thought, per-position hint pairs, and the
// final label (a single token, or p tokens for permutation composition; the
// CoT always ends with the label tokens).  Hints are (position, token) pairs
// anchored at the earliest input position from which the hint token is
// computable.
//
// Instance i of a dataset draws from a generator seeded with
// splitmix64(seed, i), so parallel and serial generation produce identical
// files and regeneration under a fixed seed is byte-identical.

#pragma once

#include <cotc/circuit.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cotc {

enum class TaskKind { ModAdd, PermComp, IterSq, Cvp };
enum class DatasetVariant { Base, Cot, Hint };

inline const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::ModAdd: return "modadd";
    case TaskKind::PermComp: return "permcomp";
    case TaskKind::IterSq: return "itersq";
    case TaskKind::Cvp: return "cvp";
  }
  return "?";
}

inline const char* dataset_variant_name(DatasetVariant v) {
  switch (v) {
    case DatasetVariant::Base: return "base";
    case DatasetVariant::Cot: return "cot";
    case DatasetVariant::Hint: return "hint";
  }
  return "?";
}

struct TaskInstance {
  std::vector<std::string> tokens;                            // input, ends with '='
  std::vector<std::string> cot;                               // chain of thought
  std::vector<std::pair<std::size_t, std::string>> hints;     // (1-based position, token)
  std::vector<std::string> label;                             // final answer token(s)
};

struct GeneratorConfig {
  TaskKind task = TaskKind::ModAdd;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  // modadd
  int modulus = 7;
  std::size_t length = 8;  // n, including the trailing '='
  // permcomp
  int perm_size = 5;
  std::size_t perm_count = 3;  // m
  // itersq
  int bound = 1000;            // vocabulary bound T
  std::size_t max_squarings = 5;
  // cvp
  std::size_t cvp_gates = 8;  // m
};

namespace taskrng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t instance_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

// bias-free uniform draw in [0, n); mt19937_64 output is standardized, so
// this is portable where std::uniform_int_distribution is not
inline std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

}  // namespace taskrng

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

inline TaskInstance gen_modadd(int p, std::size_t n, std::uint64_t seed) {
  if (p < 2) throw std::invalid_argument("modadd: modulus must be >= 2");
  if (n < 2) throw std::invalid_argument("modadd: length must be >= 2");
  std::mt19937_64 rng(seed);
  TaskInstance inst;
  int running = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    int x = static_cast<int>(taskrng::below(rng, static_cast<std::uint64_t>(p)));
    inst.tokens.push_back(std::to_string(x));
    running = (running + x) % p;
    inst.cot.push_back(std::to_string(running));
    inst.hints.emplace_back(i + 1, inst.cot.back());
  }
  inst.tokens.push_back("=");
  inst.label = {inst.cot.back()};
  return inst;
}

// sigma o pi = (sigma_{pi_1}, ..., sigma_{pi_p}); the CoT is the flat
// concatenation of the running compositions, hints anchor coordinate t of the
// j-th running composition at the input position of coordinate t of sigma_j.
inline TaskInstance gen_permcomp(int p, std::size_t m, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("permcomp: permutation size must be >= 1");
  if (m < 1) throw std::invalid_argument("permcomp: need at least one permutation");
  std::mt19937_64 rng(seed);
  TaskInstance inst;
  std::vector<int> partial(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) partial[static_cast<std::size_t>(i)] = i + 1;  // identity

  for (std::size_t j = 0; j < m; ++j) {
    // Fisher-Yates
    std::vector<int> sigma(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) sigma[static_cast<std::size_t>(i)] = i + 1;
    for (int i = p - 1; i > 0; --i) {
      auto r = static_cast<std::size_t>(taskrng::below(rng, static_cast<std::uint64_t>(i) + 1));
      std::swap(sigma[static_cast<std::size_t>(i)], sigma[r]);
    }

    std::vector<int> next(static_cast<std::size_t>(p));
    for (int t = 0; t < p; ++t)
      next[static_cast<std::size_t>(t)] = partial[static_cast<std::size_t>(sigma[static_cast<std::size_t>(t)] - 1)];

    const std::size_t block_start = (static_cast<std::size_t>(p) + 2) * j;  // 0-based
    inst.tokens.push_back("(");
    for (int t = 0; t < p; ++t) {
      inst.tokens.push_back(std::to_string(sigma[static_cast<std::size_t>(t)]));
      inst.hints.emplace_back(block_start + 2 + static_cast<std::size_t>(t),
                              std::to_string(next[static_cast<std::size_t>(t)]));
    }
    inst.tokens.push_back(")");
    for (int t = 0; t < p; ++t) inst.cot.push_back(std::to_string(next[static_cast<std::size_t>(t)]));
    partial = std::move(next);
  }
  inst.tokens.push_back("=");
  for (int t = 0; t < p; ++t) inst.label.push_back(std::to_string(partial[static_cast<std::size_t>(t)]));
  return inst;
}

namespace taskdetail {

inline std::vector<int> primes_below(int bound) {
  std::vector<bool> sieve(static_cast<std::size_t>(bound), true);
  std::vector<int> primes;
  for (int i = 2; i < bound; ++i) {
    if (!sieve[static_cast<std::size_t>(i)]) continue;
    primes.push_back(i);
    for (int j = 2 * i; j < bound; j += i) sieve[static_cast<std::size_t>(j)] = false;
  }
  return primes;
}

}  // namespace taskdetail

// Input (p, r, ^2, ..., ^2, =) with a random prime p < bound, random
// 1 <= r < bound, and 1..max_squarings squarings; CoT is the successive
// squares r^{2^i} mod p.
inline TaskInstance gen_itersq(int bound, std::size_t max_squarings, std::uint64_t seed) {
  if (bound < 4) throw std::invalid_argument("itersq: bound must be >= 4");
  if (max_squarings < 1) throw std::invalid_argument("itersq: need at least one squaring");
  std::mt19937_64 rng(seed);
  auto primes = taskdetail::primes_below(bound);
  int p = primes[static_cast<std::size_t>(taskrng::below(rng, primes.size()))];
  int r = 1 + static_cast<int>(taskrng::below(rng, static_cast<std::uint64_t>(bound - 1)));
  auto squarings = static_cast<std::size_t>(1 + taskrng::below(rng, max_squarings));

  TaskInstance inst;
  inst.tokens.push_back(std::to_string(p));
  inst.tokens.push_back(std::to_string(r));
  long long f = r % p;
  for (std::size_t i = 0; i < squarings; ++i) {
    inst.tokens.push_back("^2");
    f = (f * f) % p;
    inst.cot.push_back(std::to_string(f));
    inst.hints.emplace_back(3 + i, inst.cot.back());  // position of the i-th ^2
  }
  inst.tokens.push_back("=");
  inst.label = {inst.cot.back()};
  return inst;
}

namespace taskdetail {

// Tokens of one CVP gate block and its CoT counterpart.
struct CvpGate {
  std::string type;  // TRUE/FALSE/AND/OR/NOT
  int a = 0, b = 0;  // fan-in ids, 0 = NA
};

// Random topologically sorted circuit: the first ceil(m/4) gates are
// TRUE/FALSE constants, later gates draw a uniform type with uniform earlier
// fan-ins.
inline std::vector<CvpGate> random_cvp_gates(std::size_t m, std::mt19937_64& rng) {
  const std::size_t constants = (m + 3) / 4;
  std::vector<CvpGate> gates;
  gates.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    CvpGate g;
    if (j < constants) {
      g.type = taskrng::below(rng, 2) ? "TRUE" : "FALSE";
    } else {
      switch (taskrng::below(rng, 3)) {
        case 0: g.type = "AND"; break;
        case 1: g.type = "OR"; break;
        default: g.type = "NOT"; break;
      }
      g.a = 1 + static_cast<int>(taskrng::below(rng, j));
      if (g.type != "NOT") g.b = 1 + static_cast<int>(taskrng::below(rng, j));
    }
    gates.push_back(std::move(g));
  }
  return gates;
}

// The constant gates become circuit inputs with a fixed assignment; the rest
// map onto the AND/OR/NOT IR, so the reference evaluator supplies all values.
// Malformed gate lists (constants after the prefix, bad fan-ins) throw.
inline GateValueRow eval_cvp_gates(const std::vector<CvpGate>& gates) {
  std::size_t constants = 0;
  while (constants < gates.size() && (gates[constants].type == "TRUE" || gates[constants].type == "FALSE"))
    ++constants;
  Circuit c;
  c.n_inputs = static_cast<int>(constants);
  std::vector<std::uint8_t> assignment;
  for (std::size_t j = 0; j < gates.size(); ++j) {
    int id = static_cast<int>(j) + 1;
    if (j < constants) {
      c.gates.push_back({id, GateKind::Input, 0, 0});
      assignment.push_back(gates[j].type == "TRUE" ? 1 : 0);
    } else if (gates[j].type == "NOT") {
      c.gates.push_back({id, GateKind::Not, gates[j].a, 0});
    } else if (gates[j].type == "AND" || gates[j].type == "OR") {
      c.gates.push_back({id, gates[j].type == "AND" ? GateKind::And : GateKind::Or, gates[j].a,
                         gates[j].b});
    } else {
      throw std::invalid_argument("cvp gate " + std::to_string(id) + ": bad type '" + gates[j].type +
                                  "'");
    }
  }
  c.output = c.total_gates();
  auto violations = validate(c);
  if (!violations.empty()) throw std::invalid_argument("cvp circuit: " + violations.front());
  return evaluate(c, assignment);
}

inline std::string bool_token(std::uint8_t v) { return v ? "TRUE" : "FALSE"; }

}  // namespace taskdetail

// Four tokens per gate: (type, in-id-or-NA, in-id-or-NA, gate-id), then '='.
// CoT mirrors the blocks with values in place of ids; the label is the value
// of the last gate.
inline TaskInstance gen_cvp(std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("cvp: need at least one gate");
  std::mt19937_64 rng(seed);
  auto gates = taskdetail::random_cvp_gates(m, rng);
  GateValueRow row = taskdetail::eval_cvp_gates(gates);

  TaskInstance inst;
  for (std::size_t j = 0; j < m; ++j) {
    const auto& g = gates[j];
    const std::size_t base = 4 * j;  // 0-based block start
    inst.tokens.push_back(g.type);
    inst.tokens.push_back(g.a ? std::to_string(g.a) : "NA");
    inst.tokens.push_back(g.b ? std::to_string(g.b) : "NA");
    inst.tokens.push_back(std::to_string(j + 1));

    std::string va = g.a ? taskdetail::bool_token(row.values[static_cast<std::size_t>(g.a - 1)]) : "NA";
    std::string vb = g.b ? taskdetail::bool_token(row.values[static_cast<std::size_t>(g.b - 1)]) : "NA";
    std::string vg = taskdetail::bool_token(row.values[j]);
    inst.cot.insert(inst.cot.end(), {g.type, va, vb, vg});
    inst.hints.emplace_back(base + 1, g.type);
    inst.hints.emplace_back(base + 2, va);
    inst.hints.emplace_back(base + 3, vb);
    inst.hints.emplace_back(base + 4, vg);
  }
  inst.tokens.push_back("=");
  inst.label = {taskdetail::bool_token(row.values[m - 1])};
  return inst;
}

inline TaskInstance generate_instance(const GeneratorConfig& cfg, std::size_t index) {
  const std::uint64_t seed = taskrng::instance_seed(cfg.seed, index);
  switch (cfg.task) {
    case TaskKind::ModAdd: return gen_modadd(cfg.modulus, cfg.length, seed);
    case TaskKind::PermComp: return gen_permcomp(cfg.perm_size, cfg.perm_count, seed);
    case TaskKind::IterSq: return gen_itersq(cfg.bound, cfg.max_squarings, seed);
    case TaskKind::Cvp: return gen_cvp(cfg.cvp_gates, seed);
  }
  throw std::logic_error("unknown task kind");
}

inline std::vector<TaskInstance> generate_dataset(const GeneratorConfig& cfg) {
  std::vector<TaskInstance> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) out.push_back(generate_instance(cfg, i));
  return out;
}

// ---------------------------------------------------------------------------
// Consistency checks (the module invariants, used by tests and the CLI)
// ---------------------------------------------------------------------------

// Returns an error description, or nullopt when the instance satisfies every
// invariant of its task.  Malformed tokens count as failures, not exceptions.
inline std::optional<std::string> verify_task_instance(const GeneratorConfig& cfg,
                                                       const TaskInstance& inst) try {
  if (inst.tokens.empty() || inst.tokens.back() != "=") return "input must end with '='";
  if (inst.label.empty() || inst.cot.size() < inst.label.size()) return "missing label or CoT";
  for (std::size_t i = 0; i < inst.label.size(); ++i)
    if (inst.cot[inst.cot.size() - inst.label.size() + i] != inst.label[i])
      return "CoT does not end with the label";
  for (const auto& [pos, tok] : inst.hints) {
    if (pos < 1 || pos > inst.tokens.size()) return "hint position out of range";
    (void)tok;
  }

  switch (cfg.task) {
    case TaskKind::ModAdd: {
      const std::size_t n = inst.tokens.size();
      if (inst.cot.size() != n - 1) return "modadd: CoT length must be n-1";
      if (inst.hints.size() != n - 1) return "modadd: hint per non-'=' position";
      int running = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        running = (running + std::stoi(inst.tokens[i])) % cfg.modulus;
        if (inst.cot[i] != std::to_string(running)) return "modadd: prefix-sum recurrence broken";
        if (inst.hints[i] != std::make_pair(i + 1, inst.cot[i]))
          return "modadd: hint misaligned";
      }
      break;
    }
    case TaskKind::PermComp: {
      const auto p = static_cast<std::size_t>(cfg.perm_size);
      const std::size_t m = cfg.perm_count;
      if (inst.tokens.size() != (p + 2) * m + 1) return "permcomp: wrong token count";
      if (inst.cot.size() != p * m) return "permcomp: wrong CoT length";
      if (inst.hints.size() != p * m) return "permcomp: hint per permutation coordinate";
      std::vector<int> partial(p);
      for (std::size_t i = 0; i < p; ++i) partial[i] = static_cast<int>(i) + 1;
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t block = (p + 2) * j;
        if (inst.tokens[block] != "(" || inst.tokens[block + p + 1] != ")")
          return "permcomp: malformed block";
        std::vector<int> sigma(p), next(p);
        for (std::size_t t = 0; t < p; ++t) {
          sigma[t] = std::stoi(inst.tokens[block + 1 + t]);
          if (sigma[t] < 1 || sigma[t] > static_cast<int>(p)) return "permcomp: coordinate out of range";
        }
        for (std::size_t t = 0; t < p; ++t)
          next[t] = partial[static_cast<std::size_t>(sigma[t] - 1)];
        for (std::size_t t = 0; t < p; ++t) {
          if (inst.cot[p * j + t] != std::to_string(next[t]))
            return "permcomp: composition recurrence broken";
          if (inst.hints[p * j + t] != std::make_pair(block + 2 + t, inst.cot[p * j + t]))
            return "permcomp: hint misaligned";
        }
        partial = std::move(next);
      }
      break;
    }
    case TaskKind::IterSq: {
      if (inst.tokens.size() < 4) return "itersq: too few tokens";
      long long p = std::stoll(inst.tokens[0]);
      if (p < 2) return "itersq: modulus must be at least 2";
      long long f = std::stoll(inst.tokens[1]) % p;
      const std::size_t squarings = inst.tokens.size() - 3;
      if (inst.cot.size() != squarings) return "itersq: wrong CoT length";
      if (inst.hints.size() != squarings) return "itersq: hint per squaring";
      for (std::size_t i = 0; i < squarings; ++i) {
        if (inst.tokens[2 + i] != "^2") return "itersq: malformed squaring token";
        f = (f * f) % p;
        if (inst.cot[i] != std::to_string(f)) return "itersq: squaring recurrence broken";
        if (inst.hints[i] != std::make_pair(3 + i, inst.cot[i])) return "itersq: hint misaligned";
      }
      break;
    }
    case TaskKind::Cvp: {
      const std::size_t m = (inst.tokens.size() - 1) / 4;
      if (inst.tokens.size() != 4 * m + 1 || m == 0) return "cvp: wrong token count";
      std::vector<taskdetail::CvpGate> gates;
      for (std::size_t j = 0; j < m; ++j) {
        taskdetail::CvpGate g;
        g.type = inst.tokens[4 * j];
        g.a = inst.tokens[4 * j + 1] == "NA" ? 0 : std::stoi(inst.tokens[4 * j + 1]);
        g.b = inst.tokens[4 * j + 2] == "NA" ? 0 : std::stoi(inst.tokens[4 * j + 2]);
        if (inst.tokens[4 * j + 3] != std::to_string(j + 1)) return "cvp: gate id mismatch";
        gates.push_back(std::move(g));
      }
      GateValueRow row = taskdetail::eval_cvp_gates(gates);
      if (inst.hints.size() != 4 * m) return "cvp: four hints per gate";
      for (std::size_t j = 0; j < m; ++j) {
        std::string va =
            gates[j].a ? taskdetail::bool_token(row.values[static_cast<std::size_t>(gates[j].a - 1)]) : "NA";
        std::string vb =
            gates[j].b ? taskdetail::bool_token(row.values[static_cast<std::size_t>(gates[j].b - 1)]) : "NA";
        if (inst.cot[4 * j] != gates[j].type || inst.cot[4 * j + 1] != va ||
            inst.cot[4 * j + 2] != vb ||
            inst.cot[4 * j + 3] != taskdetail::bool_token(row.values[j]))
          return "cvp: CoT does not re-evaluate";
        for (std::size_t t = 0; t < 4; ++t)
          if (inst.hints[4 * j + t] != std::make_pair(4 * j + t + 1, inst.cot[4 * j + t]))
            return "cvp: hint misaligned";
      }
      if (inst.label[0] != taskdetail::bool_token(row.output_bit)) return "cvp: label mismatch";
      break;
    }
  }
  return std::nullopt;
} catch (const std::exception& e) {
  return std::string("malformed instance: ") + e.what();
}

// ---------------------------------------------------------------------------
// Dataset serialization
// ---------------------------------------------------------------------------

inline nlohmann::json generator_config_to_json(const GeneratorConfig& cfg, DatasetVariant variant) {
  nlohmann::json j{{"task", task_kind_name(cfg.task)},
                   {"variant", dataset_variant_name(variant)},
                   {"seed", cfg.seed},
                   {"count", cfg.count}};
  switch (cfg.task) {
    case TaskKind::ModAdd:
      j["p"] = cfg.modulus;
      j["n"] = cfg.length;
      break;
    case TaskKind::PermComp:
      j["p"] = cfg.perm_size;
      j["m"] = cfg.perm_count;
      break;
    case TaskKind::IterSq:
      j["bound"] = cfg.bound;
      j["max_squarings"] = cfg.max_squarings;
      break;
    case TaskKind::Cvp:
      j["m"] = cfg.cvp_gates;
      break;
  }
  return j;
}

// One '#' header line echoing the configuration, then one JSON record per
// instance carrying "tokens" plus the variant's field.
inline std::string serialize_dataset(const std::vector<TaskInstance>& instances,
                                     DatasetVariant variant, const GeneratorConfig& cfg) {
  std::ostringstream out;
  out << "# " << generator_config_to_json(cfg, variant).dump() << "\n";
  for (const TaskInstance& inst : instances) {
    nlohmann::json rec{{"tokens", inst.tokens}};
    switch (variant) {
      case DatasetVariant::Base: rec["label"] = inst.label; break;
      case DatasetVariant::Cot: rec["cot"] = inst.cot; break;
      case DatasetVariant::Hint: {
        nlohmann::json hints = nlohmann::json::array();
        for (const auto& [pos, tok] : inst.hints) hints.push_back({pos, tok});
        rec["hints"] = std::move(hints);
        break;
      }
    }
    out << rec.dump() << "\n";
  }
  return out.str();
}

inline void write_dataset(const std::vector<TaskInstance>& instances, DatasetVariant variant,
                          const GeneratorConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << serialize_dataset(instances, variant, cfg);
  if (!out) throw std::runtime_error("write failed: '" + path + "'");
}

}  // namespace cotc

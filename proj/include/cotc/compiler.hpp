// Compiles an {AND, NOT} circuit into transformer weights whose greedy
// chain-of-thought decoding evaluates the circuit one gate per step, plus the
// standalone arithmetic gadgets the construction is made of:
//
//   - id-selection attention: query interleave(sbin_k(i), 1_k) against key
//     B_s * interleave(sbin_k(j), -1_k) folds to 0 on match and saturates at
//     -B_s otherwise, so the rounded softmax is an exact one-hot;
//   - the gate feed-forward F(a,b,c) = relu(1-a-c) + relu(a+b+c-2), which is
//     NOT(a) when c = 0 and AND(a,b) when c = 1;
//   - unbounded fan-in AND / OR / MAJORITY feed-forward nets over the
//     interleaved input (x_1, 1, ..., x_n, 1);
//   - uniform-copy attention: score B_s everywhere, saturating denominator,
//     every causal prefix weight exactly 1.
//
// The compiled model: vocab {0,1}, depth 2, width 3k+6 with k = ceil(log2(n+T)).
// The embedding at position p carries the token value (coord 1), two fetch
// slots (2, 3), the gate output slot (4), the gate selector c(p+1) (5), and
// the signed-binary ids of p, a(p+1), b(p+1) plus a constant 1.  Layer 1
// fetches x_{a(p+1)} into coord 2, layer 2 fetches x_{b(p+1)} into coord 3 and
// its feed-forward writes F into coord 4, which the output head reads.

#pragma once

#include <cotc/circuit.hpp>
#include <cotc/fpnum.hpp>
#include <cotc/transformer.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cotc {

class UnsupportedGateError : public std::runtime_error {
 public:
  explicit UnsupportedGateError(const std::string& what) : std::runtime_error(what) {}
};

// Signed binary encoding: sbin_k(x) = 2 bin_k(x) - 1 in {-1,+1}^k, MSB first.
inline std::vector<int> sbin(int x, int k) {
  if (x < 0 || (k < 63 && x >= (std::int64_t{1} << k)))
    throw std::invalid_argument("sbin: id out of range for bit width");
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int l = 0; l < k; ++l) out[static_cast<std::size_t>(l)] = ((x >> (k - 1 - l)) & 1) ? 1 : -1;
  return out;
}

// ---------------------------------------------------------------------------
// Standalone gadgets
// ---------------------------------------------------------------------------

// Id selection: rounded inner product is 0 on id match, -B_s
// otherwise, hence softmax over any causal prefix containing exactly one
// match is exactly one-hot.
struct SelectionGadget {
  int k = 1;
  PrecisionConfig cfg;

  FpVec query(int id) const {
    FpVec q;
    q.reserve(2 * static_cast<std::size_t>(k));
    for (int bit : sbin(id, k)) {
      q.push_back(FpNumber::from_int(bit, cfg));
      q.push_back(FpNumber::from_int(1, cfg));
    }
    return q;
  }

  FpVec key(int id) const {
    FpNumber b = FpNumber::max_positive(cfg);
    FpNumber nb = sub_rounded(FpNumber::zero(cfg), b);
    FpVec kv;
    kv.reserve(2 * static_cast<std::size_t>(k));
    for (int bit : sbin(id, k)) {
      kv.push_back(bit > 0 ? b : nb);
      kv.push_back(nb);
    }
    return kv;
  }

  // softmax_{e,s} scores of one query against a key prefix.
  FpVec scores(int query_id, const std::vector<int>& key_ids) const {
    FpVec q = query(query_id), raw;
    raw.reserve(key_ids.size());
    for (int id : key_ids) raw.push_back(inner_rounded(q, key(id)));
    return softmax_rounded(raw);
  }
};

inline SelectionGadget build_selection_qk(int id_bits, PrecisionConfig cfg) {
  cfg.validate();
  if (id_bits < 1) throw std::invalid_argument("selection gadget needs at least one id bit");
  return SelectionGadget{id_bits, cfg};
}

// Uniform copy: every score is exactly B_s, the denominator saturates at B_s,
// and B_s / B_s rounds to 1, so the softmax over any causal prefix is all ones.
struct UniformCopyGadget {
  PrecisionConfig cfg;
  FpVec query;  // (B_s)
  FpVec key;    // (1)

  FpVec scores(std::size_t prefix_len) const {
    FpVec raw(prefix_len, inner_rounded(query, key));
    return softmax_rounded(raw);
  }
};

inline UniformCopyGadget build_uniform_copy_attention(PrecisionConfig cfg) {
  cfg.validate();
  return UniformCopyGadget{cfg, {FpNumber::max_positive(cfg)}, {FpNumber::from_int(1, cfg)}};
}

namespace detail {

// F(a,b,c) as two relu units; shared between the standalone gadget and compile().
inline void wire_gate_ff(LayerParams& l, std::size_t a, std::size_t b, std::size_t c,
                         std::size_t out, PrecisionConfig cfg) {
  FpNumber one = FpNumber::from_int(1, cfg);
  FpNumber neg = FpNumber::from_int(-1, cfg);
  l.w_1.at(0, a) = neg;
  l.w_1.at(0, c) = neg;
  l.b_1[0] = one;
  l.w_1.at(1, a) = one;
  l.w_1.at(1, b) = one;
  l.w_1.at(1, c) = one;
  l.b_1[1] = FpNumber::from_int(-2, cfg);
  l.w_2.at(out, 0) = one;
  l.w_2.at(out, 1) = one;
}

inline LayerParams zeroed_layer(std::size_t d, PrecisionConfig cfg) {
  LayerParams l;
  l.w_q = l.w_k = l.w_v = l.w_o = l.w_1 = l.w_2 = FpMat(d, d, FpNumber::zero(cfg));
  l.b_1 = l.b_2 = FpVec(d, FpNumber::zero(cfg));
  return l;
}

}  // namespace detail

// Feed-forward computing F(a,b,c) over the layout (a, b, c, out); evaluate
// with ff_layer.  Needs the constant -2, hence s >= 2.
inline LayerParams build_gate_ff(PrecisionConfig cfg) {
  cfg.validate();
  if (cfg.s < 2) throw PrecisionError("gate feed-forward requires s >= 2");
  LayerParams l = detail::zeroed_layer(4, cfg);
  detail::wire_gate_ff(l, 0, 1, 2, 3, cfg);
  return l;
}

enum class BoolGate { And, Or, Majority };

// Unbounded fan-in AND / OR / MAJORITY as a two-unit feed-forward over the
// interleaved input (x_1, 1, x_2, 1, ..., x_n, 1); the result lands in
// coordinate 0.  AND and OR tolerate saturation; MAJORITY's running count
// must stay exact, hence its precision floor.
inline LayerParams build_boolean_ff_gate(BoolGate kind, int fan_in, PrecisionConfig cfg) {
  cfg.validate();
  if (fan_in < 1) throw std::invalid_argument("fan-in must be positive");
  int needed = 2;
  if (kind == BoolGate::Majority)
    needed = std::max(2, static_cast<int>(std::bit_width(static_cast<unsigned>(fan_in) - 1)) + 1);
  if (cfg.s < needed)
    throw PrecisionError("boolean feed-forward gate requires s >= " + std::to_string(needed));

  const auto d = static_cast<std::size_t>(2 * fan_in);
  LayerParams l = detail::zeroed_layer(d, cfg);
  FpNumber one = FpNumber::from_int(1, cfg);
  FpNumber neg = FpNumber::from_int(-1, cfg);
  for (int i = 0; i < fan_in; ++i) {
    const auto xc = static_cast<std::size_t>(2 * i);      // x_i slot
    const auto oc = xc + 1;                               // constant-1 slot
    switch (kind) {
      case BoolGate::And:
        l.w_1.at(0, xc) = one;
        l.w_1.at(0, oc) = neg;
        break;
      case BoolGate::Or:
        l.w_1.at(0, xc) = one;
        break;
      case BoolGate::Majority:
        l.w_1.at(0, xc) = FpNumber::from_int(2, cfg);
        l.w_1.at(0, oc) = neg;
        break;
    }
  }
  for (std::size_t c = 0; c < d; ++c) l.w_1.at(1, c) = l.w_1.at(0, c);
  if (kind == BoolGate::And) {
    l.b_1[0] = one;
    // second unit bias stays 0
  } else {
    // OR and MAJORITY: indicator of sum > 0
    l.b_1[1] = neg;
  }
  l.w_2.at(0, 0) = one;
  l.w_2.at(0, 1) = neg;
  return l;
}

// Evaluates a boolean feed-forward gadget on a bit vector (interleaving with
// the constant-1 inputs the construction requires).
inline int eval_boolean_ff_gate(const LayerParams& gate, const std::vector<std::uint8_t>& x,
                                PrecisionConfig cfg) {
  FpVec h;
  h.reserve(2 * x.size());
  for (std::uint8_t bit : x) {
    h.push_back(FpNumber::from_int(bit, cfg));
    h.push_back(FpNumber::from_int(1, cfg));
  }
  FpNumber out = ff_layer(gate, h)[0];
  if (out == FpNumber::from_int(1, cfg)) return 1;
  if (out.is_zero()) return 0;
  throw std::logic_error("boolean ff gate produced a non-bit value");
}

// ---------------------------------------------------------------------------
// The circuit-to-transformer compiler
// ---------------------------------------------------------------------------

struct GateMeta {
  int c = 0;  // 1 for AND, 0 for NOT (and for input placeholders)
  int a = 1;  // fetched in layer 1
  int b = 1;  // fetched in layer 2; dummy fan-ins point at position 1
};

struct CompiledArtifact {
  TransformerParams params;
  int k = 0;        // id bit width, ceil(log2(n + T))
  int n_inputs = 0;
  int n_steps = 0;  // T, one CoT step per non-input gate
  std::vector<GateMeta> gates;  // indexed by gate id - 1, inputs included

  std::size_t d() const { return params.d; }
};

// Embedding coordinate layout (0-based).
struct CompiledLayout {
  int k;
  std::size_t token() const { return 0; }
  std::size_t fetch_a() const { return 1; }
  std::size_t fetch_b() const { return 2; }
  std::size_t out() const { return 3; }
  std::size_t ctype() const { return 4; }
  std::size_t id_self(int bit) const { return 5 + static_cast<std::size_t>(bit); }
  std::size_t id_a(int bit) const { return 5 + static_cast<std::size_t>(k + bit); }
  std::size_t id_b(int bit) const { return 5 + static_cast<std::size_t>(2 * k + bit); }
  std::size_t one() const { return 5 + static_cast<std::size_t>(3 * k); }
  std::size_t width() const { return static_cast<std::size_t>(3 * k + 6); }
};

inline CompiledArtifact compile(const Circuit& c, int precision_s = 2) {
  if (precision_s < 2) throw PrecisionError("compile requires precision s >= 2");
  PrecisionConfig cfg{0, precision_s};
  cfg.validate();
  auto violations = validate(c);
  if (!violations.empty()) throw std::invalid_argument("invalid circuit: " + violations.front());
  if (c.has_or()) throw UnsupportedGateError("compile accepts AND/NOT circuits only (lower OR first)");
  if (c.n_noninput() < 1) throw std::invalid_argument("circuit has no gates to simulate");
  if (c.output != c.total_gates()) throw std::invalid_argument("output gate must be the last gate");

  const int n = c.n_inputs;
  const int t_steps = c.n_noninput();
  const int total = n + t_steps;
  if (total > (1 << 20)) throw CapacityError("circuit too large for position table");
  const int k = std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(total - 1))));
  CompiledLayout ly{k};

  CompiledArtifact art;
  art.k = k;
  art.n_inputs = n;
  art.n_steps = t_steps;

  // Gate metadata: inputs get the (c=0, a=1, b=1) placeholder, NOT gets its
  // unused b remapped to 1; id 0 matches no key and would zero the softmax
  // denominator.
  art.gates.assign(static_cast<std::size_t>(total), GateMeta{});
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::Input) continue;
    GateMeta& m = art.gates[static_cast<std::size_t>(g.id - 1)];
    m.a = g.a;
    if (g.kind == GateKind::And) {
      m.c = 1;
      m.b = g.b;
    } else {
      m.c = 0;
      m.b = 1;
    }
  }

  TransformerParams& p = art.params;
  p.cfg = cfg;
  p.vocab = {"0", "1"};
  p.d = ly.width();
  p.n_max = static_cast<std::size_t>(total);

  const FpNumber zero = FpNumber::zero(cfg);
  const FpNumber one = FpNumber::from_int(1, cfg);
  const FpNumber big = FpNumber::max_positive(cfg);
  const FpNumber nbig = sub_rounded(zero, big);

  p.token_embedding = FpMat(2, p.d, zero);
  p.token_embedding.at(1, ly.token()) = one;

  p.position_encoding = FpMat(p.n_max, p.d, zero);
  for (int pos = 1; pos <= total - 1; ++pos) {
    const GateMeta& next = art.gates[static_cast<std::size_t>(pos)];  // gate pos+1
    FpMat& pe = p.position_encoding;
    const auto row = static_cast<std::size_t>(pos - 1);
    pe.at(row, ly.ctype()) = next.c ? one : zero;
    auto self_bits = sbin(pos, k);
    auto a_bits = sbin(next.a, k);
    auto b_bits = sbin(next.b, k);
    for (int bit = 0; bit < k; ++bit) {
      pe.at(row, ly.id_self(bit)) = FpNumber::from_int(self_bits[static_cast<std::size_t>(bit)], cfg);
      pe.at(row, ly.id_a(bit)) = FpNumber::from_int(a_bits[static_cast<std::size_t>(bit)], cfg);
      pe.at(row, ly.id_b(bit)) = FpNumber::from_int(b_bits[static_cast<std::size_t>(bit)], cfg);
    }
    pe.at(row, ly.one()) = one;
  }
  // The final position (n+T) is only ever appended, never attended from; its
  // row stays zero.

  for (int layer = 0; layer < 2; ++layer) {
    LayerParams l = detail::zeroed_layer(p.d, cfg);
    // query: interleave(sbin(a or b), 1_k) in coords 0..2k-1
    for (int bit = 0; bit < k; ++bit) {
      std::size_t src = layer == 0 ? ly.id_a(bit) : ly.id_b(bit);
      l.w_q.at(static_cast<std::size_t>(2 * bit), src) = one;
      l.w_q.at(static_cast<std::size_t>(2 * bit + 1), ly.one()) = one;
      l.w_k.at(static_cast<std::size_t>(2 * bit), ly.id_self(bit)) = big;
      l.w_k.at(static_cast<std::size_t>(2 * bit + 1), ly.one()) = nbig;
    }
    l.w_v.at(layer == 0 ? ly.fetch_a() : ly.fetch_b(), ly.token()) = one;
    for (std::size_t i = 0; i < p.d; ++i) l.w_o.at(i, i) = one;
    if (layer == 1) detail::wire_gate_ff(l, ly.fetch_a(), ly.fetch_b(), ly.ctype(), ly.out(), cfg);
    p.layers.push_back(std::move(l));
  }

  p.output = FpMat(2, p.d, zero);
  p.output.at(1, ly.out()) = one;
  p.check_shapes();
  return art;
}

// ---------------------------------------------------------------------------
// Compiled-model verification against the reference evaluator
// ---------------------------------------------------------------------------

struct VerifyMismatch {
  std::vector<std::uint8_t> input;
  int first_divergent_gate = 0;  // gate id
  int expected = 0;
  int got = 0;  // -1 when the trace aborted before reaching the gate
};

struct VerifyReport {
  std::size_t inputs_checked = 0;
  std::size_t agreements = 0;
  std::vector<VerifyMismatch> mismatches;

  bool all_agree() const { return mismatches.empty() && inputs_checked > 0; }
};

struct VerifyMode {
  bool exhaustive = true;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static VerifyMode Exhaustive() { return {true, 0, 0}; }
  static VerifyMode Sampled(std::size_t n, std::uint64_t seed) { return {false, n, seed}; }
};

namespace detail {

// Full-trace comparison for one input; returns agreement or the first
// divergent gate.
inline std::optional<VerifyMismatch> check_one_input(const CompiledArtifact& art, const Circuit& c,
                                                     const std::vector<std::uint8_t>& x) {
  GateValueRow row = evaluate(c, x);
  std::vector<int> prompt;
  prompt.reserve(x.size());
  for (std::uint8_t bit : x) prompt.push_back(bit);
  CotTrace trace = decode_cot(art.params, prompt, static_cast<std::size_t>(art.n_steps));
  for (int i = 0; i < art.n_steps; ++i) {
    int expected = row.values[static_cast<std::size_t>(art.n_inputs + i)];
    int got = i < static_cast<int>(trace.tokens.size()) ? trace.tokens[static_cast<std::size_t>(i)] : -1;
    if (got != expected) return VerifyMismatch{x, art.n_inputs + i + 1, expected, got};
  }
  return std::nullopt;
}

}  // namespace detail

inline VerifyReport verify_compiled(const CompiledArtifact& art, const Circuit& c, VerifyMode mode,
                                    unsigned threads = 1) {
  const int n = art.n_inputs;
  std::vector<std::vector<std::uint8_t>> inputs;
  if (mode.exhaustive) {
    if (n > 20) throw std::invalid_argument("exhaustive verification limited to n <= 20 inputs");
    inputs.reserve(std::size_t{1} << n);
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (v >> i) & 1u;
      inputs.push_back(std::move(x));
    }
  } else {
    std::mt19937_64 rng(mode.seed);
    inputs.reserve(mode.samples);
    for (std::size_t i = 0; i < mode.samples; ++i) {
      std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = rng() & 1u;
      inputs.push_back(std::move(x));
    }
  }

  std::vector<std::optional<VerifyMismatch>> results(inputs.size());
  if (threads <= 1 || inputs.size() < 2) {
    for (std::size_t i = 0; i < inputs.size(); ++i)
      results[i] = detail::check_one_input(art, c, inputs[i]);
  } else {
    // Independent inputs, deterministic merge by index.
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= inputs.size()) return;
        results[i] = detail::check_one_input(art, c, inputs[i]);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  VerifyReport report;
  report.inputs_checked = inputs.size();
  for (auto& r : results) {
    if (r)
      report.mismatches.push_back(std::move(*r));
    else
      ++report.agreements;
  }
  return report;
}

// Sidecar metadata for trace auditing.
inline nlohmann::json artifact_metadata_to_json(const CompiledArtifact& art) {
  nlohmann::json gates = nlohmann::json::array();
  for (std::size_t i = 0; i < art.gates.size(); ++i) {
    const GateMeta& m = art.gates[i];
    gates.push_back({{"id", i + 1}, {"c", m.c}, {"a", m.a}, {"b", m.b}});
  }
  return nlohmann::json{{"format", "cotc-circuit-meta-v1"},
                        {"k", art.k},
                        {"n", art.n_inputs},
                        {"T", art.n_steps},
                        {"d", art.params.d},
                        {"gates", std::move(gates)}};
}

}  // namespace cotc

// Finite-precision decoder-only transformer: token + position embeddings, L
// identical layers of causal self-attention and a two-layer relu feed-forward,
// residual connections, and a linear output head.  Every arithmetic step is an
// F_{e,s} rounded operation in the fixed order of the defining algorithm, so
// the forward pass is a deterministic, platform-independent function of the
// parameters and tokens.
//
// Attention at position i depends only on positions 1..i, so evaluation is
// organized position by position around a key/value cache.  Greedy decoding
// extends the cache one token at a time; recomputing from scratch runs the
// identical operation sequence and therefore yields bit-identical results.

#pragma once

#include <cotc/fpnum.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cotc {

class UnknownTokenError : public std::runtime_error {
 public:
  explicit UnknownTokenError(const std::string& what) : std::runtime_error(what) {}
};

class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

struct LayerParams {
  FpMat w_q, w_k, w_v, w_o;  // d x d
  FpMat w_1, w_2;            // d x d
  FpVec b_1, b_2;            // d

  bool operator==(const LayerParams&) const = default;
};

struct TransformerParams {
  PrecisionConfig cfg;
  std::vector<std::string> vocab;
  std::size_t d = 0;
  std::size_t n_max = 0;
  FpMat token_embedding;     // |V| x d
  FpMat position_encoding;   // n_max x d, row p-1 holds position p
  std::vector<LayerParams> layers;
  FpMat output;              // |V| x d

  bool operator==(const TransformerParams&) const = default;

  std::size_t depth() const { return layers.size(); }

  int token_id(const std::string& tok) const {
    for (std::size_t i = 0; i < vocab.size(); ++i)
      if (vocab[i] == tok) return static_cast<int>(i);
    throw UnknownTokenError("token '" + tok + "' not in vocabulary");
  }

  void check_shapes() const {
    cfg.validate();
    auto expect = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("TransformerParams: ") + what);
    };
    expect(!vocab.empty() && d > 0 && n_max > 0, "empty dimensions");
    expect(token_embedding.rows == vocab.size() && token_embedding.cols == d, "token embedding shape");
    expect(position_encoding.rows == n_max && position_encoding.cols == d, "position encoding shape");
    expect(output.rows == vocab.size() && output.cols == d, "output shape");
    for (const LayerParams& l : layers) {
      for (const FpMat* m : {&l.w_q, &l.w_k, &l.w_v, &l.w_o, &l.w_1, &l.w_2})
        expect(m->rows == d && m->cols == d, "layer matrix shape");
      expect(l.b_1.size() == d && l.b_2.size() == d, "layer bias shape");
    }
  }
};

// FF(h) = round(W2 x relu(round(W1 x h + b1)) + b2); relu is exact on the grid.
inline FpVec ff_layer(const LayerParams& layer, const FpVec& h) {
  FpVec pre = matvec_rounded(layer.w_1, h);
  for (std::size_t i = 0; i < pre.size(); ++i) pre[i] = relu(add_rounded(pre[i], layer.b_1[i]));
  FpVec out = matvec_rounded(layer.w_2, pre);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = add_rounded(out[i], layer.b_2[i]);
  return out;
}

namespace detail {

// Row-major nonzero view of a weight matrix.  Rounded folds may skip zero
// weights without changing any bit: round(0 * x) = 0 and round(acc + 0) = acc
// hold exactly in F_{e,s}, so the fold over the nonzero products equals the
// dense left fold.
struct SparseMat {
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> row_begin;                      // rows + 1 offsets
  std::vector<std::pair<std::size_t, FpNumber>> entries;   // (column, weight)

  static SparseMat from(const FpMat& m) {
    SparseMat s;
    s.rows = m.rows;
    s.cols = m.cols;
    s.row_begin.reserve(m.rows + 1);
    s.row_begin.push_back(0);
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c)
        if (!m.at(r, c).is_zero()) s.entries.emplace_back(c, m.at(r, c));
      s.row_begin.push_back(s.entries.size());
    }
    return s;
  }
};

inline FpVec sparse_matvec(const SparseMat& m, std::span<const FpNumber> h, PrecisionConfig cfg) {
  FpVec out;
  out.reserve(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    FpNumber acc = FpNumber::zero(cfg);
    bool started = false;
    for (std::size_t i = m.row_begin[r]; i < m.row_begin[r + 1]; ++i) {
      FpNumber p = mul_rounded(m.entries[i].second, h[m.entries[i].first]);
      acc = started ? add_rounded(acc, p) : p;
      started = true;
    }
    out.push_back(acc);
  }
  return out;
}

// Attention output for one position given its query and the cached causal
// prefix of keys/values (indices 0..pos): rounded-softmax scores, rounded
// value aggregation, then W_O.  Scores past pos are zero and rounded adds of
// zero are exact, so folding only the prefix is bit-identical to the padded
// form in the definition.
inline FpVec attend_position(const LayerParams& layer, const FpVec& q,
                             const std::vector<FpVec>& keys, const std::vector<FpVec>& values,
                             std::size_t pos) {
  FpVec scores;
  scores.reserve(pos + 1);
  for (std::size_t j = 0; j <= pos; ++j) scores.push_back(inner_rounded(q, keys[j]));
  FpVec sm = softmax_rounded(scores);

  const std::size_t d = q.size();
  FpVec agg;
  agg.reserve(d);
  for (std::size_t c = 0; c < d; ++c) {
    FpNumber acc = mul_rounded(values[0][c], sm[0]);
    for (std::size_t j = 1; j <= pos; ++j) acc = add_rounded(acc, mul_rounded(values[j][c], sm[j]));
    agg.push_back(acc);
  }
  return matvec_rounded(layer.w_o, agg);
}

}  // namespace detail

// Whole-sequence causal self-attention (no residual), per the defining algorithm.
inline std::vector<FpVec> attention_layer(const LayerParams& layer, const std::vector<FpVec>& h) {
  std::vector<FpVec> keys, values, out;
  keys.reserve(h.size());
  values.reserve(h.size());
  out.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    FpVec q = matvec_rounded(layer.w_q, h[i]);
    keys.push_back(matvec_rounded(layer.w_k, h[i]));
    values.push_back(matvec_rounded(layer.w_v, h[i]));
    out.push_back(detail::attend_position(layer, q, keys, values, i));
  }
  return out;
}

struct CotTrace {
  std::vector<int> tokens;             // generated token ids, in order
  std::vector<FpVec> step_logits;      // final-position logits per step
  bool division_by_zero = false;       // aborted by the rounded-division rule
  std::string error;                   // empty unless aborted
  std::size_t steps_requested = 0;

  bool complete() const { return tokens.size() == steps_requested && error.empty(); }
};

// Argmax over logits; ties resolve to the lowest vocabulary index.
inline int next_token(const FpVec& logits) {
  if (logits.empty()) throw std::invalid_argument("next_token: empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[best] < logits[i]) best = i;
  return static_cast<int>(best);
}

// Incremental position-by-position evaluator.  push() runs one position
// through every layer against the cached keys/values and stores that
// position's logits.
//
// Weight matrices are applied through their nonzero entries only (SparseMat),
// which is bit-identical to the dense folds of attention_layer / ff_layer;
// the test suite asserts the equivalence on dense random parameters.
class Evaluator {
 public:
  explicit Evaluator(const TransformerParams& params) : p_(params) {
    p_.check_shapes();
    keys_.resize(p_.depth());
    values_.resize(p_.depth());
    for (const LayerParams& l : p_.layers)
      sw_.push_back({detail::SparseMat::from(l.w_q), detail::SparseMat::from(l.w_k),
                     detail::SparseMat::from(l.w_v), detail::SparseMat::from(l.w_o),
                     detail::SparseMat::from(l.w_1), detail::SparseMat::from(l.w_2)});
    out_ = detail::SparseMat::from(p_.output);
  }

  std::size_t length() const { return len_; }

  void push(int token) {
    if (token < 0 || static_cast<std::size_t>(token) >= p_.vocab.size())
      throw UnknownTokenError("token id " + std::to_string(token) + " out of range");
    if (len_ >= p_.n_max) throw CapacityError("sequence longer than n_max");
    const std::size_t pos = len_;  // 0-based; position pos+1 in 1-based terms
    const PrecisionConfig cfg = p_.cfg;

    // h0 = round(TE(x) + PE(pos))
    FpVec h;
    h.reserve(p_.d);
    for (std::size_t c = 0; c < p_.d; ++c)
      h.push_back(add_rounded(p_.token_embedding.at(static_cast<std::size_t>(token), c),
                              p_.position_encoding.at(pos, c)));
    if (record_) levels_[0].push_back(h);

    for (std::size_t l = 0; l < p_.depth(); ++l) {
      const LayerParams& layer = p_.layers[l];
      const SparseLayer& sw = sw_[l];
      FpVec q = detail::sparse_matvec(sw.w_q, h, cfg);
      keys_[l].push_back(detail::sparse_matvec(sw.w_k, h, cfg));
      values_[l].push_back(detail::sparse_matvec(sw.w_v, h, cfg));

      // scores over the causal prefix, folding only the query's nonzeros
      std::vector<std::size_t> qnz;
      for (std::size_t c = 0; c < p_.d; ++c)
        if (!q[c].is_zero()) qnz.push_back(c);
      FpVec scores;
      scores.reserve(pos + 1);
      for (std::size_t j = 0; j <= pos; ++j) {
        const FpVec& key = keys_[l][j];
        FpNumber acc = FpNumber::zero(cfg);
        bool started = false;
        for (std::size_t c : qnz) {
          FpNumber prod = mul_rounded(q[c], key[c]);
          acc = started ? add_rounded(acc, prod) : prod;
          started = true;
        }
        scores.push_back(acc);
      }
      FpVec sm = softmax_rounded(scores);

      // rounded value aggregation over the nonzero attention weights
      std::vector<std::size_t> snz;
      for (std::size_t j = 0; j <= pos; ++j)
        if (!sm[j].is_zero()) snz.push_back(j);
      FpVec agg;
      agg.reserve(p_.d);
      for (std::size_t c = 0; c < p_.d; ++c) {
        FpNumber acc = FpNumber::zero(cfg);
        bool started = false;
        for (std::size_t j : snz) {
          FpNumber prod = mul_rounded(values_[l][j][c], sm[j]);
          acc = started ? add_rounded(acc, prod) : prod;
          started = true;
        }
        agg.push_back(acc);
      }
      FpVec attn = detail::sparse_matvec(sw.w_o, agg, cfg);
      for (std::size_t c = 0; c < p_.d; ++c) h[c] = add_rounded(h[c], attn[c]);  // residual
      if (record_) levels_[2 * l + 1].push_back(h);

      FpVec pre = detail::sparse_matvec(sw.w_1, h, cfg);
      for (std::size_t c = 0; c < p_.d; ++c) pre[c] = relu(add_rounded(pre[c], layer.b_1[c]));
      FpVec ff = detail::sparse_matvec(sw.w_2, pre, cfg);
      for (std::size_t c = 0; c < p_.d; ++c) ff[c] = add_rounded(ff[c], layer.b_2[c]);
      for (std::size_t c = 0; c < p_.d; ++c) h[c] = add_rounded(h[c], ff[c]);  // residual
      if (record_) levels_[2 * l + 2].push_back(h);
    }

    logits_.push_back(detail::sparse_matvec(out_, h, cfg));
    ++len_;
  }

  const FpVec& logits_at(std::size_t pos) const { return logits_.at(pos); }
  const FpVec& last_logits() const { return logits_.back(); }

  // Optional embedding capture for layout inspection: level 0 is h^0, then
  // levels 2l+1 / 2l+2 are the post-attention and post-ff states of layer l.
  void enable_recording() {
    record_ = true;
    levels_.assign(2 * p_.depth() + 1, {});
  }
  const std::vector<std::vector<FpVec>>& recorded_levels() const { return levels_; }

 private:
  struct SparseLayer {
    detail::SparseMat w_q, w_k, w_v, w_o, w_1, w_2;
  };

  const TransformerParams& p_;
  std::vector<SparseLayer> sw_;
  detail::SparseMat out_;
  std::vector<std::vector<FpVec>> keys_, values_;  // [layer][pos]
  std::vector<FpVec> logits_;                      // [pos]
  std::size_t len_ = 0;
  bool record_ = false;
  std::vector<std::vector<FpVec>> levels_;
};

// Logits at every position (pre-argmax scores OUTPUT x h^L_i).
inline std::vector<FpVec> forward(const TransformerParams& params, const std::vector<int>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
  Evaluator ev(params);
  for (int t : tokens) ev.push(t);
  std::vector<FpVec> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back(ev.logits_at(i));
  return out;
}

// Greedy chain-of-thought decoding: append argmax(TF(x)) T times.  A
// DivisionByZeroError counts as the model producing a wrong result; the trace
// stops at the failing step.
inline CotTrace decode_cot(const TransformerParams& params, const std::vector<int>& tokens,
                           std::size_t steps) {
  CotTrace trace;
  trace.steps_requested = steps;
  if (tokens.empty()) throw std::invalid_argument("decode_cot: empty prompt");
  if (tokens.size() + steps > params.n_max)
    throw CapacityError("prompt plus CoT steps exceeds n_max");
  Evaluator ev(params);
  try {
    for (int t : tokens) ev.push(t);
    for (std::size_t step = 0; step < steps; ++step) {
      int tok = next_token(ev.last_logits());
      trace.step_logits.push_back(ev.last_logits());
      trace.tokens.push_back(tok);
      if (step + 1 < steps) ev.push(tok);
    }
  } catch (const DivisionByZeroError& e) {
    trace.division_by_zero = true;
    trace.error = e.what();
  }
  return trace;
}

}  // namespace cotc

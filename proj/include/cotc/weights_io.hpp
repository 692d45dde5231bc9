// Weights file: one self-describing JSON document with the precision config,
// vocabulary, shapes, and every table.  Entries are emitted as integer pairs
// [signed significand, exponent]; exact decimal strings are accepted on load.
// Keys serialize in sorted order, so saves are canonical and diffable, and
// load(save(params)) is bit-exact.

#pragma once

#include <cotc/fpnum.hpp>
#include <cotc/transformer.hpp>

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

namespace cotc {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace weights_detail {

using nlohmann::json;

inline json entry_to_json(const FpNumber& v) {
  return json::array({v.signed_significand(), v.exponent()});
}

inline FpNumber entry_from_json(const json& j, PrecisionConfig cfg) {
  if (j.is_array()) {
    if (j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
      throw IoError("weight entry must be [significand, exponent]");
    return FpNumber::from_scaled(j[0].get<std::int64_t>(), j[1].get<int>(), cfg);
  }
  if (j.is_string()) return parse_decimal_exact(j.get<std::string>(), cfg);
  throw IoError("weight entry must be an integer pair or a decimal string");
}

inline json mat_to_json(const FpMat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(entry_to_json(m.at(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline FpMat mat_from_json(const json& j, std::size_t rows, std::size_t cols, PrecisionConfig cfg,
                           const char* name) {
  if (!j.is_array() || j.size() != rows) throw IoError(std::string(name) + ": wrong row count");
  FpMat m;
  m.rows = rows;
  m.cols = cols;
  m.data.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols) throw IoError(std::string(name) + ": wrong column count");
    for (std::size_t c = 0; c < cols; ++c) m.data.push_back(entry_from_json(row[c], cfg));
  }
  return m;
}

inline json vec_to_json(const FpVec& v) {
  json out = json::array();
  for (const FpNumber& x : v) out.push_back(entry_to_json(x));
  return out;
}

inline FpVec vec_from_json(const json& j, std::size_t n, PrecisionConfig cfg, const char* name) {
  if (!j.is_array() || j.size() != n) throw IoError(std::string(name) + ": wrong length");
  FpVec v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) v.push_back(entry_from_json(j[i], cfg));
  return v;
}

}  // namespace weights_detail

inline nlohmann::json weights_to_json(const TransformerParams& p) {
  using namespace weights_detail;
  p.check_shapes();
  json doc;
  doc["format"] = "cotc-weights-v1";
  doc["cfg"] = {{"e", p.cfg.e}, {"s", p.cfg.s}};
  doc["vocab"] = p.vocab;
  doc["d"] = p.d;
  doc["n_max"] = p.n_max;
  doc["token_embedding"] = mat_to_json(p.token_embedding);
  doc["position_encoding"] = mat_to_json(p.position_encoding);
  json layers = json::array();
  for (const LayerParams& l : p.layers) {
    json lj;
    lj["w_q"] = mat_to_json(l.w_q);
    lj["w_k"] = mat_to_json(l.w_k);
    lj["w_v"] = mat_to_json(l.w_v);
    lj["w_o"] = mat_to_json(l.w_o);
    lj["w_1"] = mat_to_json(l.w_1);
    lj["b_1"] = vec_to_json(l.b_1);
    lj["w_2"] = mat_to_json(l.w_2);
    lj["b_2"] = vec_to_json(l.b_2);
    layers.push_back(std::move(lj));
  }
  doc["layers"] = std::move(layers);
  doc["output"] = mat_to_json(p.output);
  return doc;
}

inline TransformerParams weights_from_json(const nlohmann::json& doc) {
  using namespace weights_detail;
  try {
    if (doc.at("format").get<std::string>() != "cotc-weights-v1")
      throw IoError("unrecognized weights format tag");
    TransformerParams p;
    p.cfg = PrecisionConfig{doc.at("cfg").at("e").get<int>(), doc.at("cfg").at("s").get<int>()};
    p.cfg.validate();
    p.vocab = doc.at("vocab").get<std::vector<std::string>>();
    p.d = doc.at("d").get<std::size_t>();
    p.n_max = doc.at("n_max").get<std::size_t>();
    p.token_embedding = mat_from_json(doc.at("token_embedding"), p.vocab.size(), p.d, p.cfg, "token_embedding");
    p.position_encoding = mat_from_json(doc.at("position_encoding"), p.n_max, p.d, p.cfg, "position_encoding");
    for (const auto& lj : doc.at("layers")) {
      LayerParams l;
      l.w_q = mat_from_json(lj.at("w_q"), p.d, p.d, p.cfg, "w_q");
      l.w_k = mat_from_json(lj.at("w_k"), p.d, p.d, p.cfg, "w_k");
      l.w_v = mat_from_json(lj.at("w_v"), p.d, p.d, p.cfg, "w_v");
      l.w_o = mat_from_json(lj.at("w_o"), p.d, p.d, p.cfg, "w_o");
      l.w_1 = mat_from_json(lj.at("w_1"), p.d, p.d, p.cfg, "w_1");
      l.b_1 = vec_from_json(lj.at("b_1"), p.d, p.cfg, "b_1");
      l.w_2 = mat_from_json(lj.at("w_2"), p.d, p.d, p.cfg, "w_2");
      l.b_2 = vec_from_json(lj.at("b_2"), p.d, p.cfg, "b_2");
      p.layers.push_back(std::move(l));
    }
    p.output = mat_from_json(doc.at("output"), p.vocab.size(), p.d, p.cfg, "output");
    p.check_shapes();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed weights document: ") + e.what());
  }
}

inline std::string weights_to_string(const TransformerParams& p) {
  return weights_to_json(p).dump(1) + "\n";
}

inline TransformerParams weights_from_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("weights file is not valid JSON: ") + e.what());
  }
  return weights_from_json(doc);
}

inline void save_weights(const TransformerParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << weights_to_string(p);
  if (!out) throw IoError("write failed: '" + path + "'");
}

inline TransformerParams load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return weights_from_string(text);
}

}  // namespace cotc

// Boolean circuit IR in fan-in-2 normal form, with a line-oriented text
// format, validator, De Morgan lowering (OR elimination) and a reference
// evaluator.  Gate ids are 1..n_inputs for the inputs, then consecutive and
// topologically ordered: every fan-in references a strictly smaller id.
//
// Text format ('#' starts a comment):
//   inputs <n>
//   <id> AND <a> <b>
//   <id> OR <a> <b>
//   <id> NOT <a>
//   output <id>

#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cotc {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class TopologyError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ArityError : public ParseError {
 public:
  using ParseError::ParseError;
};

enum class GateKind { Input, And, Or, Not };

inline const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::Input: return "INPUT";
    case GateKind::And: return "AND";
    case GateKind::Or: return "OR";
    case GateKind::Not: return "NOT";
  }
  return "?";
}

struct Gate {
  int id = 0;
  GateKind kind = GateKind::Input;
  int a = 0;  // first fan-in (unused for inputs)
  int b = 0;  // second fan-in (0 for NOT and inputs)
};

struct Circuit {
  int n_inputs = 0;
  std::vector<Gate> gates;  // all nodes, inputs first; gates[i].id == i+1
  int output = 0;

  int total_gates() const { return static_cast<int>(gates.size()); }
  int n_noninput() const { return total_gates() - n_inputs; }
  bool has_or() const {
    for (const Gate& g : gates)
      if (g.kind == GateKind::Or) return true;
    return false;
  }
};

// Per-input evaluation result: value of every node in topological order.
struct GateValueRow {
  std::vector<std::uint8_t> input_bits;
  std::vector<std::uint8_t> values;  // indexed by id-1, inputs included
  std::uint8_t output_bit = 0;
};

// Checks every Circuit invariant and reports all violations, not just the first.
inline std::vector<std::string> validate(const Circuit& c) {
  std::vector<std::string> out;
  if (c.n_inputs < 0) out.push_back("negative input count");
  if (c.total_gates() < c.n_inputs) out.push_back("fewer nodes than declared inputs");
  for (int i = 0; i < c.total_gates(); ++i) {
    const Gate& g = c.gates[i];
    std::string where = "gate " + std::to_string(g.id);
    if (g.id != i + 1) out.push_back(where + ": ids must be consecutive from 1");
    bool is_input_slot = i < c.n_inputs;
    if (is_input_slot != (g.kind == GateKind::Input))
      out.push_back(where + ": inputs must occupy ids 1.." + std::to_string(c.n_inputs));
    if (g.kind == GateKind::And || g.kind == GateKind::Or) {
      if (g.a < 1 || g.a >= g.id || g.b < 1 || g.b >= g.id)
        out.push_back(where + ": fan-in out of range");
    } else if (g.kind == GateKind::Not) {
      if (g.a < 1 || g.a >= g.id) out.push_back(where + ": fan-in out of range");
      if (g.b != 0) out.push_back(where + ": NOT takes one fan-in");
    }
  }
  if (c.output < 1 || c.output > c.total_gates()) out.push_back("output id out of range");
  return out;
}

inline Circuit parse_circuit(const std::string& text) {
  Circuit c;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool saw_inputs = false, saw_output = false;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string first;
    if (!(ls >> first)) continue;

    if (first == "inputs") {
      if (saw_inputs) throw ParseError(lineno, "duplicate 'inputs' line");
      if (!(ls >> c.n_inputs) || c.n_inputs < 0) throw ParseError(lineno, "bad input count");
      for (int i = 1; i <= c.n_inputs; ++i) c.gates.push_back({i, GateKind::Input, 0, 0});
      saw_inputs = true;
      continue;
    }
    if (first == "output") {
      if (!saw_inputs) throw ParseError(lineno, "'output' before 'inputs'");
      if (saw_output) throw ParseError(lineno, "duplicate 'output' line");
      if (!(ls >> c.output)) throw ParseError(lineno, "bad output id");
      saw_output = true;
      continue;
    }

    if (!saw_inputs) throw ParseError(lineno, "gate line before 'inputs'");
    if (saw_output) throw ParseError(lineno, "gate line after 'output'");
    for (char ch : first)
      if (ch < '0' || ch > '9') throw ParseError(lineno, "expected gate id, got '" + first + "'");
    int id;
    try {
      id = std::stoi(first);
    } catch (const std::exception&) {
      throw ParseError(lineno, "expected gate id, got '" + first + "'");
    }
    std::string kind;
    if (!(ls >> kind)) throw ParseError(lineno, "missing gate kind");
    if (id != c.total_gates() + 1)
      throw TopologyError(lineno, "gate id " + std::to_string(id) + " not consecutive (expected " +
                                      std::to_string(c.total_gates() + 1) + ")");

    Gate g{id, GateKind::Input, 0, 0};
    std::vector<int> args;
    int v;
    while (ls >> v) args.push_back(v);
    std::string trailing;
    if (ls.clear(), ls >> trailing) throw ParseError(lineno, "trailing tokens on gate line");

    if (kind == "AND" || kind == "OR") {
      g.kind = kind == "AND" ? GateKind::And : GateKind::Or;
      if (args.size() != 2) throw ArityError(lineno, kind + " takes exactly two fan-ins");
      g.a = args[0];
      g.b = args[1];
    } else if (kind == "NOT") {
      g.kind = GateKind::Not;
      if (args.size() != 1) throw ArityError(lineno, "NOT takes exactly one fan-in");
      g.a = args[0];
    } else {
      throw ParseError(lineno, "unknown gate kind '" + kind + "'");
    }
    if (g.a >= id || (g.kind != GateKind::Not && g.b >= id))
      throw TopologyError(lineno, "forward reference in gate " + std::to_string(id));
    if (g.a < 1 || (g.kind != GateKind::Not && g.b < 1))
      throw TopologyError(lineno, "fan-in out of range in gate " + std::to_string(id));
    c.gates.push_back(g);
  }
  if (!saw_inputs) throw ParseError(lineno, "missing 'inputs' line");
  if (!saw_output) throw ParseError(lineno, "missing 'output' line");
  auto violations = validate(c);
  if (!violations.empty()) throw ParseError(lineno, violations.front());
  return c;
}

inline std::string serialize_circuit(const Circuit& c) {
  std::ostringstream out;
  out << "inputs " << c.n_inputs << "\n";
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::Input) continue;
    out << g.id << ' ' << gate_kind_name(g.kind) << ' ' << g.a;
    if (g.kind != GateKind::Not) out << ' ' << g.b;
    out << "\n";
  }
  out << "output " << c.output << "\n";
  return out.str();
}

class InputLengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline GateValueRow evaluate(const Circuit& c, const std::vector<std::uint8_t>& x) {
  if (static_cast<int>(x.size()) != c.n_inputs)
    throw InputLengthMismatch("expected " + std::to_string(c.n_inputs) + " input bits, got " +
                              std::to_string(x.size()));
  GateValueRow row;
  row.input_bits = x;
  row.values.resize(c.gates.size());
  for (const Gate& g : c.gates) {
    std::uint8_t v = 0;
    switch (g.kind) {
      case GateKind::Input: v = x[g.id - 1]; break;
      case GateKind::And: v = row.values[g.a - 1] & row.values[g.b - 1]; break;
      case GateKind::Or: v = row.values[g.a - 1] | row.values[g.b - 1]; break;
      case GateKind::Not: v = row.values[g.a - 1] ^ 1; break;
    }
    row.values[g.id - 1] = v;
  }
  row.output_bit = row.values[c.output - 1];
  return row;
}

// Rewrites every OR by De Morgan: OR(a,b) = NOT(AND(NOT a, NOT b)), adding
// three gates per OR.  Ids are remapped, the function is preserved.
inline Circuit lower_to_and_not(const Circuit& c) {
  Circuit out;
  out.n_inputs = c.n_inputs;
  std::vector<int> remap(c.gates.size() + 1, 0);
  for (const Gate& g : c.gates) {
    if (g.kind == GateKind::Input) {
      out.gates.push_back({g.id, GateKind::Input, 0, 0});
      remap[g.id] = g.id;
      continue;
    }
    int a = remap[g.a];
    switch (g.kind) {
      case GateKind::Not:
        out.gates.push_back({out.total_gates() + 1, GateKind::Not, a, 0});
        break;
      case GateKind::And:
        out.gates.push_back({out.total_gates() + 1, GateKind::And, a, remap[g.b]});
        break;
      case GateKind::Or: {
        int b = remap[g.b];
        int na = out.total_gates() + 1;
        out.gates.push_back({na, GateKind::Not, a, 0});
        int nb = out.total_gates() + 1;
        out.gates.push_back({nb, GateKind::Not, b, 0});
        int nand_ = out.total_gates() + 1;
        out.gates.push_back({nand_, GateKind::And, na, nb});
        out.gates.push_back({out.total_gates() + 1, GateKind::Not, nand_, 0});
        break;
      }
      case GateKind::Input: break;
    }
    remap[g.id] = out.total_gates();
  }
  out.output = remap[c.output];
  return out;
}

}  // namespace cotc

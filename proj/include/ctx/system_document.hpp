#pragma once

// Plain-text system documents.
//
//   # comments run to end of line
//   [inputs]
//   a1: 1 2
//   a2: 1 2
//   [outputs]
//   A1: -1 +1
//   A2: -1 +1
//   [influences]
//   A1 <- a1
//   A2 <- a2
//   [treatment a1=1 a2=1]
//   -1 -1 : 1/4
//   +1 +1 : 1/4
//   ...
//   [connection a1=1]
//   axes: A1@(1,1) A1@(1,2)
//   +1 +1 : 1/2
//   -1 -1 : 1/2
//
// Atom lines list one label per output (treatments) or per listed axis
// (connections) followed by an exact probability. Omitted atoms have mass 0.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/coupling_engine.hpp"
#include "ctx/error.hpp"
#include "ctx/format.hpp"
#include "ctx/rational.hpp"
#include "ctx/selectivity.hpp"

namespace ctx {

struct SystemDocument {
  SystemSpec system;
  ConnectionSet connections;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> tokens(std::string_view s) {
  std::istringstream is{std::string(s)};
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(std::move(t));
  return out;
}

inline bool valid_name(std::string_view s) {
  return valid_label(s) && s.find(kDummyName) == std::string_view::npos && s.find_first_of("@|(),") == std::string_view::npos;
}

struct Block {
  std::string kind;
  std::vector<std::string> args;
  std::size_t line = 0;
  std::vector<std::pair<std::size_t, std::string>> body;
};

class DocumentParser {
 public:
  DocumentParser(std::string path) : path_(std::move(path)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& msg, ErrorKind kind = ErrorKind::ParseError) const {
    throw Error(kind, path_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::vector<Block> split(const std::string& text) const {
    std::vector<Block> blocks;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (content.empty()) continue;
      if (content.front() == '[') {
        if (content.back() != ']') fail(line, "unterminated section header");
        auto parts = tokens(content.substr(1, content.size() - 2));
        if (parts.empty()) fail(line, "empty section header");
        Block b{parts.front(), {parts.begin() + 1, parts.end()}, line, {}};
        blocks.push_back(std::move(b));
        continue;
      }
      if (blocks.empty()) fail(line, "content before the first section");
      blocks.back().body.emplace_back(line, content);
    }
    return blocks;
  }

  static std::pair<std::string, std::string> split_colon(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) return {s, {}};
    return {trim(s.substr(0, colon)), trim(s.substr(colon + 1))};
  }

  Rational rational(std::size_t line, const std::string& text) const {
    try {
      return Rational::parse(text);
    } catch (const Error& e) {
      fail(line, e.detail());
    }
  }

  void parse_value_sets(const Block& b, std::vector<ValueSet>& into) const {
    if (!b.args.empty()) fail(b.line, "[" + b.kind + "] takes no arguments");
    for (const auto& [line, content] : b.body) {
      const auto [name, rest] = split_colon(content);
      if (content.find(':') == std::string::npos) fail(line, "expected 'name: value value ...'");
      if (!valid_name(name)) fail(line, "invalid name '" + name + "'");
      try {
        into.emplace_back(name, tokens(rest));
      } catch (const Error& e) {
        fail(line, e.detail());
      }
    }
  }

  std::size_t input_index(const SystemSpec& s, std::size_t line, const std::string& name) const {
    for (std::size_t k = 0; k < s.inputs.size(); ++k) {
      if (s.inputs[k].name() == name) return k;
    }
    fail(line, "undeclared input '" + name + "'", ErrorKind::ValidationError);
  }

  std::size_t output_index(const SystemSpec& s, std::size_t line, const std::string& name) const {
    for (std::size_t l = 0; l < s.outputs.size(); ++l) {
      if (s.outputs[l].id == name) return l;
    }
    fail(line, "DanglingReference: undeclared output '" + name + "'", ErrorKind::ValidationError);
  }

  /// `name=label` assignments; returns input index -> value index.
  std::map<std::size_t, std::size_t> assignments(const SystemSpec& s, const Block& b) const {
    std::map<std::size_t, std::size_t> out;
    for (const auto& arg : b.args) {
      const auto eq = arg.find('=');
      if (eq == std::string::npos) fail(b.line, "expected input=value, got '" + arg + "'");
      const std::size_t k = input_index(s, b.line, arg.substr(0, eq));
      const auto v = s.inputs[k].index_of(arg.substr(eq + 1));
      if (!v) {
        fail(b.line, "TreatmentOutOfRange: value '" + arg.substr(eq + 1) + "' not in input '" + s.inputs[k].name() + "'",
             ErrorKind::ValidationError);
      }
      if (!out.emplace(k, *v).second) fail(b.line, "input '" + s.inputs[k].name() + "' assigned twice");
    }
    return out;
  }

  FiniteDistribution distribution(const std::vector<Axis>& axes, const Block& b, std::size_t skip) const {
    std::vector<std::pair<std::vector<std::string>, Rational>> entries;
    for (std::size_t i = skip; i < b.body.size(); ++i) {
      const auto& [line, content] = b.body[i];
      if (content.find(':') == std::string::npos) fail(line, "expected 'label ... : probability'");
      const auto [lhs, rhs] = split_colon(content);
      auto labels = tokens(lhs);
      if (labels.size() != axes.size()) {
        fail(line, "expected " + std::to_string(axes.size()) + " labels, got " + std::to_string(labels.size()));
      }
      for (std::size_t a = 0; a < axes.size(); ++a) {
        if (!axes[a].values.index_of(labels[a])) {
          fail(line, "UnknownAtom: label '" + labels[a] + "' not in '" + axes[a].id + "'", ErrorKind::ValidationError);
        }
      }
      entries.emplace_back(std::move(labels), rational(line, rhs));
    }
    try {
      return make_distribution(axes, entries);
    } catch (const Error& e) {
      fail(b.line, e.what(), ErrorKind::ValidationError);
    }
  }

  ConnectionSpec connection(const SystemSpec& s, const Block& b) const {
    if (!is_bijective(s)) fail(b.line, "connections need a system with bijective influences", ErrorKind::ValidationError);
    const auto assigned = assignments(s, b);
    if (assigned.empty()) fail(b.line, "connection needs at least one input=value");
    ConnectionSpec c;
    for (const auto& [k, v] : assigned) {
      c.inputs.push_back(k);
      c.tau.push_back(v);
    }
    if (b.body.empty()) fail(b.line, "connection needs an 'axes:' line");
    const auto& [axes_line, axes_content] = b.body.front();
    const auto [key, ids] = split_colon(axes_content);
    if (key != "axes") fail(axes_line, "connection must start with 'axes: ...'");
    std::vector<Axis> axes;
    for (const auto& id : tokens(ids)) {
      const auto at = id.find('@');
      if (at == std::string::npos) fail(axes_line, "axis '" + id + "' is not of the form output@(treatment)");
      const std::size_t l = output_index(s, axes_line, id.substr(0, at));
      axes.push_back({id, s.outputs[l].values});
    }
    try {
      c.law = distribution(axes, b, 1);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ValidationError && std::string(e.what()).find("AxisCollision") != std::string::npos) {
        fail(axes_line, "axis listed twice", ErrorKind::ValidationError);
      }
      throw;
    }
    try {
      validate_connection(s, c);
    } catch (const Error& e) {
      fail(b.line, e.detail(), ErrorKind::InconsistentConnection);
    }
    return c;
  }

  SystemDocument parse(const std::string& text) const {
    SystemDocument doc;
    SystemSpec& s = doc.system;
    const auto blocks = split(text);
    bool have_inputs = false;
    bool have_outputs = false;
    std::map<Treatment, std::size_t> treatment_lines;
    std::vector<const Block*> connection_blocks;
    for (const auto& b : blocks) {
      if (b.kind == "inputs") {
        if (have_inputs) fail(b.line, "duplicate [inputs] section");
        parse_value_sets(b, s.inputs);
        have_inputs = true;
      } else if (b.kind == "outputs") {
        if (have_outputs) fail(b.line, "duplicate [outputs] section");
        std::vector<ValueSet> sets;
        parse_value_sets(b, sets);
        for (auto& vs : sets) s.outputs.push_back({vs.name(), vs});
        have_outputs = true;
      } else if (b.kind == "influences") {
        if (!have_inputs || !have_outputs) fail(b.line, "[influences] must follow [inputs] and [outputs]");
        for (const auto& [line, content] : b.body) {
          const auto arrow = content.find("<-");
          if (arrow == std::string::npos) fail(line, "expected 'OUTPUT <- INPUT ...'");
          const std::size_t l = output_index(s, line, trim(content.substr(0, arrow)));
          for (const auto& in : tokens(content.substr(arrow + 2))) {
            s.influences.insert({l, input_index(s, line, in)});
          }
        }
      } else if (b.kind == "treatment") {
        if (!have_inputs || !have_outputs) fail(b.line, "[treatment] must follow [inputs] and [outputs]");
        const auto assigned = assignments(s, b);
        if (assigned.size() != s.inputs.size()) fail(b.line, "treatment must assign every input", ErrorKind::ValidationError);
        Treatment t;
        for (const auto& [k, v] : assigned) t.push_back(v);
        if (treatment_lines.contains(t)) fail(b.line, "DuplicateTreatment: treatment repeated", ErrorKind::ValidationError);
        treatment_lines.emplace(t, b.line);
        s.treatments.push_back(t);
        s.per_treatment.emplace(t, distribution(s.outputs, b, 0));
      } else if (b.kind == "connection") {
        connection_blocks.push_back(&b);
      } else {
        fail(b.line, "unknown section [" + b.kind + "]");
      }
    }
    if (!have_inputs) fail(1, "missing [inputs] section");
    if (!have_outputs) fail(1, "missing [outputs] section");
    canonicalize_treatments(s);
    const auto issues = validate_system(s);
    if (!issues.empty()) {
      std::string msg;
      for (const auto& issue : issues) msg += (msg.empty() ? "" : "; ") + std::string(to_string(issue.kind)) + ": " + issue.message;
      fail(1, msg, ErrorKind::ValidationError);
    }
    doc.connections = connections(s, connection_blocks);
    return doc;
  }

  ConnectionSet connections(const SystemSpec& s, const std::vector<const Block*>& blocks) const {
    ConnectionSet cs;
    std::set<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> seen;
    for (const Block* b : blocks) {
      cs.push_back(connection(s, *b));
      if (!seen.insert({cs.back().inputs, cs.back().tau}).second) {
        fail(b->line, "two connections share the same input values", ErrorKind::InconsistentConnection);
      }
    }
    return cs;
  }

  ConnectionSet parse_connections(const std::string& text, const SystemSpec& s) const {
    std::vector<const Block*> ptrs;
    const auto blocks = split(text);
    for (const auto& b : blocks) {
      if (b.kind != "connection") fail(b.line, "connections file may only contain [connection] sections");
      ptrs.push_back(&b);
    }
    return connections(s, ptrs);
  }

 private:
  std::string path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

inline SystemDocument parse_system_text(const std::string& text, const std::string& path = "<text>") {
  return detail::DocumentParser(path).parse(text);
}

inline SystemDocument parse_system_file(const std::string& path) {
  return parse_system_text(detail::read_file(path), path);
}

inline ConnectionSet parse_connections_text(const std::string& text, const SystemSpec& s,
                                            const std::string& path = "<text>") {
  return detail::DocumentParser(path).parse_connections(text, s);
}

inline ConnectionSet parse_connections_file(const std::string& path, const SystemSpec& s) {
  return parse_connections_text(detail::read_file(path), s, path);
}

inline std::string format_connection(const SystemSpec& s, const ConnectionSpec& c) {
  std::string head = "[connection";
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    head += " " + s.inputs[c.inputs[i]].name() + "=" + s.inputs[c.inputs[i]].label(c.tau[i]);
  }
  return head + "]\n" + format_distribution(c.law);
}

/// Re-parsable document text for a system and optional connections.
inline std::string format_system(const SystemSpec& s, const ConnectionSet& cs = {}) {
  std::ostringstream os;
  os << "[inputs]\n";
  for (const auto& in : s.inputs) os << in.name() << ": " << join(in.labels(), " ") << "\n";
  os << "\n[outputs]\n";
  for (const auto& out : s.outputs) os << out.id << ": " << join(out.values.labels(), " ") << "\n";
  os << "\n[influences]\n";
  for (std::size_t l = 0; l < s.outputs.size(); ++l) {
    std::vector<std::string> names;
    for (const std::size_t k : s.influencers(l)) names.push_back(s.inputs[k].name());
    os << s.outputs[l].id << " <-" << (names.empty() ? "" : " " + join(names, " ")) << "\n";
  }
  for (const auto& t : sorted_treatments(s)) {
    os << "\n[treatment";
    for (std::size_t k = 0; k < t.size(); ++k) os << " " << s.inputs[k].name() << "=" << s.inputs[k].label(t[k]);
    os << "]\n" << format_atom_lines(s.joint(t));
  }
  for (const auto& c : cs) os << "\n" << format_connection(s, c);
  return os.str();
}

}  // namespace ctx

#pragma once

// Command-line front end. `run` never exits the process; it returns
// 0 (property holds / feasible), 1 (fails / infeasible) or 2 (usage,
// parse or validation error).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/coupling_engine.hpp"
#include "ctx/coupling_schemes.hpp"
#include "ctx/epr_analysis.hpp"
#include "ctx/error.hpp"
#include "ctx/format.hpp"
#include "ctx/rational.hpp"
#include "ctx/selectivity.hpp"
#include "ctx/system_document.hpp"

namespace ctx::cli {

/// Ordered key/value report. Text form prints `key: value`, multi-line
/// values as an indented block; machine form is a flat JSON object with the
/// same keys and values.
class Report {
 public:
  void add(std::string key, std::string value) { fields_.emplace_back(std::move(key), std::move(value)); }

  void add_block(std::string key, std::string text) {
    if (!text.empty() && text.back() == '\n') text.pop_back();
    fields_.emplace_back(std::move(key), std::move(text));
    blocks_.push_back(fields_.size() - 1);
  }

  std::string text() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      const auto& [key, value] = fields_[i];
      if (std::find(blocks_.begin(), blocks_.end(), i) == blocks_.end()) {
        os << key << ": " << value << "\n";
        continue;
      }
      os << key << ":\n";
      std::istringstream lines(value);
      for (std::string line; std::getline(lines, line);) os << "  " << line << "\n";
    }
    return os.str();
  }

  std::string machine() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, value] : fields_) j[key] = value;
    return j.dump(2) + "\n";
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
  std::vector<std::size_t> blocks_;
};

namespace detail {

struct Globals {
  bool audit = false;
  std::string format = "text";
};

inline std::array<Rational, 4> parse_quad(const std::string& text, const char* what) {
  std::array<Rational, 4> out;
  std::size_t n = 0;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (n == 4) throw Error(ErrorKind::ParseError, std::string(what) + " needs exactly 4 comma-separated values");
    out[n++] = Rational::parse(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (n != 4) throw Error(ErrorKind::ParseError, std::string(what) + " needs exactly 4 comma-separated values");
  return out;
}

inline std::string verdict_word(bool feasible) { return feasible ? "FEASIBLE" : "INFEASIBLE"; }

inline std::string names(const SystemSpec& s, const std::vector<std::size_t>& outputs) {
  std::vector<std::string> parts;
  for (const auto l : outputs) parts.push_back(s.outputs[l].id);
  return "{" + join(parts, ",") + "}";
}

inline std::string input_names(const SystemSpec& s, const std::vector<std::size_t>& inputs) {
  std::vector<std::string> parts;
  for (const auto k : inputs) parts.push_back(s.inputs[k].name());
  return "{" + join(parts, ",") + "}";
}

inline void add_result(Report& r, const FeasibilityResult& result) {
  r.add("verdict", verdict_word(result.feasible()));
  r.add("pivots", std::to_string(result.pivots));
  if (result.feasible()) {
    r.add_block("certificate", format_distribution(*result.certificate));
  } else {
    r.add_block("separator", format_separator(result.system, result.separator));
  }
}

inline int add_audit(Report& r, const Globals& g, bool passed) {
  if (!g.audit) return 0;
  r.add("audit", passed ? "PASS" : "FAIL");
  return passed ? 0 : 1;
}

inline int cmd_check_selectivity(Report& r, const std::string& file) {
  const auto doc = parse_system_file(file);
  const auto& s = doc.system;
  const auto violations = check_marginal_selectivity(s);
  r.add("command", "check-selectivity");
  r.add("file", file);
  r.add("verdict", violations.empty() ? "HOLDS" : "VIOLATED");
  r.add("violations", std::to_string(violations.size()));
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    std::ostringstream os;
    os << "outputs " << names(s, v.outputs) << " inputs " << input_names(s, v.inputs) << "\n";
    os << treatment_label(s, v.first) << ":\n" << format_atom_lines(v.first_marginal);
    os << treatment_label(s, v.second) << ":\n" << format_atom_lines(v.second_marginal);
    r.add_block("violation " + std::to_string(i + 1), os.str());
  }
  return violations.empty() ? 0 : 1;
}

inline std::string normalize_summary(const SystemSpec& original, const NormalizedSystem& n) {
  std::ostringstream os;
  os << "inputs:\n";
  for (std::size_t l = 0; l < n.origin.size(); ++l) {
    std::vector<std::string> factors;
    for (const auto k : n.origin[l].factors) factors.push_back(original.inputs[k].name());
    os << "  " << n.system.inputs[l].name() << " = " << (factors.empty() ? std::string(kDummyName) : join(factors, " x "))
       << "\n";
  }
  os << "influences:\n";
  for (std::size_t l = 0; l < n.system.outputs.size(); ++l) {
    os << "  " << n.system.outputs[l].id << " <- " << n.system.inputs[l].name() << "\n";
  }
  os << "treatments:\n";
  for (const auto& [from, to] : n.treatment_map) {
    os << "  " << treatment_label(original, from) << " -> " << treatment_label(n.system, to) << "\n";
  }
  return os.str();
}

inline int cmd_normalize(Report& r, const std::string& file, const std::string& output) {
  const auto doc = parse_system_file(file);
  const auto n = bijectivize(doc.system);
  r.add("command", "normalize");
  r.add("file", file);
  r.add("bijective", is_bijective(doc.system) ? "yes" : "no");
  std::istringstream lines(normalize_summary(doc.system, n));
  std::string section;
  std::string body;
  auto flush = [&] {
    if (!section.empty()) r.add_block(section, body);
    body.clear();
  };
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind("  ", 0) == 0) {
      body += line.substr(2) + "\n";
    } else {
      flush();
      section = line.substr(0, line.size() - 1);
    }
  }
  flush();
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + output + "'");
    out << format_system(n.system);
    r.add("written", output);
  }
  return 0;
}

inline int cmd_couple(Report& r, const Globals& g, const std::string& file, bool identity,
                      const std::string& connections_file) {
  const auto doc = parse_system_file(file);
  const bool normalized = !is_bijective(doc.system);
  const SystemSpec s = normalized ? bijectivize(doc.system).system : doc.system;
  const auto limits = limits_from_env();
  r.add("command", "couple");
  r.add("file", file);
  r.add("normalized", normalized ? "yes" : "no");

  if (identity) {
    r.add("constraints", "identity");
    const auto result = reduced_coupling_feasible(s, limits);
    add_result(r, result);
    const int audit = add_audit(r, g, g.audit && audit_reduced(s, result));
    return result.feasible() && audit == 0 ? 0 : 1;
  }
  const ConnectionSet cs = connections_file.empty() ? doc.connections : parse_connections_file(connections_file, s);
  if (cs.empty()) {
    r.add("constraints", "none");
    const auto result = complete_coupling_feasible(s, limits);
    add_result(r, result);
    const int audit = add_audit(r, g, g.audit && audit_coupling(s, {}, result));
    return audit;
  }
  r.add("constraints", "connections (" + std::to_string(cs.size()) + ")");
  const auto result = ejds_feasible(s, cs, limits);
  add_result(r, result);
  const int audit = add_audit(r, g, g.audit && audit_coupling(s, cs, result));
  return result.feasible() && audit == 0 ? 0 : 1;
}

inline int cmd_epr(Report& r, const Globals& g, const std::string& p_text, const std::string& eps_text,
                   const std::string& test) {
  std::optional<epr::PVector> p;
  std::optional<epr::EpsilonVector> e;
  if (!p_text.empty()) {
    p = epr::PVector{parse_quad(p_text, "--p")};
    epr::require_valid(*p);
  }
  if (!eps_text.empty()) {
    e = epr::EpsilonVector{parse_quad(eps_text, "--eps")};
    epr::require_valid(*e);
  }
  const bool needs_p = test == "bell" || test == "cirelson" || test == "ejds";
  const bool needs_eps = test != "bell" && test != "cirelson";
  if (needs_p && !p) throw Error(ErrorKind::InvalidArgument, "--test " + test + " needs --p");
  if (needs_eps && !e) throw Error(ErrorKind::InvalidArgument, "--test " + test + " needs --eps");

  r.add("command", "epr");
  r.add("test", test);
  if (p) r.add("p", p->str());
  if (e) r.add("eps", e->str());

  if (test == "bell" || test == "cirelson") {
    const auto check = test == "bell" ? epr::bell_ch_fine(*p) : epr::cirelson(*p);
    std::vector<std::string> exprs;
    for (const auto& x : check.expressions) exprs.push_back(x.str());
    r.add("expressions", join(exprs, ","));
    r.add("verdict", check.holds ? "SATISFIED" : "VIOLATED");
    return check.holds ? 0 : 1;
  }
  const auto s = epr::s_values(*e);
  r.add("s0", s.s0.str());
  r.add("s1", s.s1.str());
  if (test == "s") return 0;
  if (test == "ejds") {
    const auto result = epr::ejds_feasible_epr(*p, *e);
    add_result(r, result);
    const int audit = add_audit(r, g, g.audit && epr::audit_epr(*p, *e, result));
    return result.feasible() && audit == 0 ? 0 : 1;
  }
  const bool fitting = test.rfind("fitting-", 0) == 0;
  const auto prop = test.ends_with("bell") ? epr::Property::bell : epr::Property::cirelson;
  const bool holds = fitting ? epr::is_fitting(prop, *e) : epr::is_forcing(prop, *e);
  r.add("verdict", fitting ? (holds ? "FITTING" : "NOT FITTING") : (holds ? "FORCING" : "NOT FORCING"));
  return holds ? 0 : 1;
}

inline int cmd_verify(Report& r, const Globals& g, const std::string& mode, const std::string& property,
                      const std::string& eps_text, epr::VerifyOptions opts) {
  const epr::EpsilonVector e{parse_quad(eps_text, "--eps")};
  epr::require_valid(e);
  opts.audit = g.audit;
  const auto prop = property == "bell" ? epr::Property::bell : epr::Property::cirelson;
  const auto report = mode == "fitting" ? epr::verify_fitting(prop, e, opts) : epr::verify_forcing(prop, e, opts);
  r.add("command", "verify");
  r.add("mode", mode);
  r.add("property", property);
  r.add("eps", e.str());
  r.add("seed", std::to_string(opts.seed));
  r.add("s0", report.s.s0.str());
  r.add("s1", report.s.s1.str());
  r.add("predicted", std::string(report.predicted ? "" : "not ") + mode);
  r.add_block("trials", report.trial_table());
  r.add("samples", std::to_string(report.trials.size()));
  r.add("feasible", std::to_string(report.feasible_count));
  r.add("counterexamples", std::to_string(report.counterexamples));
  if (report.counterexamples) r.add_block("evidence", report.evidence_text());
  if (mode == "forcing" && report.insufficient_feasible) r.add("warning", "no sampled p was feasible");
  r.add("agreement", report.consistent_with_prediction() ? "yes" : "no");
  r.add("verdict", report.counterexamples == 0 ? "HOLDS" : "FAILS");
  int code = report.counterexamples == 0 ? 0 : 1;
  if (g.audit) {
    r.add("audits", std::to_string(report.audits));
    r.add("audit", report.audit_failures == 0 ? "PASS" : "FAIL");
    if (report.audit_failures) code = 1;
  }
  return code;
}

inline int cmd_sample(Report& r, const std::string& file, std::size_t n, std::uint64_t seed, const std::string& dir) {
  const auto doc = parse_system_file(file);
  const auto sample = sample_system(doc.system, n, seed);
  r.add("command", "sample");
  r.add("file", file);
  r.add("n", std::to_string(n));
  r.add("seed", std::to_string(seed));
  for (const auto& [t, freq] : sample.frequencies) {
    r.add_block("frequencies " + treatment_label(doc.system, t), format_distribution(freq));
  }
  if (sample.p_hat) r.add("p_hat", sample.p_hat->str());
  if (!dir.empty()) {
    std::filesystem::create_directories(dir);
    std::size_t files = 0;
    for (const auto& [t, streams] : sample.streams) {
      for (const auto& st : streams) {
        write_stream((std::filesystem::path(dir) / (st.label + ".txt")).string(), st);
        ++files;
      }
    }
    r.add("streams_written", std::to_string(files));
  }
  return 0;
}

inline int cmd_couple_streams(Report& r, const std::string& scheme, const std::string& a_path, const std::string& b_path) {
  const auto a = read_stream(a_path, "A");
  const auto b = read_stream(b_path, "B");
  const auto joint = scheme == "chrono" ? chronological_coupling(a, b)
                     : scheme == "rank" ? comonotone_coupling(a, b)
                                        : antitone_coupling(a, b);
  r.add("command", "couple-streams");
  r.add("scheme", scheme);
  r.add("a", a_path);
  r.add("b", b_path);
  std::string pairs;
  for (const auto& [x, y] : joint.pairs) pairs += x + " " + y + "\n";
  r.add_block("pairs", pairs);
  r.add_block("mass", format_distribution(joint.mass));
  bool numeric = true;
  try {
    const auto m = empirical_moments(joint);
    r.add("covariance", m.covariance.str());
    r.add("variance_a", m.variance_a.str());
    r.add("variance_b", m.variance_b.str());
    const auto r2 = m.signed_r_squared();
    r.add("signed_r_squared", r2 ? r2->str() : "undefined");
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NonNumeric) throw;
    numeric = false;
  }
  if (!numeric) r.add("moments", "non-numeric values");
  return 0;
}

}  // namespace detail

inline constexpr const char* kEpsHelp =
    "connection vector eps_1^1,eps_2^1,eps_1^2,eps_2^2 where eps_i^k = Pr[output k is +1 at both treatments with "
    "input k = i]";

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contextuality analysis of systems of random variables with exact rational arithmetic", "ctx"};
  app.require_subcommand(1);
  app.fallthrough();
  detail::Globals g;
  app.add_flag("--audit", g.audit, "re-verify certificates and separators independently of the solver");
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"text", "machine"}));

  std::string file;
  std::string output;
  bool identity = false;
  std::string connections;
  std::string p_text;
  std::string eps_text;
  std::string test;
  std::string mode;
  std::string property;
  epr::VerifyOptions vopts;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string dir;
  std::string scheme;
  std::string a_path;
  std::string b_path;

  auto* sel = app.add_subcommand("check-selectivity", "check complete marginal selectivity");
  sel->add_option("FILE", file, "system file")->required();

  auto* norm = app.add_subcommand("normalize", "rewrite direct influences in bijective form");
  norm->add_option("FILE", file, "system file")->required();
  norm->add_option("--output", output, "write the normalized system document here");

  auto* couple = app.add_subcommand("couple", "decide whether a coupling with the given connections exists");
  couple->add_option("FILE", file, "system file")->required();
  auto* id_flag = couple->add_flag("--identity", identity, "identity connections (reduced coupling)");
  couple->add_option("--connections", connections, "file of [connection] sections")->excludes(id_flag);

  auto* epr_cmd = app.add_subcommand("epr", "tests on the 2x2 system with equiprobable +-1 outputs");
  epr_cmd->add_option("--p", p_text, "Pr[+1,+1] at treatments 11,12,21,22, e.g. 1/4,1/4,1/4,1/4");
  epr_cmd->add_option("--eps", eps_text, kEpsHelp);
  epr_cmd->add_option("--test", test, "which test to run")
      ->required()
      ->check(CLI::IsMember(
          {"bell", "cirelson", "s", "fitting-bell", "fitting-cirelson", "forcing-bell", "forcing-cirelson", "ejds"}));

  auto* verify = app.add_subcommand("verify", "check a fitting/forcing characterization against the LP oracle");
  verify->add_option("--mode", mode, "fitting or forcing")->required()->check(CLI::IsMember({"fitting", "forcing"}));
  verify->add_option("--property", property, "bell or cirelson")->required()->check(CLI::IsMember({"bell", "cirelson"}));
  verify->add_option("--eps", eps_text, kEpsHelp)->required();
  verify->add_option("--trials", vopts.trials, "number of sampled p vectors")->capture_default_str();
  verify->add_option("--seed", vopts.seed, "random seed")->capture_default_str();
  verify->add_option("--min-feasible", vopts.min_feasible, "forcing: keep sampling until this many are feasible")
      ->capture_default_str();
  verify->add_option("--grid", vopts.grid, "sampling denominator")->capture_default_str()->check(CLI::Range(2, 1000000));

  auto* sample = app.add_subcommand("sample", "draw independent samples at every treatment");
  sample->add_option("FILE", file, "system file")->required();
  sample->add_option("--n", n, "draws per treatment")->required()->check(CLI::PositiveNumber);
  sample->add_option("--seed", seed, "random seed")->required();
  sample->add_option("--out", dir, "write one stream file per output and treatment into this directory");

  auto* streams = app.add_subcommand("couple-streams", "pair two observation streams");
  streams->add_option("--scheme", scheme, "chrono, rank or antirank")
      ->required()
      ->check(CLI::IsMember({"chrono", "rank", "antirank"}));
  streams->add_option("A", a_path, "first stream file")->required();
  streams->add_option("B", b_path, "second stream file")->required();

  std::vector<const char*> argv{"ctx"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  Report report;
  int code = 2;
  try {
    if (sel->parsed()) code = detail::cmd_check_selectivity(report, file);
    else if (norm->parsed()) code = detail::cmd_normalize(report, file, output);
    else if (couple->parsed()) code = detail::cmd_couple(report, g, file, identity, connections);
    else if (epr_cmd->parsed()) code = detail::cmd_epr(report, g, p_text, eps_text, test);
    else if (verify->parsed()) code = detail::cmd_verify(report, g, mode, property, eps_text, vopts);
    else if (sample->parsed()) code = detail::cmd_sample(report, file, n, seed, dir);
    else if (streams->parsed()) code = detail::cmd_couple_streams(report, scheme, a_path, b_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  report.add("exit", std::to_string(code));
  out << (g.format == "machine" ? report.machine() : report.text());
  return code;
}

}  // namespace ctx::cli

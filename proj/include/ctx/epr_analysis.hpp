#pragma once

// The 2x2 binary system with equiprobable +-1 outputs: Bell/CH/Fine and
// Cirel'son tests, connection vectors, closed-form fitting and forcing
// predicates, and an LP-backed verifier for those predicates.
//
// Treatments are (i, j) with i the value of input a1 and j the value of a2.
// The eps vector is ordered (eps_1^1, eps_2^1, eps_1^2, eps_2^2), where
// eps_i^1 = Pr[A1 at (i,1) and (i,2) both +1] and
// eps_i^2 = Pr[A2 at (1,i) and (2,i) both +1].

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/coupling_engine.hpp"
#include "ctx/error.hpp"
#include "ctx/format.hpp"
#include "ctx/lp.hpp"
#include "ctx/random.hpp"
#include "ctx/rational.hpp"

namespace ctx::epr {

inline const Rational kHalf{1, 2};
inline const Rational kQuarter{1, 4};

namespace detail {

inline std::string csv(const std::array<Rational, 4>& v) {
  return v[0].str() + "," + v[1].str() + "," + v[2].str() + "," + v[3].str();
}

inline void require_box(const std::array<Rational, 4>& v, const char* what) {
  for (const auto& x : v) {
    if (x.sign() < 0 || x > kHalf) {
      throw Error(ErrorKind::FrechetViolation, std::string(what) + " entry " + x.str() + " outside [0, 1/2]");
    }
  }
}

}  // namespace detail

/// Pr[A1 = +1, A2 = +1] at each treatment, ordered (11, 12, 21, 22).
struct PVector {
  std::array<Rational, 4> v;

  const Rational& at(int i, int j) const { return v[static_cast<std::size_t>(2 * (i - 1) + (j - 1))]; }
  std::string str() const { return detail::csv(v); }
  friend bool operator==(const PVector&, const PVector&) = default;
};

struct EpsilonVector {
  std::array<Rational, 4> v;

  /// eps_i^k for output k in {1, 2} and value i in {1, 2}.
  const Rational& at(int k, int i) const { return v[static_cast<std::size_t>(2 * (k - 1) + (i - 1))]; }
  std::string str() const { return detail::csv(v); }
  friend bool operator==(const EpsilonVector&, const EpsilonVector&) = default;
};

inline void require_valid(const PVector& p) { detail::require_box(p.v, "p"); }
inline void require_valid(const EpsilonVector& e) { detail::require_box(e.v, "eps"); }

inline ValueSet spin_values(const std::string& name) { return ValueSet(name, {"-1", "+1"}); }

/// Joint of (A1, A2) at one treatment with equiprobable marginals.
inline FiniteDistribution spin_pair(const std::string& first, const std::string& second, const Rational& both_plus) {
  const Rational mixed = kHalf - both_plus;
  return make_distribution({{first, spin_values(first)}, {second, spin_values(second)}},
                           {{{"-1", "-1"}, both_plus}, {{"-1", "+1"}, mixed}, {{"+1", "-1"}, mixed}, {{"+1", "+1"}, both_plus}});
}

inline SystemSpec epr_system(const PVector& p) {
  require_valid(p);
  SystemSpec s;
  s.inputs = {ValueSet("a1", {"1", "2"}), ValueSet("a2", {"1", "2"})};
  s.outputs = {{"A1", spin_values("A1")}, {"A2", spin_values("A2")}};
  s.influences = {{0, 0}, {1, 1}};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const Treatment t{i, j};
      s.treatments.push_back(t);
      s.per_treatment.emplace(t, spin_pair("A1", "A2", p.at(static_cast<int>(i) + 1, static_cast<int>(j) + 1)));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Inequalities

/// p_ij + p_ij' + p_i'j' - p_i'j for (i, j) = (1,1), (1,2), (2,1), (2,2).
inline std::array<Rational, 4> chsh_expressions(const PVector& p) {
  std::array<Rational, 4> out;
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      const int ip = 3 - i;
      const int jp = 3 - j;
      out[static_cast<std::size_t>(2 * (i - 1) + (j - 1))] = p.at(i, j) + p.at(i, jp) + p.at(ip, jp) - p.at(ip, j);
    }
  }
  return out;
}

struct InequalityCheck {
  bool holds = false;
  std::array<Rational, 4> expressions;
};

inline InequalityCheck bell_ch_fine(const PVector& p) {
  InequalityCheck r{true, chsh_expressions(p)};
  for (const auto& e : r.expressions) {
    if (e.sign() < 0 || e > Rational(1)) r.holds = false;
  }
  return r;
}

/// (1 - sqrt 2)/2 <= x <= (1 + sqrt 2)/2, i.e. (2x - 1)^2 <= 2.
inline bool within_cirelson_band(const Rational& x) {
  return square(Rational(2) * x - Rational(1)) <= Rational(2);
}

inline InequalityCheck cirelson(const PVector& p) {
  InequalityCheck r{true, chsh_expressions(p)};
  for (const auto& e : r.expressions) {
    if (!within_cirelson_band(e)) r.holds = false;
  }
  return r;
}

enum class Property { bell, cirelson };

inline std::string_view to_string(Property p) { return p == Property::bell ? "bell" : "cirelson"; }

inline bool satisfies(Property prop, const PVector& p) {
  return prop == Property::bell ? bell_ch_fine(p).holds : cirelson(p).holds;
}

// ---------------------------------------------------------------------------
// Connection vectors

struct SPair {
  Rational s0;
  Rational s1;
};

/// Largest signed sum of the deviations eps - 1/4 over sign patterns with an
/// even (s0) and odd (s1) number of plus signs.
inline SPair s_values(const EpsilonVector& e) {
  require_valid(e);
  std::optional<Rational> best[2];
  for (unsigned mask = 0; mask < 16; ++mask) {
    Rational sum;
    for (unsigned b = 0; b < 4; ++b) {
      const Rational dev = e.v[b] - kQuarter;
      sum += (mask >> b & 1U) ? dev : -dev;
    }
    auto& slot = best[__builtin_popcount(mask) % 2];
    if (!slot || sum > *slot) slot = sum;
  }
  return {*best[0], *best[1]};
}

/// s0 <= (3 - sqrt 2)/2, i.e. (3 - 2 s0)^2 >= 2; 3 - 2 s0 >= 1 since s0 <= 1.
inline bool s0_at_most_cirelson_bound(const Rational& s0) {
  return square(Rational(3) - Rational(2) * s0) >= Rational(2);
}

/// s0 >= (3 - sqrt 2)/2, i.e. (3 - 2 s0)^2 <= 2.
inline bool s0_at_least_cirelson_bound(const Rational& s0) {
  return square(Rational(3) - Rational(2) * s0) <= Rational(2);
}

inline bool is_fitting_bell(const EpsilonVector& e) { return s_values(e).s1 <= kHalf; }

inline bool is_fitting_cirelson(const EpsilonVector& e) {
  const auto s = s_values(e);
  return s.s1 <= kHalf && s0_at_most_cirelson_bound(s.s0);
}

inline bool is_forcing_bell(const EpsilonVector& e) { return s_values(e).s0 == Rational(1); }

inline bool is_forcing_cirelson(const EpsilonVector& e) { return s0_at_least_cirelson_bound(s_values(e).s0); }

inline bool is_fitting(Property prop, const EpsilonVector& e) {
  return prop == Property::bell ? is_fitting_bell(e) : is_fitting_cirelson(e);
}

inline bool is_forcing(Property prop, const EpsilonVector& e) {
  return prop == Property::bell ? is_forcing_bell(e) : is_forcing_cirelson(e);
}

/// The four connections of the system as full 2-axis laws.
inline ConnectionSet epr_connections(const SystemSpec& s, const EpsilonVector& e) {
  require_valid(e);
  ConnectionSet cs;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 2; ++i) {
      const auto ids = connection_axis_ids(s, {k}, {i});
      const auto law = spin_pair(ids.at(0), ids.at(1), e.at(static_cast<int>(k) + 1, static_cast<int>(i) + 1));
      cs.push_back({{k}, {i}, law});
    }
  }
  return cs;
}

// ---------------------------------------------------------------------------
// EJDS feasibility on the 256-atom coupling space

namespace detail {

// Axis positions in the coupling space: treatment t in (11,12,21,22) order,
// A1 at 2t and A2 at 2t+1.
constexpr std::size_t kAxes = 8;
constexpr std::array<std::array<std::size_t, 2>, 4> kConnectionAxes{{{0, 2}, {4, 6}, {1, 5}, {3, 7}}};

inline bool plus(std::uint64_t atom, std::size_t axis) { return (atom >> (kAxes - 1 - axis)) & 1U; }

inline lp::Row count_row(std::string label, Rational rhs, const std::vector<std::size_t>& axes) {
  lp::Row row{std::move(label), {}, std::move(rhs)};
  for (std::uint64_t a = 0; a < (1U << kAxes); ++a) {
    bool all = true;
    for (const std::size_t x : axes) all = all && plus(a, x);
    if (all) row.terms.push_back({a, Rational(1)});
  }
  return row;
}

}  // namespace detail

/// Rows: total mass; at each treatment uniform single marginals and
/// Pr[+1,+1] = p_ij (which fixes the treatment joint); one row per connection
/// fixing Pr[+1,+1] = eps.
inline lp::LinearSystem epr_ejds_rows(const PVector& p, const EpsilonVector& e) {
  require_valid(p);
  require_valid(e);
  static const char* const kTreatment[4] = {"(1,1)", "(1,2)", "(2,1)", "(2,2)"};
  lp::LinearSystem sys;
  sys.variables = std::size_t{1} << detail::kAxes;
  sys.rows.push_back(detail::count_row("total", Rational(1), {}));
  for (std::size_t t = 0; t < 4; ++t) {
    const std::string at = std::string("@") + kTreatment[t];
    sys.rows.push_back(detail::count_row("A1" + at + "=+1", kHalf, {2 * t}));
    sys.rows.push_back(detail::count_row("A2" + at + "=+1", kHalf, {2 * t + 1}));
    sys.rows.push_back(detail::count_row("(A1,A2)" + at + "=(+1,+1)", p.v[t], {2 * t, 2 * t + 1}));
  }
  static const char* const kConn[4] = {"eps_1^1", "eps_2^1", "eps_1^2", "eps_2^2"};
  for (std::size_t c = 0; c < 4; ++c) {
    const auto& [x, y] = detail::kConnectionAxes[c];
    sys.rows.push_back(detail::count_row(kConn[c], e.v[c], {x, y}));
  }
  return sys;
}

inline FeasibilityResult ejds_feasible_epr(const PVector& p, const EpsilonVector& e) {
  auto sys = epr_ejds_rows(p, e);
  const auto lp_result = lp::lp_feasibility(sys);
  FeasibilityResult r;
  r.pivots = lp_result.pivots;
  if (lp_result.feasible) {
    r.status = Feasibility::feasible;
    FiniteDistribution::MassMap mass;
    for (std::size_t j = 0; j < lp_result.point.size(); ++j) {
      if (!lp_result.point[j].is_zero()) mass.emplace(j, lp_result.point[j]);
    }
    r.certificate = FiniteDistribution(coupling_axes(epr_system(p)), std::move(mass));
  } else {
    r.separator = lp_result.separator;
  }
  r.system = std::move(sys);
  return r;
}

/// Feasible: the certificate's treatment and connection marginals are
/// replayed by marginalization. Infeasible: the separator is checked against
/// the posed rows.
inline bool audit_epr(const PVector& p, const EpsilonVector& e, const FeasibilityResult& r) {
  if (!r.feasible()) return lp::verify_separator(r.system, r.separator);
  if (!r.certificate) return false;
  const auto s = epr_system(p);
  return audit_coupling(s, epr_connections(s, e), r);
}

// ---------------------------------------------------------------------------
// Sampling

inline constexpr std::int64_t kDefaultGrid = 1000;

enum class PConstraint { none, bell, cirelson };

inline Rational sample_box_entry(Rng& rng, std::int64_t grid) {
  const auto k = uniform_below(rng, static_cast<std::uint64_t>(grid / 2 + 1));
  return Rational(static_cast<std::int64_t>(k), grid);
}

/// Uniform on the grid {k/grid} within [0, 1/2]^4, rejected until the
/// constraint holds.
inline PVector sample_p(PConstraint constraint, Rng& rng, std::int64_t grid = kDefaultGrid) {
  if (grid < 2) throw Error(ErrorKind::InvalidArgument, "grid denominator must be at least 2");
  for (;;) {
    PVector p;
    for (auto& x : p.v) x = sample_box_entry(rng, grid);
    if (constraint == PConstraint::none || (constraint == PConstraint::bell && bell_ch_fine(p).holds) ||
        (constraint == PConstraint::cirelson && cirelson(p).holds)) {
      return p;
    }
  }
}

/// Grid-uniform eps vector satisfying `accept`.
template <class Predicate>
EpsilonVector sample_eps(Rng& rng, Predicate accept, std::int64_t grid = kDefaultGrid) {
  if (grid < 2) throw Error(ErrorKind::InvalidArgument, "grid denominator must be at least 2");
  for (;;) {
    EpsilonVector e;
    for (auto& x : e.v) x = sample_box_entry(rng, grid);
    if (accept(e)) return e;
  }
}

/// p_ij = (1 + a_i b_j)/4 for a, b in {-1, +1}^2, with a_1 = +1 to drop the
/// duplicate (a, b) ~ (-a, -b).
inline std::array<PVector, 8> deterministic_vertices() {
  std::array<PVector, 8> out;
  std::size_t n = 0;
  for (int a2 : {1, -1}) {
    for (int b1 : {1, -1}) {
      for (int b2 : {1, -1}) {
        const int a[2] = {1, a2};
        const int b[2] = {b1, b2};
        PVector p;
        for (std::size_t i = 0; i < 2; ++i) {
          for (std::size_t j = 0; j < 2; ++j) p.v[2 * i + j] = Rational(1 + a[i] * b[j], 4);
        }
        out[n++] = p;
      }
    }
  }
  return out;
}

/// The PR box (1/2,1/2,1/2,0) and its images: one entry differing from the others.
inline std::array<PVector, 8> pr_box_images() {
  std::array<PVector, 8> out;
  for (std::size_t odd = 0; odd < 4; ++odd) {
    PVector three_halves;
    PVector three_zeros;
    for (std::size_t k = 0; k < 4; ++k) {
      three_halves.v[k] = k == odd ? Rational(0) : kHalf;
      three_zeros.v[k] = k == odd ? kHalf : Rational(0);
    }
    out[odd] = three_halves;
    out[4 + odd] = three_zeros;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification against the LP oracle

enum class Mode { fitting, forcing };

inline std::string_view to_string(Mode m) { return m == Mode::fitting ? "fitting" : "forcing"; }

struct VerifyOptions {
  /// Number of sampled p vectors.
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  /// Forcing mode only: keep drawing past `trials` until this many feasible
  /// samples are collected (0 disables), giving up after `max_draws`.
  std::size_t min_feasible = 0;
  std::size_t max_draws = 100000;
  /// Re-check every LP verdict with the independent verifiers.
  bool audit = false;
  std::int64_t grid = kDefaultGrid;
};

struct TrialRecord {
  std::string id;
  PVector p;
  bool feasible = false;
  bool property_holds = false;
  /// ok | counterexample | infeasible
  std::string verdict;
  /// Kept for counterexamples only.
  std::optional<FeasibilityResult> evidence;
};

struct VerifyReport {
  Mode mode = Mode::fitting;
  Property property = Property::bell;
  EpsilonVector eps;
  SPair s;
  /// Closed-form prediction: eps is fitting (resp. forcing) for the property.
  bool predicted = false;
  std::vector<TrialRecord> trials;
  std::size_t feasible_count = 0;
  std::size_t counterexamples = 0;
  std::size_t audits = 0;
  std::size_t audit_failures = 0;
  /// Forcing mode: no sampled p was feasible.
  bool insufficient_feasible = false;

  /// The oracle agrees with the closed form: no counterexample when one is
  /// predicted impossible, at least one otherwise.
  bool consistent_with_prediction() const { return predicted == (counterexamples == 0); }

  std::string trial_table() const {
    std::ostringstream os;
    os << "trial\tp\teps\tfeasible\tproperty_holds\tverdict\n";
    for (const auto& t : trials) {
      os << t.id << "\t" << t.p.str() << "\t" << eps.str() << "\t" << (t.feasible ? "yes" : "no") << "\t"
         << (t.property_holds ? "yes" : "no") << "\t" << t.verdict << "\n";
    }
    return os.str();
  }

  std::string evidence_text() const {
    std::ostringstream os;
    for (const auto& t : trials) {
      if (!t.evidence) continue;
      os << "counterexample " << t.id << " p=" << t.p.str() << "\n";
      if (t.evidence->feasible()) {
        os << "  certificate:\n";
        std::istringstream lines(format_distribution(*t.evidence->certificate));
        for (std::string line; std::getline(lines, line);) os << "    " << line << "\n";
      } else {
        os << "  separator:\n";
        std::istringstream lines(format_separator(t.evidence->system, t.evidence->separator));
        for (std::string line; std::getline(lines, line);) os << "  " << line << "\n";
      }
    }
    return os.str();
  }
};

namespace detail {

inline TrialRecord run_trial(std::string id, const PVector& p, const EpsilonVector& e, Property prop, Mode mode,
                             VerifyReport& report, const VerifyOptions& opts) {
  TrialRecord rec{std::move(id), p, false, satisfies(prop, p), "", std::nullopt};
  auto result = ejds_feasible_epr(p, e);
  if (opts.audit) {
    ++report.audits;
    if (!audit_epr(p, e, result)) ++report.audit_failures;
  }
  rec.feasible = result.feasible();
  if (rec.feasible) ++report.feasible_count;
  bool counter = false;
  if (mode == Mode::fitting) {
    counter = rec.property_holds && !rec.feasible;
    rec.verdict = counter ? "counterexample" : "ok";
  } else {
    counter = rec.feasible && !rec.property_holds;
    rec.verdict = !rec.feasible ? "infeasible" : (counter ? "counterexample" : "ok");
  }
  if (counter) {
    ++report.counterexamples;
    rec.evidence = std::move(result);
  }
  return rec;
}

}  // namespace detail

/// Samples p satisfying the property and checks each is co-embeddable with
/// eps. When eps is predicted not to be fitting, the 8 deterministic
/// vertices are searched as well.
inline VerifyReport verify_fitting(Property prop, const EpsilonVector& e, const VerifyOptions& opts) {
  if (opts.trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
  VerifyReport report;
  report.mode = Mode::fitting;
  report.property = prop;
  report.eps = e;
  report.s = s_values(e);
  report.predicted = is_fitting(prop, e);
  const auto constraint = prop == Property::bell ? PConstraint::bell : PConstraint::cirelson;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    Rng rng = make_rng(opts.seed, t);
    const PVector p = sample_p(constraint, rng, opts.grid);
    report.trials.push_back(detail::run_trial(std::to_string(t), p, e, prop, Mode::fitting, report, opts));
  }
  if (!report.predicted) {
    const auto vertices = deterministic_vertices();
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      report.trials.push_back(detail::run_trial("v" + std::to_string(v), vertices[v], e, prop, Mode::fitting, report, opts));
    }
  }
  return report;
}

/// Samples p uniformly in the box, keeps those co-embeddable with eps, and
/// checks the property on each.
inline VerifyReport verify_forcing(Property prop, const EpsilonVector& e, const VerifyOptions& opts) {
  if (opts.trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
  VerifyReport report;
  report.mode = Mode::forcing;
  report.property = prop;
  report.eps = e;
  report.s = s_values(e);
  report.predicted = is_forcing(prop, e);
  for (std::size_t t = 0;; ++t) {
    const bool need_more = t < opts.trials || (report.feasible_count < opts.min_feasible && t < opts.max_draws);
    if (!need_more) break;
    Rng rng = make_rng(opts.seed, t);
    const PVector p = sample_p(PConstraint::none, rng, opts.grid);
    report.trials.push_back(detail::run_trial(std::to_string(t), p, e, prop, Mode::forcing, report, opts));
  }
  report.insufficient_feasible = report.feasible_count == 0;
  return report;
}

}  // namespace ctx::epr

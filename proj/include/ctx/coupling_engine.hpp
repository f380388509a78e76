#pragma once

// Existence of complete couplings, reduced couplings (identity connections)
// and extended joint distribution sequences, decided by exact linear
// feasibility over the full coupling atom space.
//
// Coupling axes are named `<output>@<treatment>` (for example `A1@(1,2)`),
// treatments in canonical order and outputs in declaration order within each
// treatment. Reduced-coupling axes are named `<output>|<input value>`.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/error.hpp"
#include "ctx/lp.hpp"
#include "ctx/selectivity.hpp"

namespace ctx {

struct CouplingLimits {
  std::uint64_t atom_cap = std::uint64_t{1} << 24;
};

enum class Feasibility { feasible, infeasible };

struct FeasibilityResult {
  Feasibility status = Feasibility::infeasible;
  /// Joint over the coupling atom space when feasible.
  std::optional<FiniteDistribution> certificate;
  /// The posed rows (empty when no solve was needed).
  lp::LinearSystem system;
  /// Farkas multipliers, one per row, when infeasible.
  std::vector<Rational> separator;
  std::size_t pivots = 0;

  bool feasible() const { return status == Feasibility::feasible; }
};

/// (I, tau)-connection: a joint law over the axes (k, phi) for k in I and all
/// allowable phi with phi|I = tau.
struct ConnectionSpec {
  /// Input indices, ascending; nonempty and a proper subset of all inputs.
  std::vector<std::size_t> inputs;
  /// One value index per entry of `inputs`.
  std::vector<std::size_t> tau;
  FiniteDistribution law;
};

using ConnectionSet = std::vector<ConnectionSpec>;

// ---------------------------------------------------------------------------
// Naming and atom spaces

inline std::string coupling_axis_id(const SystemSpec& s, std::size_t output, const Treatment& t) {
  return s.outputs.at(output).id + "@" + treatment_label(s, t);
}

inline std::vector<Treatment> sorted_treatments(const SystemSpec& s) {
  std::vector<Treatment> ts = s.treatments;
  std::sort(ts.begin(), ts.end());
  return ts;
}

inline std::vector<std::size_t> require_bijective(const SystemSpec& s) {
  auto pairing = bijective_pairing(s);
  if (!pairing) throw Error(ErrorKind::NotBijective, "direct influences are not bijective; normalize the system first");
  return *pairing;
}

/// Output index paired with each input in a bijective system.
inline std::vector<std::size_t> output_of_input(const SystemSpec& s) {
  const auto input_of = require_bijective(s);
  std::vector<std::size_t> output_of(input_of.size());
  for (std::size_t l = 0; l < input_of.size(); ++l) output_of[input_of[l]] = l;
  return output_of;
}

inline std::vector<Axis> coupling_axes(const SystemSpec& s) {
  std::vector<Axis> axes;
  for (const auto& t : sorted_treatments(s)) {
    for (std::size_t l = 0; l < s.outputs.size(); ++l) axes.push_back({coupling_axis_id(s, l, t), s.outputs[l].values});
  }
  return axes;
}

inline std::uint64_t atom_space_size(const std::vector<Axis>& axes, const CouplingLimits& limits) {
  std::uint64_t n = 1;
  for (const auto& a : axes) {
    if (n > limits.atom_cap / a.values.size()) {
      throw Error(ErrorKind::AtomSpaceTooLarge, "coupling atom space exceeds the cap of " +
                                                    std::to_string(limits.atom_cap) + " atoms");
    }
    n *= a.values.size();
  }
  return n;
}

/// Axes (k, phi), phi-major, for the connection indexed by (inputs, tau).
inline std::vector<std::string> connection_axis_ids(const SystemSpec& s, const std::vector<std::size_t>& inputs,
                                                    const std::vector<std::size_t>& tau) {
  const auto output_of = output_of_input(s);
  std::vector<std::string> ids;
  for (const auto& t : sorted_treatments(s)) {
    if (restrict_treatment(t, inputs) != tau) continue;
    for (const std::size_t k : inputs) ids.push_back(coupling_axis_id(s, output_of.at(k), t));
  }
  return ids;
}

namespace detail {

inline FiniteDistribution rename_axes(const FiniteDistribution& d, const std::vector<std::string>& ids) {
  std::vector<Axis> axes = d.axes();
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i].id = ids.at(i);
  return FiniteDistribution(std::move(axes), d.support());
}

/// Appends rows forcing the marginal of the coupling on `positions` to equal
/// `target`. The last target atom is implied by the total-mass row and skipped.
inline void add_marginal_rows(lp::LinearSystem& sys, const std::vector<std::size_t>& radix,
                              const std::vector<std::size_t>& positions, const FiniteDistribution& target,
                              const std::string& label) {
  const std::uint64_t target_atoms = target.atom_count();
  std::vector<std::vector<lp::Term>> rows(target_atoms);
  std::vector<std::size_t> digit(radix.size(), 0);
  for (std::uint64_t var = 0; var < sys.variables; ++var) {
    std::uint64_t proj = 0;
    for (const std::size_t p : positions) proj = proj * radix[p] + digit[p];
    rows[proj].push_back({var, Rational(1)});
    for (std::size_t i = radix.size(); i-- > 0;) {
      if (++digit[i] < radix[i]) break;
      digit[i] = 0;
    }
  }
  for (std::uint64_t a = 0; a + 1 < target_atoms; ++a) {
    std::string row_label = label + "[";
    const auto labels = target.labels(a);
    for (std::size_t i = 0; i < labels.size(); ++i) row_label += (i ? "," : "") + labels[i];
    sys.rows.push_back({row_label + "]", std::move(rows[a]), target.mass(a)});
  }
}

inline lp::Row total_mass_row(std::uint64_t variables) {
  lp::Row row{"total", {}, Rational(1)};
  row.terms.reserve(variables);
  for (std::uint64_t v = 0; v < variables; ++v) row.terms.push_back({v, Rational(1)});
  return row;
}

inline FeasibilityResult solve(lp::LinearSystem sys, const std::vector<Axis>& axes) {
  const auto lp_result = lp::lp_feasibility(sys);
  FeasibilityResult r;
  r.pivots = lp_result.pivots;
  if (lp_result.feasible) {
    r.status = Feasibility::feasible;
    FiniteDistribution::MassMap mass;
    for (std::size_t j = 0; j < lp_result.point.size(); ++j) {
      if (!lp_result.point[j].is_zero()) mass.emplace(j, lp_result.point[j]);
    }
    r.certificate = FiniteDistribution(axes, std::move(mass));
  } else {
    r.status = Feasibility::infeasible;
    r.separator = lp_result.separator;
  }
  r.system = std::move(sys);
  return r;
}

inline std::vector<std::size_t> radix_of(const std::vector<Axis>& axes) {
  std::vector<std::size_t> radix;
  for (const auto& a : axes) radix.push_back(a.values.size());
  return radix;
}

inline std::size_t position_of(const std::vector<Axis>& axes, const std::string& id) {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].id == id) return i;
  }
  throw Error(ErrorKind::UnknownAxis, "no coupling axis '" + id + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Complete couplings

/// Every treatment's outputs independent of every other treatment's.
inline FiniteDistribution independent_coupling(const SystemSpec& s, const CouplingLimits& limits = {}) {
  require_valid(s);
  atom_space_size(coupling_axes(s), limits);
  std::vector<FiniteDistribution> parts;
  for (const auto& t : sorted_treatments(s)) {
    std::vector<std::string> ids;
    for (std::size_t l = 0; l < s.outputs.size(); ++l) ids.push_back(coupling_axis_id(s, l, t));
    parts.push_back(detail::rename_axes(s.joint(t), ids));
  }
  return product(parts);
}

/// Always feasible; the independent coupling is the witness.
inline FeasibilityResult complete_coupling_feasible(const SystemSpec& s, const CouplingLimits& limits = {}) {
  FeasibilityResult r;
  r.status = Feasibility::feasible;
  r.certificate = independent_coupling(s, limits);
  return r;
}

// ---------------------------------------------------------------------------
// Reduced coupling

inline std::vector<Axis> reduced_axes(const SystemSpec& s) {
  const auto input_of = require_bijective(s);
  std::vector<Axis> axes;
  for (std::size_t l = 0; l < s.outputs.size(); ++l) {
    const ValueSet& in = s.inputs[input_of[l]];
    for (std::size_t x = 0; x < in.size(); ++x) axes.push_back({s.outputs[l].id + "|" + in.label(x), s.outputs[l].values});
  }
  return axes;
}

/// Axis ids of the reduced coupling that reproduce treatment `t`, in output order.
inline std::vector<std::string> reduced_axis_ids(const SystemSpec& s, const Treatment& t) {
  const auto input_of = require_bijective(s);
  std::vector<std::string> ids;
  for (std::size_t l = 0; l < s.outputs.size(); ++l) ids.push_back(s.outputs[l].id + "|" + s.inputs[input_of[l]].label(t[input_of[l]]));
  return ids;
}

/// Does a coupling indexed by (output, input value) reproduce every treatment joint?
inline FeasibilityResult reduced_coupling_feasible(const SystemSpec& s, const CouplingLimits& limits = {}) {
  require_valid(s);
  const auto axes = reduced_axes(s);
  lp::LinearSystem sys;
  sys.variables = atom_space_size(axes, limits);
  sys.rows.push_back(detail::total_mass_row(sys.variables));
  const auto radix = detail::radix_of(axes);
  for (const auto& t : sorted_treatments(s)) {
    std::vector<std::size_t> positions;
    for (const auto& id : reduced_axis_ids(s, t)) positions.push_back(detail::position_of(axes, id));
    detail::add_marginal_rows(sys, radix, positions, s.joint(t), "A" + treatment_label(s, t));
  }
  return detail::solve(std::move(sys), axes);
}

// ---------------------------------------------------------------------------
// Connections

/// Throws InconsistentConnection unless `c` is well-indexed and its
/// marginal at every member treatment equals the system's marginal there.
inline void validate_connection(const SystemSpec& s, const ConnectionSpec& c) {
  const auto fail = [](const std::string& why) { return Error(ErrorKind::InconsistentConnection, why); };
  const auto output_of = output_of_input(s);
  if (c.inputs.empty() || c.inputs.size() >= s.inputs.size()) throw fail("connection index set must be a nonempty proper subset of the inputs");
  if (!std::is_sorted(c.inputs.begin(), c.inputs.end()) ||
      std::adjacent_find(c.inputs.begin(), c.inputs.end()) != c.inputs.end() || c.inputs.back() >= s.inputs.size()) {
    throw fail("connection index set must be ascending, distinct and in range");
  }
  if (c.tau.size() != c.inputs.size()) throw fail("connection value tuple has the wrong length");
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    if (c.tau[i] >= s.inputs[c.inputs[i]].size()) throw fail("connection value outside its input");
  }
  const auto ids = connection_axis_ids(s, c.inputs, c.tau);
  if (ids.empty()) throw fail("no allowable treatment matches the connection's input values");
  std::set<std::string> expected(ids.begin(), ids.end());
  std::set<std::string> given;
  for (const auto& a : c.law.axes()) given.insert(a.id);
  if (given != expected) throw fail("connection axes do not match the treatments sharing its input values");

  std::vector<std::string> out_ids;
  for (const std::size_t k : c.inputs) out_ids.push_back(s.outputs[output_of[k]].id);
  for (const auto& t : sorted_treatments(s)) {
    if (restrict_treatment(t, c.inputs) != c.tau) continue;
    std::vector<std::string> mine;
    for (const std::size_t k : c.inputs) mine.push_back(coupling_axis_id(s, output_of[k], t));
    const auto lhs = marginalize(c.law, mine);
    const auto rhs = marginalize(s.joint(t), out_ids);
    for (std::size_t i = 0; i < lhs.rank(); ++i) {
      if (!lhs.axes()[i].values.same_values(rhs.axes()[i].values)) throw fail("axis '" + mine[i] + "' has the wrong codomain");
    }
    if (lhs.support() != rhs.support()) {
      throw fail("connection marginal at " + treatment_label(s, t) + " differs from the system's distribution");
    }
  }
}

inline void validate_connections(const SystemSpec& s, const ConnectionSet& cs) {
  std::set<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> seen;
  for (const auto& c : cs) {
    validate_connection(s, c);
    if (!seen.insert({c.inputs, c.tau}).second) {
      throw Error(ErrorKind::InconsistentConnection, "two connections share the same (I, tau)");
    }
  }
}

namespace detail {

inline std::vector<FiniteDistribution> member_marginals(const SystemSpec& s, const std::vector<std::size_t>& inputs,
                                                        const std::vector<std::size_t>& tau) {
  const auto output_of = output_of_input(s);
  std::vector<std::string> out_ids;
  for (const std::size_t k : inputs) out_ids.push_back(s.outputs[output_of[k]].id);
  std::vector<FiniteDistribution> ms;
  for (const auto& t : sorted_treatments(s)) {
    if (restrict_treatment(t, inputs) == tau) ms.push_back(marginalize(s.joint(t), out_ids));
  }
  if (ms.empty()) throw Error(ErrorKind::InconsistentConnection, "no allowable treatment matches the connection's input values");
  return ms;
}

}  // namespace detail

/// Identity connection: all member components equal with probability one.
/// Requires the member marginals to coincide.
inline ConnectionSpec identity_connection(const SystemSpec& s, std::vector<std::size_t> inputs,
                                          std::vector<std::size_t> tau) {
  const auto ms = detail::member_marginals(s, inputs, tau);
  for (const auto& m : ms) {
    if (m.support() != ms.front().support()) {
      throw Error(ErrorKind::InconsistentConnection, "identity connection needs equal marginals across its treatments");
    }
  }
  const auto ids = connection_axis_ids(s, inputs, tau);
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < ids.size(); ++i) axes.push_back({ids[i], ms.front().axes()[i % inputs.size()].values});
  const std::uint64_t block = ms.front().atom_count();
  FiniteDistribution::MassMap mass;
  for (const auto& [a, m] : ms.front().support()) {
    std::uint64_t index = 0;
    for (std::size_t r = 0; r < ms.size(); ++r) index = index * block + a;
    mass.emplace(index, m);
  }
  return {std::move(inputs), std::move(tau), FiniteDistribution(std::move(axes), std::move(mass))};
}

/// Independent connection: member components mutually independent.
inline ConnectionSpec independent_connection(const SystemSpec& s, std::vector<std::size_t> inputs,
                                             std::vector<std::size_t> tau) {
  const auto ms = detail::member_marginals(s, inputs, tau);
  const auto ids = connection_axis_ids(s, inputs, tau);
  std::vector<FiniteDistribution> parts;
  for (std::size_t r = 0; r < ms.size(); ++r) {
    std::vector<std::string> part_ids(ids.begin() + static_cast<std::ptrdiff_t>(r * inputs.size()),
                                      ids.begin() + static_cast<std::ptrdiff_t>((r + 1) * inputs.size()));
    parts.push_back(detail::rename_axes(ms[r], part_ids));
  }
  return {std::move(inputs), std::move(tau), product(parts)};
}

/// Identity connections for every proper nonempty I and every tau realized
/// by some allowable treatment.
inline ConnectionSet all_identity_connections(const SystemSpec& s) {
  require_bijective(s);
  const std::size_t K = s.inputs.size();
  ConnectionSet out;
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << K); ++mask) {
    std::vector<std::size_t> I;
    for (std::size_t k = 0; k < K; ++k) {
      if (mask >> k & 1U) I.push_back(k);
    }
    std::set<std::vector<std::size_t>> taus;
    for (const auto& t : s.treatments) taus.insert(restrict_treatment(t, I));
    for (const auto& tau : taus) out.push_back(identity_connection(s, I, tau));
  }
  return out;
}

// ---------------------------------------------------------------------------
// EJDS

/// Is there a complete coupling whose treatment marginals match the system and
/// whose (I, tau) sub-families follow every given connection?
inline FeasibilityResult ejds_feasible(const SystemSpec& s, const ConnectionSet& cs, const CouplingLimits& limits = {}) {
  require_valid(s);
  require_bijective(s);
  validate_connections(s, cs);
  const auto axes = coupling_axes(s);
  lp::LinearSystem sys;
  sys.variables = atom_space_size(axes, limits);
  sys.rows.push_back(detail::total_mass_row(sys.variables));
  const auto radix = detail::radix_of(axes);
  for (const auto& t : sorted_treatments(s)) {
    std::vector<std::size_t> positions;
    for (std::size_t l = 0; l < s.outputs.size(); ++l) positions.push_back(detail::position_of(axes, coupling_axis_id(s, l, t)));
    detail::add_marginal_rows(sys, radix, positions, s.joint(t), "A" + treatment_label(s, t));
  }
  for (const auto& c : cs) {
    std::vector<std::size_t> positions;
    for (const auto& a : c.law.axes()) positions.push_back(detail::position_of(axes, a.id));
    std::string label = "C{";
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
      label += (i ? "," : "") + s.inputs[c.inputs[i]].name() + "=" + s.inputs[c.inputs[i]].label(c.tau[i]);
    }
    detail::add_marginal_rows(sys, radix, positions, c.law, label + "}");
  }
  return detail::solve(std::move(sys), axes);
}

/// The (I, tau) sub-family of a complete coupling.
inline FiniteDistribution connection_of_coupling(const FiniteDistribution& h, const std::vector<std::size_t>& inputs,
                                                 const std::vector<std::size_t>& tau, const SystemSpec& s) {
  return marginalize(h, connection_axis_ids(s, inputs, tau));
}

// ---------------------------------------------------------------------------
// Audit. Feasible verdicts are replayed semantically by marginalizing the
// certificate; infeasible verdicts are checked against the posed rows.

namespace detail {

/// The certificate as a point of the posed system, when one was posed.
inline bool replays_rows(const FeasibilityResult& r) {
  if (r.system.rows.empty()) return true;
  if (r.certificate->atom_count() != r.system.variables) return false;
  std::vector<Rational> x(r.system.variables);
  for (const auto& [index, m] : r.certificate->support()) x[index] = m;
  return lp::verify_point(r.system, x);
}

}  // namespace detail

inline bool audit_coupling(const SystemSpec& s, const ConnectionSet& cs, const FeasibilityResult& r) {
  if (!r.feasible()) return lp::verify_separator(r.system, r.separator);
  if (!r.certificate || !detail::replays_rows(r)) return false;
  const auto& h = *r.certificate;
  for (const auto& t : sorted_treatments(s)) {
    std::vector<std::string> ids;
    for (std::size_t l = 0; l < s.outputs.size(); ++l) ids.push_back(coupling_axis_id(s, l, t));
    if (marginalize(h, ids).support() != s.joint(t).support()) return false;
  }
  for (const auto& c : cs) {
    std::vector<std::string> ids;
    for (const auto& a : c.law.axes()) ids.push_back(a.id);
    if (marginalize(h, ids).support() != c.law.support()) return false;
  }
  return true;
}

inline bool audit_reduced(const SystemSpec& s, const FeasibilityResult& r) {
  if (!r.feasible()) return lp::verify_separator(r.system, r.separator);
  if (!r.certificate || !detail::replays_rows(r)) return false;
  for (const auto& t : sorted_treatments(s)) {
    if (marginalize(*r.certificate, reduced_axis_ids(s, t)).support() != s.joint(t).support()) return false;
  }
  return true;
}

inline CouplingLimits limits_from_env() {
  CouplingLimits limits;
  if (const char* cap = std::getenv("CTX_ATOM_CAP")) {
    try {
      std::size_t used = 0;
      const std::string text(cap);
      const auto value = std::stoull(text, &used);
      if (used != text.size() || value == 0) throw std::invalid_argument("trailing");
      limits.atom_cap = value;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "CTX_ATOM_CAP must be a positive integer");
    }
  }
  return limits;
}

}  // namespace ctx

#pragma once

// Finite discrete probability model: value sets, product atom spaces,
// exact-rational distributions and validated input/output system specs.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctx/error.hpp"
#include "ctx/rational.hpp"

namespace ctx {

/// Label of the single value of a dummy (single-valued) input.
inline constexpr std::string_view kDummyLabel = ".";
/// Reserved value-set name for the dummy input.
inline constexpr std::string_view kDummyName = "\xC2\xB7";  // "·"

namespace detail {

inline bool is_reserved_char(char c) {
  switch (c) {
    case ' ': case '\t': case '\n': case '\r': case ':': case '#': case '[': case ']': case '=':
      return true;
    default:
      return false;
  }
}

inline bool valid_label(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), is_reserved_char);
}

}  // namespace detail

/// A nonempty finite set of distinct symbolic labels in a fixed canonical order.
class ValueSet {
 public:
  ValueSet() = default;

  ValueSet(std::string name, std::vector<std::string> labels) : name_(std::move(name)), labels_(std::move(labels)) {
    if (labels_.empty()) throw Error(ErrorKind::InvalidArgument, "value set '" + name_ + "' is empty");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!detail::valid_label(labels_[i])) {
        throw Error(ErrorKind::InvalidArgument, "value set '" + name_ + "' has invalid label '" + labels_[i] + "'");
      }
      if (!index_.emplace(labels_[i], i).second) {
        throw Error(ErrorKind::InvalidArgument, "value set '" + name_ + "' repeats label '" + labels_[i] + "'");
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Same labels in the same order; the name is not part of the comparison.
  bool same_values(const ValueSet& other) const { return labels_ == other.labels_; }

  friend bool operator==(const ValueSet& a, const ValueSet& b) { return a.name_ == b.name_ && a.labels_ == b.labels_; }

 private:
  std::string name_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline ValueSet dummy_value_set() { return ValueSet(std::string(kDummyName), {std::string(kDummyLabel)}); }

struct Axis {
  std::string id;
  ValueSet values;

  friend bool operator==(const Axis& a, const Axis& b) { return a.id == b.id && a.values.same_values(b.values); }
};

/// One value index per axis.
using Atom = std::vector<std::size_t>;

/// Exact probability mass over the product of its axes' value sets.
///
/// Atoms are addressed by a mixed-radix index with the first axis most
/// significant, so ascending index order is lexicographic in (axis order,
/// value order). Zero-mass atoms are not stored.
class FiniteDistribution {
 public:
  using MassMap = std::map<std::uint64_t, Rational>;

  FiniteDistribution() = default;

  /// Validates axes, nonnegativity and total mass; zero entries are dropped.
  FiniteDistribution(std::vector<Axis> axes, MassMap mass) : axes_(std::move(axes)) {
    init_axes();
    Rational total;
    for (auto& [index, m] : mass) {
      if (index >= atom_count_) throw Error(ErrorKind::UnknownAtom, "atom index out of range");
      if (m.sign() < 0) throw Error(ErrorKind::NegativeMass, "negative mass " + m.str());
      total += m;
      if (!m.is_zero()) mass_.emplace(index, std::move(m));
    }
    if (total != Rational(1)) throw Error(ErrorKind::SumNotOne, "masses sum to " + total.str() + ", not 1");
  }

  const std::vector<Axis>& axes() const noexcept { return axes_; }
  std::size_t rank() const noexcept { return axes_.size(); }
  std::uint64_t atom_count() const noexcept { return atom_count_; }
  const MassMap& support() const noexcept { return mass_; }

  std::optional<std::size_t> axis_index(std::string_view id) const {
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      if (axes_[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::uint64_t encode(std::span<const std::size_t> atom) const {
    if (atom.size() != axes_.size()) throw Error(ErrorKind::UnknownAtom, "atom arity mismatch");
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < atom.size(); ++i) {
      if (atom[i] >= axes_[i].values.size()) throw Error(ErrorKind::UnknownAtom, "value index out of range");
      index = index * axes_[i].values.size() + atom[i];
    }
    return index;
  }

  Atom decode(std::uint64_t index) const {
    Atom atom(axes_.size());
    for (std::size_t i = axes_.size(); i-- > 0;) {
      const std::size_t radix = axes_[i].values.size();
      atom[i] = static_cast<std::size_t>(index % radix);
      index /= radix;
    }
    return atom;
  }

  Rational mass(std::uint64_t index) const {
    const auto it = mass_.find(index);
    return it == mass_.end() ? Rational() : it->second;
  }

  Rational mass(std::span<const std::size_t> atom) const { return mass(encode(atom)); }

  Rational mass_of(const std::vector<std::string>& labels) const {
    if (labels.size() != axes_.size()) throw Error(ErrorKind::UnknownAtom, "atom arity mismatch");
    Atom atom(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto v = axes_[i].values.index_of(labels[i]);
      if (!v) throw Error(ErrorKind::UnknownAtom, "label '" + labels[i] + "' not in axis '" + axes_[i].id + "'");
      atom[i] = *v;
    }
    return mass(atom);
  }

  std::vector<std::string> labels(std::uint64_t index) const {
    const Atom atom = decode(index);
    std::vector<std::string> out;
    out.reserve(atom.size());
    for (std::size_t i = 0; i < atom.size(); ++i) out.push_back(axes_[i].values.label(atom[i]));
    return out;
  }

  /// Same mass on identical axes (zeros dropped, so this is map equality).
  friend bool operator==(const FiniteDistribution& a, const FiniteDistribution& b) {
    return a.axes_ == b.axes_ && a.mass_ == b.mass_;
  }

 private:
  void init_axes() {
    std::set<std::string> seen;
    atom_count_ = 1;
    for (const auto& axis : axes_) {
      if (axis.id.empty()) throw Error(ErrorKind::InvalidArgument, "empty axis id");
      if (!seen.insert(axis.id).second) throw Error(ErrorKind::AxisCollision, "axis '" + axis.id + "' repeated");
      if (axis.values.size() == 0) throw Error(ErrorKind::InvalidArgument, "axis '" + axis.id + "' has no values");
      if (atom_count_ > (std::uint64_t{1} << 62) / axis.values.size()) {
        throw Error(ErrorKind::AtomSpaceTooLarge, "atom space exceeds 2^62 atoms");
      }
      atom_count_ *= axis.values.size();
    }
  }

  std::vector<Axis> axes_;
  std::uint64_t atom_count_ = 1;
  MassMap mass_;
};

/// Builds a distribution from label-addressed masses. Omitted atoms get 0.
inline FiniteDistribution make_distribution(std::vector<Axis> axes,
                                            const std::vector<std::pair<std::vector<std::string>, Rational>>& entries) {
  std::vector<std::size_t> radix;
  for (const auto& a : axes) radix.push_back(a.values.size());
  FiniteDistribution::MassMap mass;
  for (const auto& [labels, m] : entries) {
    if (labels.size() != axes.size()) {
      throw Error(ErrorKind::UnknownAtom, "atom has " + std::to_string(labels.size()) + " labels, expected " +
                                              std::to_string(axes.size()));
    }
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto v = axes[i].values.index_of(labels[i]);
      if (!v) throw Error(ErrorKind::UnknownAtom, "label '" + labels[i] + "' not in axis '" + axes[i].id + "'");
      index = index * radix[i] + *v;
    }
    if (!mass.emplace(index, m).second) throw Error(ErrorKind::DuplicateAtom, "atom listed twice");
  }
  return FiniteDistribution(std::move(axes), std::move(mass));
}

/// Marginal onto `keep`, in the order given.
inline FiniteDistribution marginalize(const FiniteDistribution& d, const std::vector<std::string>& keep) {
  if (keep.empty()) throw Error(ErrorKind::InvalidArgument, "marginalize needs at least one axis");
  std::vector<std::size_t> pick;
  std::vector<Axis> axes;
  for (const auto& id : keep) {
    const auto i = d.axis_index(id);
    if (!i) throw Error(ErrorKind::UnknownAxis, "no axis '" + id + "'");
    pick.push_back(*i);
    axes.push_back(d.axes()[*i]);
  }
  FiniteDistribution::MassMap mass;
  for (const auto& [index, m] : d.support()) {
    const Atom atom = d.decode(index);
    std::uint64_t reduced = 0;
    for (const std::size_t i : pick) reduced = reduced * d.axes()[i].values.size() + atom[i];
    mass[reduced] += m;
  }
  return FiniteDistribution(std::move(axes), std::move(mass));
}

/// Independent joint of distributions with disjoint axes.
inline FiniteDistribution product(const std::vector<FiniteDistribution>& ds) {
  if (ds.empty()) throw Error(ErrorKind::InvalidArgument, "product of no distributions");
  std::vector<Axis> axes;
  std::set<std::string> ids;
  for (const auto& d : ds) {
    for (const auto& a : d.axes()) {
      if (!ids.insert(a.id).second) throw Error(ErrorKind::AxisCollision, "axis '" + a.id + "' appears twice");
      axes.push_back(a);
    }
  }
  FiniteDistribution::MassMap mass{{0, Rational(1)}};
  for (const auto& d : ds) {
    FiniteDistribution::MassMap next;
    for (const auto& [prefix, pm] : mass) {
      for (const auto& [index, m] : d.support()) next.emplace(prefix * d.atom_count() + index, pm * m);
    }
    mass = std::move(next);
  }
  return FiniteDistribution(std::move(axes), std::move(mass));
}

// ---------------------------------------------------------------------------
// Systems

/// One value index per input.
using Treatment = std::vector<std::size_t>;

/// Inputs, outputs, direct influences, allowable treatments and the joint
/// law of all outputs under each treatment.
struct SystemSpec {
  std::vector<ValueSet> inputs;
  /// Output ids with their codomains.
  std::vector<Axis> outputs;
  /// (output index, input index): the output is directly influenced by the input.
  std::set<std::pair<std::size_t, std::size_t>> influences;
  std::vector<Treatment> treatments;
  std::map<Treatment, FiniteDistribution> per_treatment;

  const FiniteDistribution& joint(const Treatment& t) const {
    const auto it = per_treatment.find(t);
    if (it == per_treatment.end()) throw Error(ErrorKind::ValidationError, "treatment has no distribution");
    return it->second;
  }

  std::vector<std::string> output_ids() const {
    std::vector<std::string> ids;
    for (const auto& o : outputs) ids.push_back(o.id);
    return ids;
  }

  std::set<std::size_t> influencers(std::size_t output) const {
    std::set<std::size_t> ks;
    for (const auto& [l, k] : influences) {
      if (l == output) ks.insert(k);
    }
    return ks;
  }
};

/// `(x1,x2,...)` with labels in input order.
inline std::string treatment_label(const SystemSpec& s, const Treatment& t) {
  std::string out = "(";
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k) out += ",";
    out += k < s.inputs.size() && t[k] < s.inputs[k].size() ? s.inputs[k].label(t[k]) : "?";
  }
  return out + ")";
}

inline Treatment restrict_treatment(const Treatment& t, std::span<const std::size_t> inputs) {
  Treatment r;
  r.reserve(inputs.size());
  for (const std::size_t k : inputs) r.push_back(t.at(k));
  return r;
}

enum class IssueKind {
  EmptyTreatmentSet,
  TreatmentArity,
  TreatmentOutOfRange,
  DuplicateTreatment,
  MissingDistribution,
  ExtraDistribution,
  DistributionAxesMismatch,
  DanglingReference,
  DuplicateName,
};

constexpr std::string_view to_string(IssueKind kind) noexcept {
  switch (kind) {
    case IssueKind::EmptyTreatmentSet: return "EmptyTreatmentSet";
    case IssueKind::TreatmentArity: return "TreatmentArity";
    case IssueKind::TreatmentOutOfRange: return "TreatmentOutOfRange";
    case IssueKind::DuplicateTreatment: return "DuplicateTreatment";
    case IssueKind::MissingDistribution: return "MissingDistribution";
    case IssueKind::ExtraDistribution: return "ExtraDistribution";
    case IssueKind::DistributionAxesMismatch: return "DistributionAxesMismatch";
    case IssueKind::DanglingReference: return "DanglingReference";
    case IssueKind::DuplicateName: return "DuplicateName";
  }
  return "Unknown";
}

struct ValidationIssue {
  IssueKind kind;
  std::string message;
};

/// Every structural violation in `s`; empty means valid.
inline std::vector<ValidationIssue> validate_system(const SystemSpec& s) {
  std::vector<ValidationIssue> issues;
  const auto add = [&](IssueKind k, std::string m) { issues.push_back({k, std::move(m)}); };

  std::set<std::string> names;
  for (const auto& in : s.inputs) {
    if (!names.insert(in.name()).second) add(IssueKind::DuplicateName, "input name '" + in.name() + "' repeated");
  }
  for (const auto& out : s.outputs) {
    if (!names.insert(out.id).second) add(IssueKind::DuplicateName, "output name '" + out.id + "' repeated");
  }
  for (const auto& [l, k] : s.influences) {
    if (l >= s.outputs.size()) add(IssueKind::DanglingReference, "influence names undeclared output #" + std::to_string(l));
    if (k >= s.inputs.size()) add(IssueKind::DanglingReference, "influence names undeclared input #" + std::to_string(k));
  }
  if (s.treatments.empty()) add(IssueKind::EmptyTreatmentSet, "no allowable treatments");

  std::set<Treatment> seen;
  for (const auto& t : s.treatments) {
    if (t.size() != s.inputs.size()) {
      add(IssueKind::TreatmentArity, "treatment has " + std::to_string(t.size()) + " values for " +
                                         std::to_string(s.inputs.size()) + " inputs");
      continue;
    }
    bool in_range = true;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] >= s.inputs[k].size()) {
        add(IssueKind::TreatmentOutOfRange, "treatment value #" + std::to_string(t[k]) + " outside input '" +
                                                s.inputs[k].name() + "'");
        in_range = false;
      }
    }
    if (!seen.insert(t).second) add(IssueKind::DuplicateTreatment, "treatment " + treatment_label(s, t) + " repeated");
    if (!in_range) continue;
    const auto it = s.per_treatment.find(t);
    if (it == s.per_treatment.end()) {
      add(IssueKind::MissingDistribution, "treatment " + treatment_label(s, t) + " has no distribution");
    } else if (it->second.axes() != s.outputs) {
      add(IssueKind::DistributionAxesMismatch,
          "distribution at " + treatment_label(s, t) + " is not over the declared outputs");
    }
  }
  for (const auto& [t, d] : s.per_treatment) {
    if (!seen.contains(t)) add(IssueKind::ExtraDistribution, "distribution given for a non-allowable treatment");
  }
  return issues;
}

inline void require_valid(const SystemSpec& s) {
  const auto issues = validate_system(s);
  if (!issues.empty()) {
    throw Error(ErrorKind::ValidationError, std::string(to_string(issues.front().kind)) + ": " + issues.front().message);
  }
}

/// Sorts treatments into canonical (lexicographic value-index) order.
inline void canonicalize_treatments(SystemSpec& s) { std::sort(s.treatments.begin(), s.treatments.end()); }

}  // namespace ctx

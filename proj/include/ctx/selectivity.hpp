#pragma once

// Marginal selectivity diagnostics and the rewrite of an arbitrary
// direct-influence relation into bijective form.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/error.hpp"

namespace ctx {

struct SelectivityViolation {
  /// Output subset, ascending.
  std::vector<std::size_t> outputs;
  /// Exactly the inputs that directly influence some output in `outputs`.
  std::vector<std::size_t> inputs;
  Treatment first;
  Treatment second;
  FiniteDistribution first_marginal;
  FiniteDistribution second_marginal;
};

struct SelectivityOptions {
  /// Largest number of outputs for which all subsets are enumerated.
  std::size_t max_outputs = 16;
};

/// Inputs influencing any output in `outputs`, ascending.
inline std::vector<std::size_t> influencing_inputs(const SystemSpec& s, const std::vector<std::size_t>& outputs) {
  std::set<std::size_t> ks;
  for (const auto& [l, k] : s.influences) {
    if (std::find(outputs.begin(), outputs.end(), l) != outputs.end()) ks.insert(k);
  }
  return {ks.begin(), ks.end()};
}

/// For every nonempty output subset J with its minimal closed input set I,
/// compares the J-marginals of all pairs of allowable treatments agreeing on
/// I. Violations come back ordered by |J|, then J, then the treatment pair.
inline std::vector<SelectivityViolation> check_marginal_selectivity(const SystemSpec& s,
                                                                    const SelectivityOptions& opts = {}) {
  require_valid(s);
  const std::size_t L = s.outputs.size();
  if (L > opts.max_outputs || L >= 63) {
    throw Error(ErrorKind::CombinatorialBudgetExceeded,
                std::to_string(L) + " outputs exceed the subset cap of " + std::to_string(opts.max_outputs));
  }

  std::vector<std::vector<std::size_t>> subsets;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << L); ++mask) {
    std::vector<std::size_t> J;
    for (std::size_t l = 0; l < L; ++l) {
      if (mask >> l & 1U) J.push_back(l);
    }
    subsets.push_back(std::move(J));
  }
  std::sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });

  std::vector<Treatment> treatments = s.treatments;
  std::sort(treatments.begin(), treatments.end());

  std::vector<SelectivityViolation> out;
  for (const auto& J : subsets) {
    const auto I = influencing_inputs(s, J);
    std::vector<std::string> keep;
    for (const std::size_t l : J) keep.push_back(s.outputs[l].id);

    std::map<Treatment, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < treatments.size(); ++i) classes[restrict_treatment(treatments[i], I)].push_back(i);

    for (const auto& [tau, members] : classes) {
      if (members.size() < 2) continue;
      std::vector<FiniteDistribution> marginals;
      for (const std::size_t i : members) marginals.push_back(marginalize(s.joint(treatments[i]), keep));
      for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          if (marginals[a] == marginals[b]) continue;
          out.push_back({J, I, treatments[members[a]], treatments[members[b]], marginals[a], marginals[b]});
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bijective rewrite

struct InputOrigin {
  /// Original inputs whose product forms the new input; empty for the dummy.
  std::vector<std::size_t> factors;
  bool is_dummy() const { return factors.empty(); }
};

struct NormalizedSystem {
  SystemSpec system;
  /// Indexed like the new inputs (one per output).
  std::vector<InputOrigin> origin;
  /// Original treatment -> new treatment.
  std::map<Treatment, Treatment> treatment_map;
};

inline std::string product_label(const std::vector<std::string>& parts) {
  if (parts.size() == 1) return parts.front();
  std::string out = "(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  return out + ")";
}

/// Each output gets its own input: the ordered product of the inputs that
/// directly influence it, or the one-point dummy set when none does.
/// Distributions carry over unchanged.
inline NormalizedSystem bijectivize(const SystemSpec& s) {
  require_valid(s);
  NormalizedSystem out;
  out.system.outputs = s.outputs;

  for (std::size_t l = 0; l < s.outputs.size(); ++l) {
    const auto ks = s.influencers(l);
    InputOrigin origin{{ks.begin(), ks.end()}};
    const std::string name = "beta_" + s.outputs[l].id;
    if (origin.is_dummy()) {
      out.system.inputs.emplace_back(name, std::vector<std::string>{std::string(kDummyLabel)});
    } else {
      // Full product in mixed-radix order, first factor most significant.
      std::vector<std::string> labels;
      std::vector<std::size_t> idx(origin.factors.size(), 0);
      for (;;) {
        std::vector<std::string> parts;
        for (std::size_t f = 0; f < idx.size(); ++f) parts.push_back(s.inputs[origin.factors[f]].label(idx[f]));
        labels.push_back(product_label(parts));
        std::size_t f = idx.size();
        while (f-- > 0) {
          if (++idx[f] < s.inputs[origin.factors[f]].size()) break;
          idx[f] = 0;
        }
        if (f == static_cast<std::size_t>(-1)) break;
      }
      out.system.inputs.emplace_back(name, std::move(labels));
    }
    out.system.influences.insert({l, l});
    out.origin.push_back(std::move(origin));
  }

  for (const auto& t : s.treatments) {
    Treatment nt;
    for (const auto& origin : out.origin) {
      std::size_t v = 0;
      for (const std::size_t k : origin.factors) v = v * s.inputs[k].size() + t[k];
      nt.push_back(v);
    }
    const auto [clash, fresh] = out.system.per_treatment.try_emplace(nt, s.joint(t));
    if (!fresh) {
      Treatment other;
      for (const auto& [from, to] : out.treatment_map) {
        if (to == nt) other = from;
      }
      throw Error(ErrorKind::InvalidArgument, "treatments " + treatment_label(s, other) + " and " + treatment_label(s, t) +
                                                  " differ only in inputs that influence no output");
    }
    out.treatment_map.emplace(t, nt);
    out.system.treatments.push_back(nt);
  }
  canonicalize_treatments(out.system);
  return out;
}

/// Output -> input pairing when every output has exactly one influencing input
/// and no input is shared; nullopt otherwise.
inline std::optional<std::vector<std::size_t>> bijective_pairing(const SystemSpec& s) {
  if (s.inputs.size() != s.outputs.size()) return std::nullopt;
  std::vector<std::size_t> input_of(s.outputs.size());
  std::set<std::size_t> used;
  for (std::size_t l = 0; l < s.outputs.size(); ++l) {
    const auto ks = s.influencers(l);
    if (ks.size() != 1 || !used.insert(*ks.begin()).second) return std::nullopt;
    input_of[l] = *ks.begin();
  }
  return input_of;
}

inline bool is_bijective(const SystemSpec& s) { return bijective_pairing(s).has_value(); }

}  // namespace ctx

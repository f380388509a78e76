#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctx/ctx.hpp"

#define EXPECT_CTX_ERROR(stmt, expected_kind)                                        \
  do {                                                                               \
    try {                                                                            \
      stmt;                                                                          \
      ADD_FAILURE() << "expected ctx::Error " << ctx::to_string(expected_kind);      \
    } catch (const ctx::Error& e) {                                                  \
      EXPECT_EQ(e.kind(), expected_kind) << e.what();                                \
    }                                                                                \
  } while (0)

namespace testing_support {

using ctx::Rational;

inline Rational R(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

inline ctx::ValueSet pm(const std::string& name = "pm") { return ctx::ValueSet(name, {"-1", "+1"}); }

inline ctx::Axis axis(const std::string& id, std::vector<std::string> labels) {
  return {id, ctx::ValueSet(id, std::move(labels))};
}

/// Random distribution over `axes` with small integer weights; roughly a
/// third of the atoms get zero mass.
inline ctx::FiniteDistribution random_distribution(ctx::Rng& rng, const std::vector<ctx::Axis>& axes) {
  std::uint64_t atoms = 1;
  for (const auto& a : axes) atoms *= a.values.size();
  std::vector<std::int64_t> w(atoms);
  std::int64_t total = 0;
  while (total == 0) {
    total = 0;
    for (auto& x : w) {
      x = ctx::uniform_below(rng, 3) == 0 ? 0 : static_cast<std::int64_t>(ctx::uniform_below(rng, 6));
      total += x;
    }
  }
  ctx::FiniteDistribution::MassMap mass;
  for (std::uint64_t i = 0; i < atoms; ++i) {
    if (w[i]) mass.emplace(i, Rational(w[i], total));
  }
  return ctx::FiniteDistribution(axes, std::move(mass));
}

/// Two-output +-1 system with uniform single marginals and Pr[+1,+1] = q_t
/// at each allowable treatment; inputs have `values` values each.
inline ctx::SystemSpec uniform_pair_system(const std::vector<ctx::Treatment>& treatments,
                                           const std::vector<Rational>& q, std::size_t values = 2) {
  ctx::SystemSpec s;
  std::vector<std::string> labels;
  for (std::size_t v = 1; v <= values; ++v) labels.push_back(std::to_string(v));
  s.inputs = {ctx::ValueSet("a1", labels), ctx::ValueSet("a2", labels)};
  s.outputs = {{"A1", pm()}, {"A2", pm()}};
  s.influences = {{0, 0}, {1, 1}};
  for (std::size_t i = 0; i < treatments.size(); ++i) {
    s.treatments.push_back(treatments[i]);
    s.per_treatment.emplace(treatments[i], ctx::epr::spin_pair("A1", "A2", q[i]));
  }
  ctx::canonicalize_treatments(s);
  return s;
}

/// Bijective system whose joints are the marginals of one random coupling
/// indexed by (output, input value): always marginally selective and always
/// reduced-coupling feasible.
inline ctx::SystemSpec hidden_variable_system(ctx::Rng& rng, std::size_t inputs,
                                              const std::vector<ctx::Treatment>& treatments) {
  ctx::SystemSpec s;
  for (std::size_t k = 0; k < inputs; ++k) {
    s.inputs.emplace_back("a" + std::to_string(k + 1), std::vector<std::string>{"1", "2"});
    s.outputs.push_back({"A" + std::to_string(k + 1), pm()});
    s.influences.insert({k, k});
  }
  std::vector<ctx::Axis> hidden_axes;
  for (std::size_t k = 0; k < inputs; ++k) {
    for (const char* x : {"1", "2"}) hidden_axes.push_back({"A" + std::to_string(k + 1) + "|" + x, pm()});
  }
  const auto hidden = random_distribution(rng, hidden_axes);
  for (const auto& t : treatments) {
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < inputs; ++k) ids.push_back("A" + std::to_string(k + 1) + "|" + std::to_string(t[k] + 1));
    const auto m = ctx::marginalize(hidden, ids);
    std::vector<ctx::Axis> axes = m.axes();
    for (std::size_t k = 0; k < inputs; ++k) axes[k].id = "A" + std::to_string(k + 1);
    s.treatments.push_back(t);
    s.per_treatment.emplace(t, ctx::FiniteDistribution(axes, m.support()));
  }
  ctx::canonicalize_treatments(s);
  return s;
}

inline std::vector<ctx::Treatment> full_treatments(std::size_t inputs) {
  std::vector<ctx::Treatment> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << inputs); ++mask) {
    ctx::Treatment t;
    for (std::size_t k = 0; k < inputs; ++k) t.push_back(mask >> (inputs - 1 - k) & 1U);
    out.push_back(t);
  }
  return out;
}

inline std::string data_path(const std::string& relative) { return std::string(CTX_SOURCE_DIR) + "/" + relative; }

}  // namespace testing_support

#pragma once

// Ways of pairing realizations of two stochastically unrelated variables
// (chronological, same-rank, complementary-rank), exact empirical moments,
// and a seeded sampler that draws each treatment from its own stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/coupling_engine.hpp"
#include "ctx/epr_analysis.hpp"
#include "ctx/error.hpp"
#include "ctx/random.hpp"
#include "ctx/rational.hpp"

namespace ctx {

struct SampleStream {
  std::string label;
  std::vector<std::string> values;
};

struct EmpiricalJoint {
  std::vector<std::pair<std::string, std::string>> pairs;
  /// Pair frequencies over the observed values of each side.
  FiniteDistribution mass;
};

namespace detail {

inline std::optional<Rational> try_number(const std::string& s) {
  try {
    return Rational::parse(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::vector<Rational> numeric_values(const SampleStream& s) {
  std::vector<Rational> out;
  out.reserve(s.values.size());
  for (const auto& v : s.values) {
    auto x = try_number(v);
    if (!x) throw Error(ErrorKind::NonNumeric, "stream '" + s.label + "' has non-numeric value '" + v + "'");
    out.push_back(std::move(*x));
  }
  return out;
}

/// Distinct observed values: numeric order when every value is a number,
/// byte order otherwise.
inline ValueSet observed_values(const std::string& name, const std::vector<std::string>& values) {
  std::vector<std::string> distinct = values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::pair<Rational, std::string>> numeric;
  for (const auto& v : distinct) {
    auto x = try_number(v);
    if (!x) return ValueSet(name, distinct);
    numeric.emplace_back(std::move(*x), v);
  }
  std::stable_sort(numeric.begin(), numeric.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> labels;
  for (auto& [x, v] : numeric) labels.push_back(std::move(v));
  return ValueSet(name, std::move(labels));
}

inline EmpiricalJoint make_joint(const SampleStream& a, const SampleStream& b,
                                 std::vector<std::pair<std::string, std::string>> pairs) {
  std::vector<std::string> left;
  std::vector<std::string> right;
  for (const auto& [x, y] : pairs) {
    left.push_back(x);
    right.push_back(y);
  }
  const std::string a_id = a.label.empty() ? "a" : a.label;
  std::string b_id = b.label.empty() ? "b" : b.label;
  if (b_id == a_id) b_id += "'";
  std::vector<Axis> axes{{a_id, observed_values(a_id, left)}, {b_id, observed_values(b_id, right)}};
  FiniteDistribution::MassMap mass;
  const auto n = static_cast<std::int64_t>(pairs.size());
  for (const auto& [x, y] : pairs) {
    const std::uint64_t index = *axes[0].values.index_of(x) * axes[1].values.size() + *axes[1].values.index_of(y);
    mass[index] += Rational(1, n);
  }
  return {std::move(pairs), FiniteDistribution(std::move(axes), std::move(mass))};
}

inline void require_nonempty(const SampleStream& a, const SampleStream& b) {
  if (a.values.empty() || b.values.empty()) throw Error(ErrorKind::EmptyStream, "coupling needs nonempty streams");
}

/// Positions of `s` sorted by value; ties keep stream order.
inline std::vector<std::size_t> rank_order(const std::vector<Rational>& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return s[i] < s[j]; });
  return idx;
}

inline EmpiricalJoint rank_coupling(const SampleStream& a, const SampleStream& b, bool reverse) {
  require_nonempty(a, b);
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorKind::LengthMismatch, "rank couplings need streams of equal length");
  }
  const auto ra = rank_order(numeric_values(a));
  const auto rb = rank_order(numeric_values(b));
  const std::size_t n = ra.size();
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(a.values[ra[i]], b.values[rb[reverse ? n - 1 - i : i]]);
  return make_joint(a, b, std::move(pairs));
}

}  // namespace detail

/// n-th realization of `a` with the n-th of `b`, truncated to the shorter stream.
inline EmpiricalJoint chronological_coupling(const SampleStream& a, const SampleStream& b) {
  detail::require_nonempty(a, b);
  const std::size_t n = std::min(a.values.size(), b.values.size());
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(a.values[i], b.values[i]);
  return detail::make_joint(a, b, std::move(pairs));
}

/// i-th order statistic of `a` with the i-th of `b`.
inline EmpiricalJoint comonotone_coupling(const SampleStream& a, const SampleStream& b) {
  return detail::rank_coupling(a, b, false);
}

/// i-th order statistic of `a` with the (n+1-i)-th of `b`.
inline EmpiricalJoint antitone_coupling(const SampleStream& a, const SampleStream& b) {
  return detail::rank_coupling(a, b, true);
}

/// Exact empirical second moments of a numeric pairing.
struct EmpiricalMoments {
  Rational covariance;
  Rational variance_a;
  Rational variance_b;

  /// sign(r) * r^2, which orders pairings exactly as r does; nullopt when a
  /// side is constant.
  std::optional<Rational> signed_r_squared() const {
    if (variance_a.is_zero() || variance_b.is_zero()) return std::nullopt;
    const Rational r2 = square(covariance) / (variance_a * variance_b);
    return covariance.sign() < 0 ? -r2 : r2;
  }

  std::optional<double> correlation() const {
    if (variance_a.is_zero() || variance_b.is_zero()) return std::nullopt;
    const double r2 = (square(covariance) / (variance_a * variance_b)).to_double();
    return covariance.sign() < 0 ? -std::sqrt(r2) : std::sqrt(r2);
  }
};

inline EmpiricalMoments empirical_moments(const std::vector<std::pair<Rational, Rational>>& pairs) {
  if (pairs.empty()) throw Error(ErrorKind::EmptyStream, "no pairs");
  const Rational n(static_cast<std::int64_t>(pairs.size()));
  Rational sx, sy, sxx, syy, sxy;
  for (const auto& [x, y] : pairs) {
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const Rational mx = sx / n;
  const Rational my = sy / n;
  return {sxy / n - mx * my, sxx / n - mx * mx, syy / n - my * my};
}

inline EmpiricalMoments empirical_moments(const EmpiricalJoint& j) {
  std::vector<std::pair<Rational, Rational>> numeric;
  for (const auto& [x, y] : j.pairs) {
    auto a = detail::try_number(x);
    auto b = detail::try_number(y);
    if (!a || !b) throw Error(ErrorKind::NonNumeric, "pair (" + x + ", " + y + ") is not numeric");
    numeric.emplace_back(std::move(*a), std::move(*b));
  }
  return empirical_moments(numeric);
}

// ---------------------------------------------------------------------------
// Stream files: one observation per line; blank lines and '#' comments skipped.

inline SampleStream read_stream(const std::string& path, std::string label = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open stream file '" + path + "'");
  SampleStream s{label.empty() ? path : std::move(label), {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string token = line.substr(first, last - first + 1);
    if (token.find_first_of(" \t") != std::string::npos) {
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(line_no) + ": one observation per line expected");
    }
    const bool decimal = token.find('.') != std::string::npos &&
                         token.find_first_not_of("+-0123456789.") == std::string::npos;
    if (decimal) {
      throw Error(ErrorKind::ParseError, path + ":" + std::to_string(line_no) +
                                             ": decimal literal '" + token + "'; write an exact fraction such as 1/4");
    }
    s.values.push_back(std::move(token));
  }
  return s;
}

inline void write_stream(const std::string& path, const SampleStream& s) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write stream file '" + path + "'");
  for (const auto& v : s.values) out << v << "\n";
}

// ---------------------------------------------------------------------------
// Sampling a system

struct SystemSample {
  /// Per treatment, one stream per output (output order).
  std::map<Treatment, std::vector<SampleStream>> streams;
  /// Per treatment, the empirical joint of all outputs.
  std::map<Treatment, FiniteDistribution> frequencies;
  /// Relative frequency of (+1, +1) per treatment, for 2x2 +-1 systems.
  std::optional<epr::PVector> p_hat;
};

/// Two inputs valued {1, 2}, two outputs valued {-1, +1}, output k
/// influenced by input k only, all four treatments allowed.
inline bool is_epr_shaped(const SystemSpec& s) {
  if (s.inputs.size() != 2 || s.outputs.size() != 2 || s.treatments.size() != 4) return false;
  for (const auto& in : s.inputs) {
    if (in.labels() != std::vector<std::string>{"1", "2"}) return false;
  }
  for (const auto& out : s.outputs) {
    if (out.values.labels() != std::vector<std::string>{"-1", "+1"}) return false;
  }
  return s.influences == std::set<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}};
}

/// `n` i.i.d. draws per treatment. Treatment number r (canonical order) uses
/// its own generator seeded from (seed, r); nothing is shared across treatments.
inline SystemSample sample_system(const SystemSpec& s, std::size_t n, std::uint64_t seed) {
  require_valid(s);
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample size must be at least 1");
  SystemSample out;
  const auto treatments = sorted_treatments(s);
  for (std::size_t r = 0; r < treatments.size(); ++r) {
    const auto& t = treatments[r];
    const FiniteDistribution& joint = s.joint(t);

    mpz_class common = 1;
    for (const auto& [index, m] : joint.support()) mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), m.to_mpq().get_den_mpz_t());
    if (mpz_sizeinbase(common.get_mpz_t(), 2) > 62) {
      throw Error(ErrorKind::InvalidArgument, "probability denominators too large to sample exactly");
    }
    const std::uint64_t scale = mpz_get_ui(common.get_mpz_t());
    std::vector<std::pair<std::uint64_t, std::uint64_t>> cumulative;  // (upper bound, atom)
    std::uint64_t acc = 0;
    for (const auto& [index, m] : joint.support()) {
      const mpq_class w = m.to_mpq() * mpq_class(common);
      acc += mpz_get_ui(w.get_num_mpz_t());
      cumulative.emplace_back(acc, index);
    }

    Rng rng = make_rng(seed, r);
    std::vector<SampleStream> streams;
    for (std::size_t l = 0; l < s.outputs.size(); ++l) streams.push_back({coupling_axis_id(s, l, t), {}});
    std::map<std::uint64_t, std::int64_t> counts;
    for (std::size_t draw = 0; draw < n; ++draw) {
      const std::uint64_t u = uniform_below(rng, scale);
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u,
                                       [](std::uint64_t x, const auto& c) { return x < c.first; });
      const auto labels = joint.labels(it->second);
      for (std::size_t l = 0; l < labels.size(); ++l) streams[l].values.push_back(labels[l]);
      ++counts[it->second];
    }
    FiniteDistribution::MassMap freq;
    for (const auto& [index, c] : counts) freq.emplace(index, Rational(c, static_cast<std::int64_t>(n)));
    out.streams.emplace(t, std::move(streams));
    out.frequencies.emplace(t, FiniteDistribution(joint.axes(), std::move(freq)));
  }
  if (is_epr_shaped(s)) {
    epr::PVector p;
    for (std::size_t r = 0; r < 4; ++r) {
      p.v[2 * treatments[r][0] + treatments[r][1]] = out.frequencies.at(treatments[r]).mass_of({"+1", "+1"});
    }
    out.p_hat = p;
  }
  return out;
}

}  // namespace ctx

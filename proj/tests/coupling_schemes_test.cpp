#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace ctx;
using namespace testing_support;

namespace {

SampleStream stream(std::string label, std::vector<std::string> values) { return {std::move(label), std::move(values)}; }

std::vector<std::pair<std::string, std::string>> pairs(std::initializer_list<std::pair<const char*, const char*>> xs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [a, b] : xs) out.emplace_back(a, b);
  return out;
}

/// Random rational stream with small numerators and denominators, ties likely.
SampleStream random_stream(Rng& rng, std::string label, std::size_t n) {
  SampleStream s{std::move(label), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto num = static_cast<std::int64_t>(uniform_below(rng, 9)) - 4;
    const auto den = static_cast<std::int64_t>(1 + uniform_below(rng, 3));
    s.values.push_back(Rational(num, den).str());
  }
  return s;
}

Rational signed_r2(const std::vector<Rational>& a, const std::vector<Rational>& b, const std::vector<std::size_t>& perm) {
  std::vector<std::pair<Rational, Rational>> ps;
  for (std::size_t i = 0; i < a.size(); ++i) ps.emplace_back(a[i], b[perm[i]]);
  return *empirical_moments(ps).signed_r_squared();
}

std::vector<Rational> numbers(const SampleStream& s) {
  std::vector<Rational> out;
  for (const auto& v : s.values) out.push_back(Rational::parse(v));
  return out;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ctx_schemes_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Chronological, Examples) {
  EXPECT_EQ(chronological_coupling(stream("a", {"1", "2", "3"}), stream("b", {"5", "6", "7"})).pairs,
            pairs({{"1", "5"}, {"2", "6"}, {"3", "7"}}));
  EXPECT_EQ(chronological_coupling(stream("a", {"1", "2", "3"}), stream("b", {"5"})).pairs, pairs({{"1", "5"}}));
  const auto j = chronological_coupling(stream("a", {"4", "4"}), stream("b", {"4", "4"}));
  ASSERT_EQ(j.mass.support().size(), 1U);
  EXPECT_EQ(j.mass.mass_of({"4", "4"}), R(1));
}

TEST(Chronological, SymbolicValuesAndSameLabels) {
  const auto j = chronological_coupling(stream("x", {"heads", "tails", "heads"}), stream("x", {"up", "up", "down"}));
  EXPECT_EQ(j.mass.axes()[0].id, "x");
  EXPECT_EQ(j.mass.axes()[1].id, "x'");
  EXPECT_EQ(j.mass.mass_of({"heads", "up"}), R(1, 3));
  EXPECT_EQ(j.mass.mass_of({"heads", "down"}), R(1, 3));
  EXPECT_EQ(j.mass.mass_of({"tails", "up"}), R(1, 3));
}

TEST(RankCouplings, Examples) {
  EXPECT_EQ(comonotone_coupling(stream("a", {"3", "1", "2"}), stream("b", {"9", "7", "8"})).pairs,
            pairs({{"1", "7"}, {"2", "8"}, {"3", "9"}}));
  const auto same = comonotone_coupling(stream("a", {"2", "-1/2", "3"}), stream("b", {"2", "-1/2", "3"}));
  EXPECT_EQ(same.pairs, pairs({{"-1/2", "-1/2"}, {"2", "2"}, {"3", "3"}}));
  EXPECT_EQ(antitone_coupling(stream("a", {"1", "2"}), stream("b", {"4", "5"})).pairs, pairs({{"1", "5"}, {"2", "4"}}));
  const auto anti = antitone_coupling(stream("a", {"1", "2", "3"}), stream("b", {"1", "2", "3"}));
  EXPECT_EQ(*empirical_moments(anti).signed_r_squared(), R(-1));
  EXPECT_DOUBLE_EQ(*empirical_moments(anti).correlation(), -1.0);
  EXPECT_EQ(*empirical_moments(same).signed_r_squared(), R(1));
}

TEST(RankCouplings, TiesBreakByStreamPosition) {
  const auto j = comonotone_coupling(stream("a", {"2", "1", "2"}), stream("b", {"30", "10", "20"}));
  EXPECT_EQ(j.pairs, pairs({{"1", "10"}, {"2", "20"}, {"2", "30"}}));
  const auto k = comonotone_coupling(stream("a", {"1", "1"}), stream("b", {"5", "6"}));
  EXPECT_EQ(k.pairs, pairs({{"1", "5"}, {"1", "6"}}));
  EXPECT_FALSE(empirical_moments(k).signed_r_squared().has_value());
}

TEST(Couplings, Errors) {
  const auto empty = stream("e", {});
  const auto one = stream("a", {"1"});
  EXPECT_CTX_ERROR(chronological_coupling(empty, one), ErrorKind::EmptyStream);
  EXPECT_CTX_ERROR(comonotone_coupling(one, empty), ErrorKind::EmptyStream);
  EXPECT_CTX_ERROR(antitone_coupling(empty, empty), ErrorKind::EmptyStream);
  EXPECT_CTX_ERROR(comonotone_coupling(stream("a", {"1", "x"}), stream("b", {"1", "2"})), ErrorKind::NonNumeric);
  EXPECT_CTX_ERROR(antitone_coupling(stream("a", {"1", "2"}), stream("b", {"1"})), ErrorKind::LengthMismatch);
  EXPECT_CTX_ERROR(empirical_moments(chronological_coupling(stream("a", {"u"}), one)), ErrorKind::NonNumeric);
}

// Comonotone and antitone pairings bound the correlation of every bijective
// pairing, checked against all n! permutations.
TEST(RankCouplings, ExtremalAgainstAllPermutations) {
  std::size_t checked = 0;
  for (std::uint64_t trial = 0; trial < 150; ++trial) {
    Rng rng = make_rng(61, trial);
    const std::size_t n = 2 + uniform_below(rng, 5);
    const auto a = random_stream(rng, "a", n);
    const auto b = random_stream(rng, "b", n);
    const auto co = empirical_moments(comonotone_coupling(a, b)).signed_r_squared();
    const auto anti = empirical_moments(antitone_coupling(a, b)).signed_r_squared();
    if (!co) continue;
    ++checked;
    const auto xa = numbers(a);
    const auto xb = numbers(b);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rational best = R(-2);
    Rational worst = R(2);
    do {
      const auto r = signed_r2(xa, xb, perm);
      best = std::max(best, r);
      worst = std::min(worst, r);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_EQ(*co, best) << "trial " << trial;
    EXPECT_EQ(*anti, worst) << "trial " << trial;
  }
  EXPECT_GE(checked, 100U);
}

TEST(Couplings, PreserveMarginalsForEqualLengths) {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng = make_rng(62, trial);
    const std::size_t n = 1 + uniform_below(rng, 8);
    const auto a = random_stream(rng, "a", n);
    const auto b = random_stream(rng, "b", n);
    for (const auto& j : {chronological_coupling(a, b), comonotone_coupling(a, b), antitone_coupling(a, b)}) {
      ASSERT_EQ(j.pairs.size(), n);
      Rational total;
      for (const auto& [i, m] : j.mass.support()) total += m;
      EXPECT_EQ(total, R(1));
      const auto left = marginalize(j.mass, {"a"});
      const auto right = marginalize(j.mass, {"b"});
      for (const auto& v : a.values) {
        const auto count = std::count(a.values.begin(), a.values.end(), v);
        EXPECT_EQ(left.mass_of({v}), Rational(count, static_cast<std::int64_t>(n)));
      }
      for (const auto& v : b.values) {
        const auto count = std::count(b.values.begin(), b.values.end(), v);
        EXPECT_EQ(right.mass_of({v}), Rational(count, static_cast<std::int64_t>(n)));
      }
    }
  }
}

// --- stream files -------------------------------------------------------------

TEST(StreamFiles, RoundTrip) {
  const auto path = scratch("round_trip.txt").string();
  const auto s = stream("w", {"1", "-3/4", "7", "2/3"});
  write_stream(path, s);
  const auto back = read_stream(path, "w");
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.label, "w");
  EXPECT_EQ(read_stream(path).label, path);
}

TEST(StreamFiles, CommentsAndErrors) {
  const auto path = scratch("comments.txt").string();
  {
    std::ofstream out(path);
    out << "# weights\n1\n\n  2/3  # second\n";
  }
  EXPECT_EQ(read_stream(path).values, (std::vector<std::string>{"1", "2/3"}));
  {
    std::ofstream out(path);
    out << "1\n0.25\n";
  }
  try {
    read_stream(path);
    FAIL() << "decimal accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find(":2: decimal literal '0.25'; write an exact fraction such as 1/4"),
              std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "1 2\n";
  }
  EXPECT_CTX_ERROR(read_stream(path), ErrorKind::ParseError);
  EXPECT_CTX_ERROR(read_stream(scratch("missing.txt").string()), ErrorKind::ParseError);
}

// --- sample_system ------------------------------------------------------------

TEST(SampleSystem, DeterministicPerSeed) {
  const auto s = epr::epr_system({{R(1, 3), R(1, 5), R(1, 2), R(0)}});
  const auto a = sample_system(s, 50, 9);
  const auto b = sample_system(s, 50, 9);
  const auto c = sample_system(s, 50, 10);
  bool differs = false;
  for (const auto& [t, streams] : a.streams) {
    ASSERT_EQ(streams.size(), 2U);
    EXPECT_EQ(streams[0].values, b.streams.at(t)[0].values);
    EXPECT_EQ(streams[1].values, b.streams.at(t)[1].values);
    EXPECT_EQ(streams[0].values.size(), 50U);
    differs = differs || streams[0].values != c.streams.at(t)[0].values;
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.streams.at({0, 0})[0].label, "A1@(1,1)");
}

TEST(SampleSystem, SingleDrawLandsInSupport) {
  const auto s = epr::epr_system({{R(1, 2), R(1, 2), R(1, 2), R(0)}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = sample_system(s, 1, seed);
    for (const auto& t : s.treatments) {
      const auto& st = r.streams.at(t);
      EXPECT_GT(s.joint(t).mass_of({st[0].values[0], st[1].values[0]}), R(0));
      EXPECT_EQ(r.frequencies.at(t).support().size(), 1U);
    }
  }
  EXPECT_CTX_ERROR(sample_system(s, 0, 1), ErrorKind::InvalidArgument);
}

TEST(SampleSystem, FrequenciesMatchStreams) {
  Rng rng = make_rng(63, 0);
  const auto s = hidden_variable_system(rng, 2, full_treatments(2));
  const auto r = sample_system(s, 300, 5);
  EXPECT_EQ(r.p_hat.has_value(), is_epr_shaped(s));
  for (const auto& [t, streams] : r.streams) {
    Rational total;
    for (const auto& [i, m] : r.frequencies.at(t).support()) {
      EXPECT_GT(s.joint(t).support().count(i), 0U);
      total += m;
    }
    EXPECT_EQ(total, R(1));
    std::int64_t hits = 0;
    for (std::size_t k = 0; k < 300; ++k) {
      hits += streams[0].values[k] == s.outputs[0].values.label(0) && streams[1].values[k] == s.outputs[1].values.label(0);
    }
    EXPECT_EQ(r.frequencies.at(t).mass_of({s.outputs[0].values.label(0), s.outputs[1].values.label(0)}), R(hits, 300));
  }
}

TEST(SampleSystem, ThreeSigmaBandOnUniformSystem) {
  const auto s = epr::epr_system({{R(1, 4), R(1, 4), R(1, 4), R(1, 4)}});
  const std::int64_t n = 100000;
  // |p_hat - 1/4| <= 3 sqrt(p(1-p)/n)  <=>  (p_hat - 1/4)^2 <= 9 (3/16) / n.
  const Rational bound = R(27, 16) / R(n);
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto r = sample_system(s, static_cast<std::size_t>(n), seed);
    ASSERT_TRUE(r.p_hat.has_value());
    for (const auto& x : r.p_hat->v) EXPECT_LE(square(x - R(1, 4)), bound) << "seed " << seed << " p_hat " << x.str();
  }
}

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "support.hpp"

using namespace ctx;
using namespace ctx::epr;
using namespace testing_support;

namespace {

using Dec = boost::multiprecision::cpp_dec_float_50;

PVector P(Rational a, Rational b, Rational c, Rational d) { return {{a, b, c, d}}; }
EpsilonVector E(Rational a, Rational b, Rational c, Rational d) { return {{a, b, c, d}}; }
EpsilonVector E4(Rational a) { return E(a, a, a, a); }

Dec dec(const Rational& r) {
  const auto q = r.to_mpq();
  return Dec(q.get_num().get_str()) / Dec(q.get_den().get_str());
}

const Dec kSqrt2 = boost::multiprecision::sqrt(Dec(2));

/// Brute-force s values straight from the sign-pattern definition.
SPair oracle_s(const EpsilonVector& e) {
  Rational best[2] = {Rational(-100), Rational(-100)};
  for (int a = -1; a <= 1; a += 2) {
    for (int b = -1; b <= 1; b += 2) {
      for (int c = -1; c <= 1; c += 2) {
        for (int d = -1; d <= 1; d += 2) {
          const int signs[4] = {a, b, c, d};
          int plus = 0;
          Rational sum;
          for (int k = 0; k < 4; ++k) {
            plus += signs[k] > 0;
            sum += Rational(signs[k]) * (e.v[static_cast<std::size_t>(k)] - R(1, 4));
          }
          if (sum > best[plus % 2]) best[plus % 2] = sum;
        }
      }
    }
  }
  return {best[0], best[1]};
}

std::vector<Rational> quarter_grid() { return {R(0), R(1, 4), R(1, 2)}; }

}  // namespace

// --- epr_system -------------------------------------------------------------

TEST(EprSystem, IndependentUniform) {
  const auto s = epr_system(P(R(1, 4), R(1, 4), R(1, 4), R(1, 4)));
  EXPECT_EQ(s.inputs.size(), 2U);
  EXPECT_EQ(s.treatments.size(), 4U);
  EXPECT_TRUE(is_bijective(s));
  for (const auto& t : s.treatments) {
    for (const auto& [i, m] : s.joint(t).support()) EXPECT_EQ(m, R(1, 4));
  }
  validate_system(s);
}

TEST(EprSystem, PrBoxAtoms) {
  const auto s = epr_system(P(R(1, 2), R(1, 2), R(1, 2), R(0)));
  for (const auto& t : sorted_treatments(s)) {
    const auto& j = s.joint(t);
    const bool anti = t == Treatment{1, 1};
    EXPECT_EQ(j.mass_of({"+1", "+1"}), anti ? R(0) : R(1, 2));
    EXPECT_EQ(j.mass_of({"-1", "-1"}), anti ? R(0) : R(1, 2));
    EXPECT_EQ(j.mass_of({"+1", "-1"}), anti ? R(1, 2) : R(0));
    EXPECT_EQ(j.mass_of({"-1", "+1"}), anti ? R(1, 2) : R(0));
  }
}

TEST(EprSystem, ForcedAtomFormula) {
  const auto p = P(R(1, 3), R(1, 5), R(0), R(7, 20));
  const auto s = epr_system(p);
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      const auto& joint = s.joint({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)});
      EXPECT_EQ(joint.mass_of({"+1", "+1"}), p.at(i, j));
      EXPECT_EQ(joint.mass_of({"-1", "-1"}), p.at(i, j));
      EXPECT_EQ(joint.mass_of({"+1", "-1"}), R(1, 2) - p.at(i, j));
      EXPECT_EQ(marginalize(joint, {"A1"}).mass_of({"+1"}), R(1, 2));
    }
  }
}

TEST(EprSystem, FrechetViolation) {
  EXPECT_CTX_ERROR(epr_system(P(R(3, 4), R(1, 4), R(1, 4), R(1, 4))), ErrorKind::FrechetViolation);
  EXPECT_CTX_ERROR(epr_system(P(R(1, 4), R(-1, 4), R(1, 4), R(1, 4))), ErrorKind::FrechetViolation);
  EXPECT_CTX_ERROR(s_values(E(R(0), R(0), R(0), R(51, 100))), ErrorKind::FrechetViolation);
  EXPECT_CTX_ERROR(ejds_feasible_epr(P(R(1, 4), R(1, 4), R(1, 4), R(1, 4)), E4(R(1))), ErrorKind::FrechetViolation);
}

// --- inequalities -----------------------------------------------------------

TEST(Inequalities, SymmetricPoint) {
  const auto p = P(R(1, 4), R(1, 4), R(1, 4), R(1, 4));
  const auto b = bell_ch_fine(p);
  EXPECT_TRUE(b.holds);
  for (const auto& x : b.expressions) EXPECT_EQ(x, R(1, 2));
  EXPECT_TRUE(cirelson(p).holds);
}

TEST(Inequalities, PrBox) {
  const auto p = P(R(1, 2), R(1, 2), R(1, 2), R(0));
  const auto b = bell_ch_fine(p);
  EXPECT_FALSE(b.holds);
  EXPECT_EQ(b.expressions[1], R(3, 2));
  EXPECT_FALSE(cirelson(p).holds);
  EXPECT_EQ(square(R(2) * b.expressions[1] - R(1)), R(4));
}

TEST(Inequalities, BoundaryPoint) {
  const auto b = bell_ch_fine(P(R(1, 2), R(0), R(0), R(1, 2)));
  EXPECT_TRUE(b.holds);
  for (const auto& x : b.expressions) EXPECT_TRUE(x == R(0) || x == R(1));
}

TEST(Inequalities, SupraClassicalSubCirelsonPoint) {
  const auto p = P(R(21, 50), R(21, 50), R(21, 50), R(7, 100));
  const auto b = bell_ch_fine(p);
  EXPECT_FALSE(b.holds);
  EXPECT_EQ(*std::max_element(b.expressions.begin(), b.expressions.end()), R(119, 100));
  EXPECT_EQ(square(R(2) * R(119, 100) - R(1)), R(4761, 2500));
  EXPECT_TRUE(cirelson(p).holds);
}

TEST(Inequalities, ExpressionsAgreeWithDirectEvaluation) {
  for (std::uint64_t t = 0; t < 200; ++t) {
    Rng rng = make_rng(51, t);
    const auto p = sample_p(PConstraint::none, rng, 40);
    const auto x = chsh_expressions(p);
    EXPECT_EQ(x[0], p.at(1, 1) + p.at(1, 2) + p.at(2, 2) - p.at(2, 1));
    EXPECT_EQ(x[1], p.at(1, 2) + p.at(1, 1) + p.at(2, 1) - p.at(2, 2));
    EXPECT_EQ(x[2], p.at(2, 1) + p.at(2, 2) + p.at(1, 2) - p.at(1, 1));
    EXPECT_EQ(x[3], p.at(2, 2) + p.at(2, 1) + p.at(1, 1) - p.at(1, 2));
  }
}

TEST(Inequalities, BellImpliesCirelson) {
  std::size_t bell = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    Rng rng = make_rng(52, t);
    const auto p = sample_p(PConstraint::none, rng);
    if (bell_ch_fine(p).holds) {
      ++bell;
      EXPECT_TRUE(cirelson(p).holds);
    }
  }
  for (const auto& v : deterministic_vertices()) EXPECT_TRUE(cirelson(v).holds);
  EXPECT_GT(bell, 100U);
}

// Exact verdicts match 50-digit decimal evaluation of the irrational bounds.
TEST(Inequalities, IrrationalBoundsMatchDecimalEvaluation) {
  const Dec lo = (Dec(1) - kSqrt2) / 2;
  const Dec hi = (Dec(1) + kSqrt2) / 2;
  const Dec s0_bound = (Dec(3) - kSqrt2) / 2;
  std::vector<Rational> probes;
  for (std::int64_t k = -400; k <= 1600; ++k) probes.push_back(R(k, 1000));
  // Tight rational brackets around the bounds.
  for (const auto& [n, d] : std::vector<std::pair<std::int64_t, std::int64_t>>{
           {-207106781, 1000000000}, {-207106782, 1000000000}, {1207106781, 1000000000}, {1207106782, 1000000000},
           {792893218, 1000000000}, {792893219, 1000000000}, {-5741, 27720}, {33461, 27720}, {21979, 27720}}) {
    probes.push_back(R(n, d));
  }
  for (const auto& x : probes) {
    const Dec dx = dec(x);
    EXPECT_EQ(within_cirelson_band(x), dx >= lo && dx <= hi) << x.str();
    if (x.sign() >= 0 && x <= R(1)) {
      EXPECT_EQ(s0_at_most_cirelson_bound(x), dx <= s0_bound) << x.str();
      EXPECT_EQ(s0_at_least_cirelson_bound(x), dx >= s0_bound) << x.str();
    }
  }
  for (std::uint64_t t = 0; t < 500; ++t) {
    Rng rng = make_rng(53, t);
    const auto p = sample_p(PConstraint::none, rng);
    bool decimal = true;
    for (const auto& x : chsh_expressions(p)) decimal = decimal && dec(x) >= lo && dec(x) <= hi;
    EXPECT_EQ(cirelson(p).holds, decimal) << p.str();
  }
}

// --- s values and closed-form predicates -------------------------------------

TEST(SValues, Examples) {
  EXPECT_EQ(s_values(E4(R(0))).s0, R(1));
  const auto centre = s_values(E4(R(1, 4)));
  EXPECT_EQ(centre.s0, R(0));
  EXPECT_EQ(centre.s1, R(0));
  const auto pr = s_values(E(R(1, 2), R(1, 2), R(1, 2), R(0)));
  EXPECT_EQ(pr.s0, R(1, 2));
  EXPECT_EQ(pr.s1, R(1));
  const auto tenths = s_values(E4(R(3, 10)));
  EXPECT_EQ(tenths.s0, R(1, 5));
  EXPECT_EQ(tenths.s1, R(1, 10));
}

TEST(SValues, MatchBruteForceAndInvariants) {
  for (std::uint64_t t = 0; t < 500; ++t) {
    Rng rng = make_rng(54, t);
    const auto e = sample_eps(rng, [](const auto&) { return true; }, 60);
    const auto s = s_values(e);
    const auto o = oracle_s(e);
    EXPECT_EQ(s.s0, o.s0);
    EXPECT_EQ(s.s1, o.s1);
    EXPECT_GE(s.s0, R(0));
    EXPECT_LE(s.s0, R(1));
    EXPECT_GE(s.s1, R(0));
    EXPECT_LE(s.s1, R(1));
    Rational total;
    for (const auto& x : e.v) total += x - R(1, 4);
    EXPECT_GE(std::max(s.s0, s.s1), total.sign() < 0 ? -total : total);
  }
}

TEST(Predicates, Fitting) {
  EXPECT_TRUE(is_fitting_bell(E4(R(0))));
  EXPECT_TRUE(is_fitting_bell(E4(R(1, 4))));
  EXPECT_FALSE(is_fitting_bell(E(R(1, 2), R(1, 2), R(1, 2), R(0))));
  EXPECT_TRUE(is_fitting_cirelson(E4(R(1, 4))));
  EXPECT_FALSE(is_fitting_cirelson(E4(R(0))));
  EXPECT_TRUE(is_fitting_cirelson(E4(R(3, 10))));
}

TEST(Predicates, Forcing) {
  EXPECT_TRUE(is_forcing_bell(E4(R(1, 2))));
  EXPECT_TRUE(is_forcing_bell(E(R(1, 2), R(0), R(0), R(1, 2))));
  EXPECT_FALSE(is_forcing_bell(E4(R(1, 4))));
  EXPECT_TRUE(is_forcing_cirelson(E4(R(1, 2))));
  EXPECT_TRUE(is_forcing_cirelson(E4(R(9, 20))));
  EXPECT_EQ(s_values(E4(R(9, 20))).s0, R(4, 5));
  EXPECT_FALSE(is_forcing_cirelson(E4(R(1, 4))));
}

TEST(Predicates, UnitS0SetIsExactlyEightVectors) {
  std::set<std::string> found;
  const auto g = quarter_grid();
  for (const auto& a : g) {
    for (const auto& b : g) {
      for (const auto& c : g) {
        for (const auto& d : g) {
          const auto e = E(a, b, c, d);
          if (is_forcing_bell(e)) found.insert(e.str());
        }
      }
    }
  }
  const std::set<std::string> expected{"0,0,0,0",         "1/2,1/2,1/2,1/2", "1/2,1/2,0,0", "1/2,0,1/2,0",
                                       "1/2,0,0,1/2",     "0,1/2,1/2,0",     "0,1/2,0,1/2", "0,0,1/2,1/2"};
  EXPECT_EQ(found, expected);
  // Off the quarter grid s0 < 1: each coordinate then deviates by less than 1/4.
  for (std::uint64_t t = 0; t < 300; ++t) {
    Rng rng = make_rng(55, t);
    const auto e = sample_eps(rng, [](const auto&) { return true; }, 1000);
    const bool extreme = std::all_of(e.v.begin(), e.v.end(), [](const Rational& x) { return x == R(0) || x == R(1, 2); });
    EXPECT_EQ(is_forcing_bell(e), extreme && expected.count(e.str()) == 1);
  }
}

TEST(Predicates, LiteralIdentityConnectionsSitAtOneHalf) {
  const auto s = epr_system(P(R(1, 4), R(1, 4), R(1, 4), R(1, 4)));
  for (const auto& c : all_identity_connections(s)) EXPECT_EQ(c.law.mass_of({"+1", "+1"}), R(1, 2));
  EXPECT_TRUE(is_forcing_bell(E4(R(1, 2))));
}

// --- EJDS oracle ------------------------------------------------------------

TEST(EjdsEpr, Examples) {
  const auto q = P(R(1, 4), R(1, 4), R(1, 4), R(1, 4));
  const auto pr = P(R(1, 2), R(1, 2), R(1, 2), R(0));
  const auto a = ejds_feasible_epr(q, E4(R(1, 4)));
  EXPECT_TRUE(a.feasible());
  EXPECT_TRUE(audit_epr(q, E4(R(1, 4)), a));
  const auto b = ejds_feasible_epr(pr, E4(R(1, 2)));
  EXPECT_FALSE(b.feasible());
  EXPECT_TRUE(audit_epr(pr, E4(R(1, 2)), b));
  const auto c = ejds_feasible_epr(pr, E4(R(1, 4)));
  EXPECT_TRUE(c.feasible());
  EXPECT_TRUE(audit_epr(pr, E4(R(1, 4)), c));
  EXPECT_EQ(a.system.variables, 256U);
}

TEST(EjdsEpr, AgreesWithGenericEngine) {
  for (std::uint64_t t = 0; t < 60; ++t) {
    Rng rng = make_rng(56, t);
    const auto p = sample_p(PConstraint::none, rng, 8);
    const auto e = sample_eps(rng, [](const auto&) { return true; }, 8);
    const auto s = epr_system(p);
    const auto cs = epr_connections(s, e);
    const auto generic = ejds_feasible(s, cs);
    const auto direct = ejds_feasible_epr(p, e);
    EXPECT_EQ(generic.feasible(), direct.feasible()) << p.str() << " " << e.str();
    EXPECT_TRUE(audit_epr(p, e, direct));
    if (direct.feasible()) {
      EXPECT_EQ(connection_of_coupling(*direct.certificate, {0}, {1}, s).mass_of({"+1", "+1"}), e.at(1, 2));
      EXPECT_EQ(connection_of_coupling(*direct.certificate, {1}, {0}, s).mass_of({"+1", "+1"}), e.at(2, 1));
    }
  }
}

TEST(EjdsEpr, CentreEpsilonFitsEveryP) {
  for (std::uint64_t t = 0; t < 40; ++t) {
    Rng rng = make_rng(57, t);
    const auto p = sample_p(PConstraint::none, rng);
    EXPECT_TRUE(ejds_feasible_epr(p, E4(R(1, 4))).feasible()) << p.str();
  }
  for (const auto& p : pr_box_images()) EXPECT_TRUE(ejds_feasible_epr(p, E4(R(1, 4))).feasible());
}

TEST(FineEquivalence, ReducedCouplingIffBell) {
  std::vector<PVector> ps;
  for (const auto& v : deterministic_vertices()) ps.push_back(v);
  for (const auto& v : pr_box_images()) ps.push_back(v);
  for (std::uint64_t t = 0; t < 300; ++t) {
    Rng rng = make_rng(58, t);
    ps.push_back(sample_p(PConstraint::none, rng));
  }
  std::size_t violations = 0;
  for (const auto& p : ps) {
    const auto s = epr_system(p);
    const auto r = reduced_coupling_feasible(s);
    const bool bell = bell_ch_fine(p).holds;
    EXPECT_EQ(r.feasible(), bell) << p.str();
    EXPECT_TRUE(audit_reduced(s, r));
    violations += !bell;
  }
  EXPECT_GE(violations, 8U);
}

TEST(Vertices, AreDistinctBoundaryBellPoints) {
  std::set<std::string> seen;
  for (const auto& v : deterministic_vertices()) {
    seen.insert(v.str());
    const auto b = bell_ch_fine(v);
    EXPECT_TRUE(b.holds);
    for (const auto& x : b.expressions) EXPECT_TRUE(x == R(0) || x == R(1));
  }
  EXPECT_EQ(seen.size(), 8U);
  std::set<std::string> images;
  for (const auto& v : pr_box_images()) {
    images.insert(v.str());
    EXPECT_FALSE(bell_ch_fine(v).holds);
  }
  EXPECT_EQ(images.size(), 8U);
  EXPECT_EQ(images.count("1/2,1/2,1/2,0"), 1U);
}

// --- sampling ---------------------------------------------------------------

TEST(SampleP, Postconditions) {
  Rng a = make_rng(1, 0);
  Rng b = make_rng(1, 0);
  const auto p = sample_p(PConstraint::none, a);
  EXPECT_EQ(p.str(), sample_p(PConstraint::none, b).str());
  EXPECT_NO_THROW(require_valid(p));
  for (std::uint64_t t = 0; t < 100; ++t) {
    Rng rng = make_rng(59, t);
    const auto bell = sample_p(PConstraint::bell, rng);
    EXPECT_TRUE(bell_ch_fine(bell).holds);
    const auto cir = sample_p(PConstraint::cirelson, rng);
    EXPECT_TRUE(cirelson(cir).holds);
    for (const auto& x : cir.v) EXPECT_EQ((x * R(1000)).is_integer(), true);
  }
  EXPECT_CTX_ERROR(sample_p(PConstraint::none, a, 1), ErrorKind::InvalidArgument);
}

// --- verify_fitting / verify_forcing ----------------------------------------

TEST(VerifyFitting, Examples) {
  const auto zero = verify_fitting(Property::bell, E4(R(0)), {200, 7});
  EXPECT_TRUE(zero.predicted);
  EXPECT_EQ(zero.counterexamples, 0U);
  EXPECT_EQ(zero.trials.size(), 200U);
  EXPECT_TRUE(zero.consistent_with_prediction());

  const auto pr = verify_fitting(Property::bell, E(R(1, 2), R(1, 2), R(1, 2), R(0)), {200, 7});
  EXPECT_FALSE(pr.predicted);
  EXPECT_GE(pr.counterexamples, 1U);
  EXPECT_EQ(pr.trials.size(), 208U);
  const bool vertex_hit = std::any_of(pr.trials.begin(), pr.trials.end(), [](const TrialRecord& t) {
    return t.id.front() == 'v' && t.verdict == "counterexample";
  });
  EXPECT_TRUE(vertex_hit);
  EXPECT_NE(pr.evidence_text().find("  separator:\n"), std::string::npos);

  const auto cir = verify_fitting(Property::cirelson, E4(R(1, 4)), {50, 1});
  EXPECT_EQ(cir.counterexamples, 0U);
  EXPECT_CTX_ERROR(verify_fitting(Property::bell, E4(R(0)), {0, 1}), ErrorKind::InvalidArgument);
}

TEST(VerifyForcing, Examples) {
  VerifyOptions opts{500, 3};
  opts.audit = true;
  const auto forced = verify_forcing(Property::bell, E4(R(1, 2)), opts);
  EXPECT_TRUE(forced.predicted);
  EXPECT_EQ(forced.counterexamples, 0U);
  EXPECT_GT(forced.feasible_count, 0U);
  EXPECT_EQ(forced.audit_failures, 0U);
  EXPECT_EQ(forced.audits, 500U);

  const auto centre = verify_forcing(Property::bell, E4(R(1, 4)), {500, 3});
  EXPECT_FALSE(centre.predicted);
  EXPECT_GE(centre.counterexamples, 1U);
  EXPECT_EQ(centre.feasible_count, 500U);
  EXPECT_TRUE(ejds_feasible_epr(P(R(1, 2), R(1, 2), R(1, 2), R(0)), E4(R(1, 4))).feasible());
  EXPECT_NE(centre.evidence_text().find("  certificate:\n"), std::string::npos);

  const auto cir = verify_forcing(Property::cirelson, E4(R(9, 20)), {500, 3});
  EXPECT_TRUE(cir.predicted);
  EXPECT_EQ(cir.counterexamples, 0U);
  EXPECT_GT(cir.feasible_count, 0U);
}

TEST(VerifyForcing, MinFeasibleKeepsDrawing) {
  VerifyOptions opts{10, 4};
  opts.min_feasible = 25;
  const auto r = verify_forcing(Property::bell, E4(R(0)), opts);
  EXPECT_GE(r.feasible_count, 25U);
  EXPECT_GT(r.trials.size(), 10U);
  EXPECT_EQ(r.counterexamples, 0U);
}

TEST(VerifyReport, TrialTableFormatAndDeterminism) {
  const auto a = verify_forcing(Property::bell, E4(R(1, 2)), {5, 11});
  const auto b = verify_forcing(Property::bell, E4(R(1, 2)), {5, 11});
  EXPECT_EQ(a.trial_table(), b.trial_table());
  std::istringstream lines(a.trial_table());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "trial\tp\teps\tfeasible\tproperty_holds\tverdict");
  std::string row;
  std::getline(lines, row);
  EXPECT_EQ(row.rfind("0\t", 0), 0U);
  EXPECT_NE(row.find("\t1/2,1/2,1/2,1/2\t"), std::string::npos);
  const auto c = verify_forcing(Property::bell, E4(R(1, 2)), {5, 12});
  EXPECT_NE(a.trial_table(), c.trial_table());
}

// Pairing two independently recorded series of weight readings three ways.

#include <iostream>

#include "ctx/ctx.hpp"

namespace {

void show(const char* name, const ctx::EmpiricalJoint& j) {
  std::cout << name << ":";
  for (const auto& [a, b] : j.pairs) std::cout << " (" << a << "," << b << ")";
  const auto r2 = ctx::empirical_moments(j).signed_r_squared();
  std::cout << "\n  covariance " << ctx::empirical_moments(j).covariance.str() << ", signed r^2 "
            << (r2 ? r2->str() : "undefined") << "\n";
}

}  // namespace

int main() {
  const ctx::SampleStream first{"lump1", {"101", "99", "103", "100", "97"}};
  const ctx::SampleStream second{"lump2", {"52", "49", "50", "55", "48"}};
  show("chronological", ctx::chronological_coupling(first, second));
  show("comonotone", ctx::comonotone_coupling(first, second));
  show("antitone", ctx::antitone_coupling(first, second));

  // Independent per-treatment draws from a small system.
  const auto system = ctx::epr::epr_system(
      {{ctx::Rational(1, 4), ctx::Rational(1, 4), ctx::Rational(1, 4), ctx::Rational(1, 4)}});
  const auto sample = ctx::sample_system(system, 1000, 42);
  std::cout << "estimated p from 1000 draws per treatment: " << sample.p_hat->str() << "\n";
  return 0;
}

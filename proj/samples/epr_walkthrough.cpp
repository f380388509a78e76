// Two parties, two settings each, +-1 outcomes: inequality checks, the
// reduced coupling, and couplings constrained by connection vectors.

#include <iostream>

#include "ctx/ctx.hpp"

using ctx::Rational;

int main() {
  const ctx::epr::PVector pr_box{{Rational(1, 2), Rational(1, 2), Rational(1, 2), Rational(0)}};
  const ctx::epr::PVector tsirelson_ish{{Rational(21, 50), Rational(21, 50), Rational(21, 50), Rational(7, 100)}};

  for (const auto& p : {pr_box, tsirelson_ish}) {
    const auto ch = ctx::epr::bell_ch_fine(p);
    std::cout << "p = " << p.str() << "\n";
    std::cout << "  CH expressions " << ch.expressions[0].str() << ", " << ch.expressions[1].str() << ", "
              << ch.expressions[2].str() << ", " << ch.expressions[3].str() << "\n";
    std::cout << "  CH " << (ch.holds ? "holds" : "fails") << ", Cirel'son "
              << (ctx::epr::cirelson(p).holds ? "holds" : "fails") << "\n";

    const auto system = ctx::epr::epr_system(p);
    const auto reduced = ctx::reduced_coupling_feasible(system);
    std::cout << "  reduced coupling: " << (reduced.feasible() ? "exists" : "does not exist") << "\n";
    if (!reduced.feasible()) std::cout << ctx::format_separator(reduced.system, reduced.separator);
  }

  // The PR box fits independent connections but not identity ones.
  for (const auto& eps : {ctx::epr::EpsilonVector{{Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)}},
                          ctx::epr::EpsilonVector{{Rational(1, 2), Rational(1, 2), Rational(1, 2), Rational(1, 2)}}}) {
    const auto s = ctx::epr::s_values(eps);
    const auto r = ctx::epr::ejds_feasible_epr(pr_box, eps);
    std::cout << "eps = " << eps.str() << " (s0 " << s.s0.str() << ", s1 " << s.s1.str() << "): "
              << (r.feasible() ? "coupling exists" : "no coupling") << ", audit "
              << (ctx::epr::audit_epr(pr_box, eps, r) ? "PASS" : "FAIL") << "\n";
    if (r.feasible()) {
      const auto system = ctx::epr::epr_system(pr_box);
      const auto c = ctx::connection_of_coupling(*r.certificate, {0}, {0}, system);
      std::cout << "  connection of A1 at a1=1 read back from the coupling:\n" << ctx::format_atom_lines(c);
    }
  }
  return 0;
}

#pragma once

// Text forms shared by reports and documents. Distributions use the same
// syntax as distribution blocks in system files:
//
//   axes: A1@(1,1) A2@(1,1)
//   -1 -1 : 1/2
//   +1 +1 : 1/2

#include <sstream>
#include <string>
#include <vector>

#include "ctx/core_model.hpp"
#include "ctx/lp.hpp"

namespace ctx {

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string format_atom_lines(const FiniteDistribution& d) {
  std::ostringstream os;
  for (const auto& [index, m] : d.support()) os << join(d.labels(index), " ") << " : " << m << "\n";
  return os.str();
}

inline std::string format_distribution(const FiniteDistribution& d) {
  std::vector<std::string> ids;
  for (const auto& a : d.axes()) ids.push_back(a.id);
  return "axes: " + join(ids, " ") + "\n" + format_atom_lines(d);
}

/// Nonzero multipliers with their row labels, then the combined right-hand side.
inline std::string format_separator(const lp::LinearSystem& sys, const std::vector<Rational>& y) {
  std::ostringstream os;
  for (std::size_t i = 0; i < y.size() && i < sys.rows.size(); ++i) {
    if (!y[i].is_zero()) os << "  " << y[i] << " * " << sys.rows[i].label << " (rhs " << sys.rows[i].rhs << ")\n";
  }
  os << "  combined: every coefficient <= 0, right-hand side " << lp::separator_rhs(sys, y) << " > 0\n";
  return os.str();
}

}  // namespace ctx

#pragma once
// Atomic species parameters: quantum-defect tables, Lande g-factors and the
// reduced-mass-corrected Rydberg constant. The shipped defaults are
// literature-style values suitable for Rb (n ~ 70) and Cs (n' ~ 71) S_1/2 /
// P_3/2 Rydberg states; every entry can be overridden from configuration.

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "units.hpp"

namespace spinroute {

// (l, 2j) pair keying one fine-structure series.
using LJKey = std::pair<int, int>;

struct SpeciesParams {
  std::string name;
  double rydberg_constant = 0.0;  // rad/us
  // Ritz expansion delta(n) = delta0 + delta2 / (n - delta0)^2
  std::map<LJKey, std::pair<double, double>> defects;
  std::map<LJKey, double> g_factors;

  double defect(int n, int l, int two_j) const {
    const auto it = defects.find({l, two_j});
    if (it == defects.end())
      throw std::invalid_argument(name + ": no quantum-defect entry for (l=" +
                                  std::to_string(l) + ", 2j=" +
                                  std::to_string(two_j) + ")");
    const auto [d0, d2] = it->second;
    const double dn = static_cast<double>(n) - d0;
    return d0 + d2 / (dn * dn);
  }

  double effective_n(int n, int l, int two_j) const {
    const double nu = static_cast<double>(n) - defect(n, l, two_j);
    if (nu <= 0.0)
      throw std::invalid_argument(name + ": non-positive effective quantum number");
    return nu;
  }

  double g_factor(int l, int two_j) const {
    const auto it = g_factors.find({l, two_j});
    if (it == g_factors.end())
      throw std::invalid_argument(name + ": no g-factor entry for (l=" +
                                  std::to_string(l) + ", 2j=" +
                                  std::to_string(two_j) + ")");
    return it->second;
  }
};

inline SpeciesParams rubidium_default() {
  SpeciesParams s;
  s.name = "Rb";
  s.rydberg_constant = from_2pi_mhz(RY_INF_MHZ / (1.0 + ELECTRON_MASS_U / MASS_RB87_U));
  s.defects[{0, 1}] = {3.1311804, 0.1784};    // nS_1/2
  s.defects[{1, 3}] = {2.6548849, 0.2900};    // nP_3/2
  s.g_factors[{0, 1}] = 2.0;
  s.g_factors[{1, 3}] = 4.0 / 3.0;
  return s;
}

inline SpeciesParams cesium_default() {
  SpeciesParams s;
  s.name = "Cs";
  s.rydberg_constant = from_2pi_mhz(RY_INF_MHZ / (1.0 + ELECTRON_MASS_U / MASS_CS133_U));
  s.defects[{0, 1}] = {4.04935665, 0.2377037};  // nS_1/2
  s.defects[{1, 3}] = {3.5590676, 0.37469};     // nP_3/2
  s.g_factors[{0, 1}] = 2.0;
  s.g_factors[{1, 3}] = 4.0 / 3.0;
  return s;
}

}  // namespace spinroute

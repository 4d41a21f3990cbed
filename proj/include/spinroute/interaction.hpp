#pragma once
// Dipole-dipole coupling operators between atom pairs: the full five-line
// angular expansion over multilevel manifolds, and the truncated two-level
// flip-flop forms used by the effective models.
//
// Phase conventions (documented once, here, to prevent drift): spherical
// dipole components are defined via e_+- = -+(e_x +- i e_y)/sqrt(2); matrix
// elements between magnetic sublevels are taken with magnitude normalization
// (every allowed S<->P element is |C| * R_eff >= 0 with R_eff the radial
// integral scaled by 1/sqrt(2)), so all interaction phases live in the
// geometric e^{i phi} factors of the angular channel table below.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "atomic.hpp"
#include "geometry.hpp"
#include "species.hpp"
#include "units.hpp"

namespace spinroute {

// Atom positions keyed by identifier; quantization axis fixed along z.
struct Geometry {
  std::map<int, Vec3> positions;

  PairAngles angles(int i, int j) const {
    const auto pi = positions.find(i), pj = positions.find(j);
    if (pi == positions.end() || pj == positions.end())
      throw std::invalid_argument("geometry: unknown atom identifier");
    return pair_angles(pi->second, pj->second);
  }
};

inline Geometry router_sites(const RouterGeometry& rg) {
  Geometry g;
  for (int s = 1; s <= 5; ++s) g.positions[s] = rg.position(s);
  return g;
}

// Angular factor of the dipole-dipole expansion for an atom pair whose
// sublevel changes are (dm_i, dm_j), evaluated at pair orientation (theta,
// phi) relative to B || z:
//   ( 0, 0)            : (1 - 3cos^2)
//   (+1,-1), (-1,+1)   : (1/2)(1 - 3cos^2)
//   (-1, 0), ( 0,-1)   : -(3/sqrt2) sin cos e^{-i phi}
//   (+1, 0), ( 0,+1)   : -(3/sqrt2) sin cos e^{+i phi}
//   (-1,-1)            : -(3/2) sin^2 e^{-2i phi}
//   (+1,+1)            : -(3/2) sin^2 e^{+2i phi}
inline cplx angular_channel(int dm_i, int dm_j, const PairAngles& g) {
  if (std::abs(dm_i) > 1 || std::abs(dm_j) > 1)
    throw std::invalid_argument("angular_channel: |dm| <= 1 required");
  const double ct = g.cos_theta, st = g.sin_theta;
  const int dm_tot = dm_i + dm_j;
  if (dm_tot == 0) {
    const double f = 1.0 - 3.0 * ct * ct;
    return (dm_i == 0) ? cplx{f, 0.0} : cplx{0.5 * f, 0.0};
  }
  if (dm_tot == -1)
    return -(3.0 / std::sqrt(2.0)) * st * ct * std::exp(-I * g.phi);
  if (dm_tot == +1)
    return -(3.0 / std::sqrt(2.0)) * st * ct * std::exp(+I * g.phi);
  if (dm_tot == -2) return -1.5 * st * st * std::exp(-2.0 * I * g.phi);
  return -1.5 * st * st * std::exp(+2.0 * I * g.phi);  // dm_tot == +2
}

// Magnitude of the single-atom dipole element <to| d |from> in units of
// e*a0: |angular C| times the radial integral, with the 1/sqrt(2) spherical
// normalization folded in. Zero for dipole-forbidden pairs.
inline double dipole_magnitude(const SpeciesParams& sp, const AtomLevel& from,
                               const AtomLevel& to) {
  if (std::abs(to.l - from.l) != 1) return 0.0;
  const double c = angular_dipole(from, to);
  if (c == 0.0) return 0.0;
  const double r = radial_dipole(sp, from.n, from.l, from.two_j, to.n, to.l,
                                 to.two_j);
  return std::abs(c) * std::abs(r) / std::sqrt(2.0);
}

// Geometry-independent interaction coefficient |d_i d_j| / (4 pi eps0) for
// the designated unstretched S1/2 <-> P3/2 transitions (|C| = 1/3 on each
// atom), in 2pi x MHz um^3. This is C_AA when both atoms share a species and
// C_AB for a mixed pair. Cached per (species, n): it never depends on
// geometry.
inline double designated_c_coefficient_mhz_um3(const SpeciesParams& sp_i,
                                               int n_i,
                                               const SpeciesParams& sp_j,
                                               int n_j) {
  auto reff_third = [](const SpeciesParams& sp, int n) {
    const double r = radial_dipole(sp, n, 0, 1, n, 1, 3);
    return std::abs(r) / std::sqrt(2.0) / 3.0;
  };
  return reff_third(sp_i, n_i) * reff_third(sp_j, n_j) * DIPOLE_CONV_MHZ_UM3;
}

// Full two-atom dipole-dipole operator over the supplied level manifolds.
// block(q, p) = <b_i d_j| V |a_i c_j> with column index p = a*nj + c and row
// index q = b*nj + d, in rad/us. Hermitian by construction of the channel
// table (conjugating a channel negates both dm values).
struct PairCoupling {
  Eigen::MatrixXcd block;
  double c_aa_mhz_um3 = 0.0;  // |d_i|^2 /(4 pi eps0), species i with itself
  double c_ab_mhz_um3 = 0.0;  // |d_i d_j| /(4 pi eps0), the cross coefficient
};

inline PairCoupling pair_coupling_full(const SpeciesParams& sp_i,
                                       const std::vector<AtomLevel>& levels_i,
                                       const SpeciesParams& sp_j,
                                       const std::vector<AtomLevel>& levels_j,
                                       const Geometry& geom, int i, int j) {
  if (i == j)
    throw std::invalid_argument("pair_coupling_full: distinct atoms required");
  const PairAngles ang = geom.angles(i, j);
  const std::size_t ni = levels_i.size(), nj = levels_j.size();
  const double pref =
      from_2pi_mhz(DIPOLE_CONV_MHZ_UM3) / (ang.r * ang.r * ang.r);

  PairCoupling pc;
  pc.block = Eigen::MatrixXcd::Zero(ni * nj, ni * nj);
  // Per-atom transition tables: magnitude and dm for every allowed pair.
  auto table = [](const SpeciesParams& sp, const std::vector<AtomLevel>& lv) {
    const std::size_t n = lv.size();
    Eigen::MatrixXd mag = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) mag(b, a) = dipole_magnitude(sp, lv[a], lv[b]);
    return mag;
  };
  const Eigen::MatrixXd mag_i = table(sp_i, levels_i);
  const Eigen::MatrixXd mag_j = table(sp_j, levels_j);

  for (std::size_t a = 0; a < ni; ++a)
    for (std::size_t b = 0; b < ni; ++b) {
      if (mag_i(b, a) == 0.0) continue;
      const int dm_i = (levels_i[b].two_m - levels_i[a].two_m) / 2;
      for (std::size_t c = 0; c < nj; ++c)
        for (std::size_t d = 0; d < nj; ++d) {
          if (mag_j(d, c) == 0.0) continue;
          const int dm_j = (levels_j[d].two_m - levels_j[c].two_m) / 2;
          const cplx f = angular_channel(dm_i, dm_j, ang);
          pc.block(b * nj + d, a * nj + c) +=
              pref * f * mag_i(b, a) * mag_j(d, c);
        }
    }

  const int n_i = levels_i.front().n, n_j = levels_j.front().n;
  pc.c_aa_mhz_um3 = designated_c_coefficient_mhz_um3(sp_i, n_i, sp_i, n_i);
  pc.c_ab_mhz_um3 = designated_c_coefficient_mhz_um3(sp_i, n_i, sp_j, n_j);
  return pc;
}

// Truncated two-level flip-flop amplitude <0 1|V|1 0> between two main-species
// atoms: (c_aa / r^3) (1/2)(1 - 3 cos^2 theta). Output units follow c_aa/r^3.
inline double pair_coupling_aa(double r_um, double theta, double c_aa) {
  if (!(r_um > 0.0)) throw std::invalid_argument("pair_coupling_aa: r = 0");
  const double ct = std::cos(theta);
  return c_aa / (r_um * r_um * r_um) * 0.5 * (1.0 - 3.0 * ct * ct);
}

// Truncated main-aux exchange amplitude for |1>_i |->_j -> |0>_i |+>_j:
// -(c_ab / r^3) (3/2) sin^2 theta e^{-2 i phi}. The reverse process is the
// Hermitian conjugate.
inline cplx pair_coupling_ab(double r_um, double theta, double phi,
                             double c_ab) {
  if (!(r_um > 0.0)) throw std::invalid_argument("pair_coupling_ab: r = 0");
  const double st = std::sin(theta);
  return -c_ab / (r_um * r_um * r_um) * 1.5 * st * st *
         std::exp(-2.0 * I * phi);
}

}  // namespace spinroute

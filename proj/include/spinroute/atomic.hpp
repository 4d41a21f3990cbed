#pragma once
// Single-atom Rydberg structure: level energies, Zeeman shifts, angular and
// radial dipole matrix elements, and the main/auxiliary transition detuning.

#include <cmath>
#include <stdexcept>

#include "species.hpp"
#include "units.hpp"
#include "wigner.hpp"

namespace spinroute {

// One fine-structure magnetic sublevel |n l j m>.
struct AtomLevel {
  int n = 0;
  int l = 0;
  int two_j = 1;
  int two_m = 1;
};

// E_nl = -Ry / (n - delta_lj)^2, in rad/us.
inline double rydberg_energy(const SpeciesParams& sp, int n, int l, int two_j) {
  const double nu = sp.effective_n(n, l, two_j);
  return -sp.rydberg_constant / (nu * nu);
}

// Linear Zeeman shift mu_B * B * g_j * m, in rad/us.
inline double zeeman_shift(const AtomLevel& level, const SpeciesParams& sp,
                           double B_gauss) {
  const double g = sp.g_factor(level.l, level.two_j);
  return from_2pi_mhz(MU_B_MHZ_PER_G * B_gauss) * g * (0.5 * level.two_m);
}

// Angular part C of the dipole matrix element <n'l'j'm'| r |n l j m>:
//   sqrt((2j'+1)(2j+1)(2l'+1)(2l+1)) (-1)^(j-m+j'+s+1)
//   {j 1 j'; l' s l} (l 1 l'; 0 0 0) (j 1 j'; -m -dm m'),  s = 1/2.
// Exactly zero for |dm| >= 2, |dl| != 1 or |dj| > 1.
inline double angular_dipole(const AtomLevel& from, const AtomLevel& to) {
  const int dl = to.l - from.l;
  const int two_dm = to.two_m - from.two_m;
  if (std::abs(two_dm) > 2) return 0.0;
  if (std::abs(dl) != 1) return 0.0;
  if (std::abs(to.two_j - from.two_j) > 2) return 0.0;

  const double j = 0.5 * from.two_j, j2 = 0.5 * to.two_j;
  const double m = 0.5 * from.two_m, m2 = 0.5 * to.two_m;
  const double dm = 0.5 * two_dm;
  const double pref = std::sqrt((to.two_j + 1.0) * (from.two_j + 1.0) *
                                (2.0 * to.l + 1.0) * (2.0 * from.l + 1.0));
  // (-1)^(j - m + j' + s + 1): the exponent is an integer for any valid pair.
  const int exponent = (from.two_j - from.two_m) / 2 + (to.two_j + 1) / 2 + 1;
  const double phase = (exponent % 2 == 0) ? 1.0 : -1.0;
  const double w6 = wigner_6j(j, 1.0, j2, to.l, 0.5, from.l);
  const double w3a = wigner_3j(from.l, 1.0, to.l, 0.0, 0.0, 0.0);
  const double w3b = wigner_3j(j, 1.0, j2, -m, -dm, m2);
  return pref * phase * w6 * w3a * w3b;
}

namespace detail {

// Fixed 64-point Gauss-Legendre rule on [-1, 1] (nodes via Newton iteration
// on the Legendre recurrence). Function-local static: thread-safe init.
struct GaussLegendre64 {
  static constexpr int N = 64;
  double node[N] = {};
  double weight[N] = {};
  GaussLegendre64() {
    for (int i = 0; i < N / 2; ++i) {
      double t = std::cos(PI * (i + 0.75) / (N + 0.5));
      double p1 = t, dp = 1.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        p1 = t;
        for (int k = 2; k <= N; ++k) {
          const double pk = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = N * (t * p1 - p0) / (t * t - 1.0);
        const double dt = p1 / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15) break;
      }
      node[i] = -t;
      node[N - 1 - i] = t;
      weight[i] = weight[N - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
  }
};

// Anger function J_nu(x) = (1/pi) Int_0^pi cos(nu t - x sin t) dt via
// Gauss-Legendre quadrature (integrand is entire; converges far below
// 1e-13 for the |nu|, |x| <~ 3 arguments used here).
inline double anger_j(double nu, double x) {
  static const GaussLegendre64 gl;
  double sum = 0.0;
  for (int i = 0; i < GaussLegendre64::N; ++i) {
    const double t = 0.5 * PI * (gl.node[i] + 1.0);
    sum += gl.weight[i] * std::cos(nu * t - x * std::sin(t));
  }
  return 0.5 * sum;  // (1/pi) * (pi/2) * sum
}

}  // namespace detail

// Semiclassical (quasiclassical) radial matrix element
// Int R_nl R_n'l' r^3 dr in units of a0, evaluated with effective quantum
// numbers. Valid for the near-degenerate S <-> P Rydberg transitions used
// here; cross-checked against a Numerov quadrature in the test suite.
inline double radial_dipole(const SpeciesParams& sp, int n, int l, int two_j,
                            int n2, int l2, int two_j2) {
  if (std::abs(l2 - l) != 1)
    throw std::invalid_argument("radial_dipole: |dl| = 1 required");
  const double nu1 = sp.effective_n(n, l, two_j);
  const double nu2 = sp.effective_n(n2, l2, two_j2);
  const double nc = std::sqrt(nu1 * nu2);
  const double lc = (l + l2 + 1) / 2.0;
  const double dnu = nu2 - nu1;
  const double gam = (l2 - l) * lc / nc;
  const double x = -dnu;
  const double jm = detail::anger_j(dnu - 1.0, x);
  const double jp = detail::anger_j(dnu + 1.0, x);
  const double g0 = (jm - jp) / (3.0 * dnu);
  const double g1 = -(jm + jp) / (3.0 * dnu);
  const double g2 = g0 - std::sin(PI * dnu) / (PI * dnu);
  const double g3 = 0.5 * dnu * g0 + g1;
  return 1.5 * nc * nc * std::sqrt(1.0 - (lc / nc) * (lc / nc)) *
         (g0 + gam * g1 + gam * gam * g2 + gam * gam * gam * g3);
}

// The four working sublevels of the two-species scheme.
struct SublevelScheme {
  AtomLevel zero, one;    // main species |0>, |1>  (dm = +1 upward)
  AtomLevel minus, plus;  // aux species  |->, |+>  (dm = -1 upward)
};

// Default assignment: |0> = nS1/2 m=-1/2, |1> = nP3/2 m=+1/2,
// |-> = n'S1/2 m=+1/2, |+> = n'P3/2 m=-1/2.
inline SublevelScheme default_scheme(int n_main, int n_aux) {
  return {{n_main, 0, 1, -1}, {n_main, 1, 3, +1},
          {n_aux, 0, 1, +1}, {n_aux, 1, 3, -1}};
}

// The mirrored assignment with the same dm = +1 / dm = -1 structure:
// |0> = nS1/2 m=+1/2, |1> = nP3/2 m=+3/2, |-> = n'S1/2 m=-1/2,
// |+> = n'P3/2 m=-3/2.
inline SublevelScheme alternate_scheme(int n_main, int n_aux) {
  return {{n_main, 0, 1, +1}, {n_main, 1, 3, +3},
          {n_aux, 0, 1, -1}, {n_aux, 1, 3, -3}};
}

// Zeeman-shifted transition frequency lower -> upper, rad/us.
inline double transition_frequency(const SpeciesParams& sp, const AtomLevel& lower,
                                   const AtomLevel& upper, double B_gauss) {
  const double e_up = rydberg_energy(sp, upper.n, upper.l, upper.two_j) +
                      zeeman_shift(upper, sp, B_gauss);
  const double e_lo = rydberg_energy(sp, lower.n, lower.l, lower.two_j) +
                      zeeman_shift(lower, sp, B_gauss);
  return e_up - e_lo;
}

// Detuning Delta between the auxiliary |-> -> |+> and the main |0> -> |1>
// transitions at field B. The sign convention makes the second-order
// (adiabatic-elimination) terms carry a -1/Delta prefactor.
inline double transition_detuning(const SpeciesParams& main_sp,
                                  const SpeciesParams& aux_sp,
                                  const SublevelScheme& scheme, double B_gauss) {
  return transition_frequency(aux_sp, scheme.minus, scheme.plus, B_gauss) -
         transition_frequency(main_sp, scheme.zero, scheme.one, B_gauss);
}

}  // namespace spinroute

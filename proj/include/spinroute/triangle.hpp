#pragma once
// The flux triangle: abstract 3x3 chiral Hamiltonian, flux (chirality)
// conditions, the adiabatically eliminated effective triangle of the
// five-atom router, the solver for the flux conditions, and the circulation
// metric that quantifies chiral population transport.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomic.hpp"
#include "dynamics.hpp"
#include "geometry.hpp"
#include "interaction.hpp"
#include "species.hpp"
#include "units.hpp"

namespace spinroute {

// Wrap an angle into (-pi, pi].
inline double wrap_pi(double x) {
  double y = std::remainder(x, TWO_PI);
  if (y <= -PI) y += TWO_PI;
  return y;
}

// Abstract three-site triangle. The stored complex couplings are the upper
// off-diagonal entries along the directed cycle 1 -> 2 -> 3 -> 1:
// H_12 = J_1, H_23 = J_2, H_31 = J_3, with the phase convention
// J_j = |J_j| e^{-i gamma_j}. All energies in rad/us.
struct FluxTriangle {
  cplx j1{0.0, 0.0}, j2{0.0, 0.0}, j3{0.0, 0.0};
  double mu1 = 0.0, mu2 = 0.0, mu3 = 0.0;

  double gamma1() const { return -std::arg(j1); }
  double gamma2() const { return -std::arg(j2); }
  double gamma3() const { return -std::arg(j3); }
  double gamma_tot() const { return wrap_pi(-std::arg(j1 * j2 * j3)); }
};

// 3x3 Hermitian matrix with H_12 = J_1, H_23 = J_2, H_31 = J_3.
inline Eigen::Matrix3cd build_h3(const FluxTriangle& t) {
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(0, 0) = t.mu1;
  h(1, 1) = t.mu2;
  h(2, 2) = t.mu3;
  h(0, 1) = t.j1;
  h(1, 0) = std::conj(t.j1);
  h(1, 2) = t.j2;
  h(2, 1) = std::conj(t.j2);
  h(2, 0) = t.j3;
  h(0, 2) = std::conj(t.j3);
  return h;
}

// Diagnostic for the chirality conditions |J_1| = |J_2| = |J_3| and
// gamma_tot = +-pi/2.
struct FluxDiagnostic {
  bool magnitudes_equal = false;
  bool flux_quantized = false;
  bool satisfied = false;
  double gamma_tot = 0.0;          // wrapped into (-pi, pi]
  int chirality_sign = 0;          // -1 for -pi/2, +1 for +pi/2, 0 otherwise
  double magnitude_spread = 0.0;   // max |J| - min |J|
  double gamma_deviation = 0.0;    // distance of gamma_tot from nearest +-pi/2
};

inline FluxDiagnostic check_flux_conditions(const FluxTriangle& t, double tol) {
  if (!(tol > 0.0))
    throw std::invalid_argument("check_flux_conditions: tol must be > 0");
  FluxDiagnostic d;
  const double m1 = std::abs(t.j1), m2 = std::abs(t.j2), m3 = std::abs(t.j3);
  d.magnitude_spread = std::max({m1, m2, m3}) - std::min({m1, m2, m3});
  d.magnitudes_equal = d.magnitude_spread <= tol * std::max({m1, m2, m3, 1e-300});
  d.gamma_tot = t.gamma_tot();
  const double dev_minus = std::abs(d.gamma_tot + 0.5 * PI);
  const double dev_plus = std::abs(d.gamma_tot - 0.5 * PI);
  d.gamma_deviation = std::min(dev_minus, dev_plus);
  d.flux_quantized = d.gamma_deviation <= tol;
  if (d.flux_quantized) d.chirality_sign = (dev_minus <= dev_plus) ? -1 : +1;
  d.satisfied = d.magnitudes_equal && d.flux_quantized;
  return d;
}

// Intermediate quantities of the adiabatic elimination, pair order
// (1,2), (2,3), (1,3) and site order (1, 2, 3).
struct EffectiveProvenance {
  std::array<double, 3> t1{};  // first-order exchange T_(i->j), rad/us
  std::array<cplx, 3> t2{};    // second-order exchange T2_(i->k->j), rad/us
  std::array<cplx, 3> v_ab{};  // main-aux couplings V_ik, rad/us
  std::array<double, 3> s2{};  // second-order shifts S2_(i->k->i), rad/us
};

// Effective three-site model after eliminating the auxiliary atom.
struct EffectiveTriangle {
  std::array<double, 3> mu{};     // level shifts mu_1..3, rad/us
  std::array<double, 3> j_abs{};  // |J_12|, |J_23|, |J_13|, rad/us
  std::array<double, 3> gamma{};  // cycle phases gamma_1, gamma_2, gamma_3
  std::array<cplx, 3> j{};        // J_12, J_23, J_13 complex, rad/us
  double detuning = 0.0;          // Delta, rad/us
  double c_aa = 0.0, c_ab = 0.0;  // coefficients used, rad/us um^3
  bool adiabatic_ok = true;       // |Delta| >= factor * max |V_AB|
  double adiabaticity_ratio = 0.0;  // |Delta| / max |V_AB|
  EffectiveProvenance provenance;

  double gamma_tot() const {
    return wrap_pi(gamma[0] + gamma[1] + gamma[2]);
  }
  // Eq-layout triangle: H_12 = J_12, H_23 = J_23, H_31 = conj(J_13).
  FluxTriangle as_flux_triangle() const {
    return {j[0], j[1], std::conj(j[2]), mu[0], mu[1], mu[2]};
  }
};

// Core elimination formulas with explicit coefficients (rad/us um^3) and
// detuning (rad/us); useful for scaling checks and abstract scans.
inline EffectiveTriangle effective_triangle_from_coefficients(
    const Geometry& geom, double c_aa, double c_ab, double delta, int aux_id,
    double adiabaticity_factor = 5.0) {
  if (delta == 0.0)
    throw std::invalid_argument(
        "effective_triangle: detuning is zero; adiabatic elimination "
        "undefined");
  EffectiveTriangle out;
  out.detuning = delta;
  out.c_aa = c_aa;
  out.c_ab = c_ab;

  const std::array<std::pair<int, int>, 3> pairs{{{1, 2}, {2, 3}, {1, 3}}};
  // Main-aux couplings V_ik for i = 1..3 through the chosen auxiliary atom.
  double vmax = 0.0;
  for (int i = 1; i <= 3; ++i) {
    const PairAngles g = geom.angles(i, aux_id);
    const cplx v = pair_coupling_ab(g.r, std::acos(g.cos_theta), g.phi, c_ab);
    out.provenance.v_ab[i - 1] = v;
    out.provenance.s2[i - 1] = -std::norm(v) / delta;
    out.mu[i - 1] = out.provenance.s2[i - 1];
    vmax = std::max(vmax, std::abs(v));
  }
  out.adiabaticity_ratio = (vmax > 0.0) ? std::abs(delta) / vmax : HUGE_VAL;
  out.adiabatic_ok = out.adiabaticity_ratio >= adiabaticity_factor;

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, jj] = pairs[p];
    const PairAngles g = geom.angles(i, jj);
    const double t1 = pair_coupling_aa(g.r, std::acos(g.cos_theta), c_aa);
    const cplx t2 = -out.provenance.v_ab[i - 1] *
                    std::conj(out.provenance.v_ab[jj - 1]) / delta;
    out.provenance.t1[p] = t1;
    out.provenance.t2[p] = t2;
    out.j[p] = t1 + t2;
    out.j_abs[p] = std::abs(out.j[p]);
  }
  out.gamma[0] = -std::arg(out.j[0]);
  out.gamma[1] = -std::arg(out.j[1]);
  out.gamma[2] = +std::arg(out.j[2]);  // third cycle edge is 3 -> 1
  return out;
}

// Physical parameters of the two-species scheme bundled for the effective
// model and the flux-condition solver.
struct SchemeParams {
  SpeciesParams main_sp;
  SpeciesParams aux_sp;
  int n_main = 70;
  int n_aux = 71;
  SublevelScheme scheme;

  SchemeParams(SpeciesParams main_s, SpeciesParams aux_s, int nm, int na)
      : main_sp(std::move(main_s)),
        aux_sp(std::move(aux_s)),
        n_main(nm),
        n_aux(na),
        scheme(default_scheme(nm, na)) {}

  double delta_at(double b_gauss) const {
    return transition_detuning(main_sp, aux_sp, scheme, b_gauss);
  }
  // Invert the affine Zeeman model Delta(B) = Delta(0) + slope * B.
  double b_for_delta(double delta) const {
    const double d0 = delta_at(0.0);
    const double slope = delta_at(1.0) - d0;
    if (slope == 0.0)
      throw std::runtime_error(
          "b_for_delta: Zeeman slope vanishes for this sublevel scheme");
    return (delta - d0) / slope;
  }
  double c_aa() const {
    const double d = dipole_magnitude(main_sp, scheme.zero, scheme.one);
    return from_2pi_mhz(d * d * DIPOLE_CONV_MHZ_UM3);
  }
  double c_ab() const {
    const double dm = dipole_magnitude(main_sp, scheme.zero, scheme.one);
    const double da = dipole_magnitude(aux_sp, scheme.minus, scheme.plus);
    return from_2pi_mhz(dm * da * DIPOLE_CONV_MHZ_UM3);
  }
};

inline SchemeParams default_scheme_params() {
  return {rubidium_default(), cesium_default(), 70, 71};
}

// Effective triangle at magnetic field B for the given five-site geometry.
inline EffectiveTriangle effective_triangle(const Geometry& geom,
                                            const SchemeParams& sp,
                                            double b_gauss, int aux_id,
                                            double adiabaticity_factor = 5.0) {
  return effective_triangle_from_coefficients(geom, sp.c_aa(), sp.c_ab(),
                                              sp.delta_at(b_gauss), aux_id,
                                              adiabaticity_factor);
}

struct FluxGuess {
  double b_um = 9.4;
  double c_um = 10.0;
  double delta = from_2pi_mhz(50.0);  // rad/us
};

struct FluxSolution {
  double b_um = 0.0;
  double c_um = 0.0;
  double delta = 0.0;    // rad/us
  double b_gauss = 0.0;  // field realizing delta under the affine model
  EffectiveTriangle at_solution;
  int iterations = 0;
  double residual_norm = 0.0;
  std::array<double, 3> residuals{};  // (mu_1 - mu_2, |J_12| - |J_23|, gamma_tot + pi/2)
};

namespace detail {

// Residual vector of the flux-condition system at (b, c, delta) for base a.
// Components are scaled to comparable magnitudes: energy mismatches in
// 2pi x kHz, phase mismatch in rad.
inline Eigen::Vector3d flux_residuals(double a_um, const SchemeParams& sp,
                                      int aux_id, double b, double c,
                                      double delta,
                                      EffectiveTriangle* out = nullptr) {
  const RouterGeometry rg(a_um, b, c);
  const EffectiveTriangle eff = effective_triangle_from_coefficients(
      router_sites(rg), sp.c_aa(), sp.c_ab(), delta, aux_id,
      /*adiabaticity_factor=*/0.0);
  if (out) *out = eff;
  Eigen::Vector3d r;
  r[0] = to_2pi_mhz(eff.mu[0] - eff.mu[1]) * 1e3;
  r[1] = to_2pi_mhz(eff.j_abs[0] - eff.j_abs[1]) * 1e3;
  r[2] = eff.gamma_tot() + 0.5 * PI;
  return r;
}

}  // namespace detail

// Solve the flux conditions mu_1 = mu_2 (= mu_3 by symmetry),
// |J_12| = |J_23| (= |J_13| by symmetry), gamma_tot = -pi/2 for (b, c, Delta)
// at fixed base length a, by damped Newton iteration with central-difference
// Jacobian. The b = r_24 = r_34 and c = r_12 = r_13 constraints are enforced
// structurally by the isosceles layout.
inline FluxSolution solve_flux_conditions(double a_um, const SchemeParams& sp,
                                          const FluxGuess& guess,
                                          int aux_id = 4, int max_iter = 50) {
  if (!(a_um > 0.0))
    throw std::invalid_argument("solve_flux_conditions: a_um must be > 0");

  const double lo = 0.5 * a_um + 0.05;  // keep sqrt arguments positive
  auto clamp_x = [&](Eigen::Vector3d x) {
    x[0] = std::max(x[0], lo);
    x[1] = std::max(x[1], lo);
    return x;
  };
  auto resid = [&](const Eigen::Vector3d& x, EffectiveTriangle* out = nullptr) {
    return detail::flux_residuals(a_um, sp, aux_id, x[0], x[1], x[2], out);
  };

  Eigen::Vector3d x{guess.b_um, guess.c_um, guess.delta};
  x = clamp_x(x);
  Eigen::Vector3d r = resid(x);
  double best_norm = r.norm();
  Eigen::Vector3d best_x = x;

  int it = 0;
  for (; it < max_iter; ++it) {
    // Convergence: energy residuals relative to the solution scale, phase
    // residual absolute (it is already dimensionless).
    const EffectiveTriangle cur = [&] {
      EffectiveTriangle e;
      resid(x, &e);
      return e;
    }();
    const double mu_scale =
        std::max({std::abs(to_2pi_mhz(cur.mu[0])) * 1e3, 1e-3});
    const double j_scale =
        std::max({std::abs(to_2pi_mhz(cur.j_abs[0])) * 1e3, 1e-3});
    if (std::abs(r[0]) <= 1e-9 * mu_scale && std::abs(r[1]) <= 1e-9 * j_scale &&
        std::abs(r[2]) <= 1e-9)
      break;

    // Central-difference Jacobian, relative step 1e-6.
    Eigen::Matrix3d jac;
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-6 * std::max(std::abs(x[k]), 1.0);
      Eigen::Vector3d xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      xp = clamp_x(xp);
      xm = clamp_x(xm);
      const double span = xp[k] - xm[k];
      if (span == 0.0)
        throw std::runtime_error(
            "solve_flux_conditions: Jacobian column degenerate at the domain "
            "boundary (infeasible iterate)");
      jac.col(k) = (resid(xp) - resid(xm)) / span;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(jac);
    if (!lu.isInvertible())
      throw std::runtime_error(
          "solve_flux_conditions: singular Jacobian; supply a closer initial "
          "guess");
    Eigen::Vector3d step = lu.solve(-r);

    // Cap the raw step to 20% per coordinate (at least 2 absolute units) so
    // a locally steep residual cannot fling the iterate out of the basin.
    double shrink = 1.0;
    for (int k = 0; k < 3; ++k) {
      const double cap = std::max(0.2 * std::abs(x[k]), 2.0);
      if (std::abs(step[k]) > cap) shrink = std::min(shrink, cap / std::abs(step[k]));
    }
    step *= shrink;

    // Backtracking line search on ||r||.
    const double r0 = r.norm();
    double lambda = 1.0;
    Eigen::Vector3d x_new = clamp_x(x + step);
    Eigen::Vector3d r_new = resid(x_new);
    int halvings = 0;
    while (r_new.norm() >= r0 && halvings < 40) {
      lambda *= 0.5;
      x_new = clamp_x(x + lambda * step);
      r_new = resid(x_new);
      ++halvings;
    }
    if (r_new.norm() >= r0) {
      std::ostringstream msg;
      msg << "solve_flux_conditions: line search stalled at residual "
          << r0 << " (b=" << x[0] << ", c=" << x[1]
          << ", delta=" << to_2pi_mhz(x[2]) << " 2pi x MHz)";
      throw std::runtime_error(msg.str());
    }
    x = x_new;
    r = r_new;
    if (r.norm() < best_norm) {
      best_norm = r.norm();
      best_x = x;
    }
  }

  FluxSolution sol;
  sol.b_um = x[0];
  sol.c_um = x[1];
  sol.delta = x[2];
  sol.iterations = it;
  r = resid(x, &sol.at_solution);
  sol.residuals = {r[0], r[1], r[2]};
  sol.residual_norm = r.norm();
  if (it >= max_iter) {
    std::ostringstream msg;
    msg << "solve_flux_conditions: no convergence after " << max_iter
        << " iterations; best residual norm " << best_norm << " at (b="
        << best_x[0] << ", c=" << best_x[1]
        << ", delta=" << to_2pi_mhz(best_x[2]) << " 2pi x MHz)";
    throw std::runtime_error(msg.str());
  }
  sol.b_gauss = sp.b_for_delta(sol.delta);
  return sol;
}

// Circulation-period estimate for an equal-|J| triangle, us.
inline double triangle_period_estimate(double mean_j_abs) {
  if (!(mean_j_abs > 0.0))
    throw std::invalid_argument("triangle_period_estimate: |J| must be > 0");
  return TWO_PI / (std::sqrt(3.0) * mean_j_abs);
}

// Chirality metric over the first circulation period of a population
// trajectory: peak population on the next site in claimed order minus the
// population on the reverse-order site at that moment. Sites are column
// indices {start, next, reverse} into pops (row = time index). The peak is
// the first local maximum of max(P_next, P_rev) above the threshold; if no
// local peak qualifies, the global maximum inside the window is used.
inline double circulation_metric(const std::vector<double>& t_us,
                                 const Eigen::MatrixXd& pops,
                                 const std::array<int, 3>& site_order,
                                 double period_estimate_us,
                                 double threshold = 0.05) {
  if (t_us.size() < 3 ||
      static_cast<Eigen::Index>(t_us.size()) != pops.rows())
    throw std::invalid_argument("circulation_metric: malformed trajectory");
  if (t_us.back() + 1e-12 < period_estimate_us)
    throw std::invalid_argument(
        "circulation_metric: trajectory shorter than one estimated period");
  std::size_t n_window = t_us.size();
  while (n_window > 3 && t_us[n_window - 2] > period_estimate_us) --n_window;
  const int next = site_order[1], rev = site_order[2];
  std::size_t k_peak = 0;
  double m_peak = -1.0;
  bool found = false;
  for (std::size_t k = 1; k + 1 < n_window; ++k) {
    const double m = std::max(pops(k, next), pops(k, rev));
    const double m_prev =
        std::max(pops(k - 1, next), pops(k - 1, rev));
    const double m_next_t =
        std::max(pops(k + 1, next), pops(k + 1, rev));
    if (m >= m_prev && m > m_next_t && m > threshold) {
      k_peak = k;
      found = true;
      break;
    }
  }
  if (!found) {
    for (std::size_t k = 0; k < n_window; ++k) {
      const double m = std::max(pops(k, next), pops(k, rev));
      if (m > m_peak) {
        m_peak = m;
        k_peak = k;
      }
    }
  }
  return pops(k_peak, next) - pops(k_peak, rev);
}

}  // namespace spinroute

// Dipole-dipole interaction: angular channel table, interaction
// coefficients, the full two-atom coupling block, and the truncated
// flip-flop forms.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include <spinroute/geometry.hpp>
#include <spinroute/interaction.hpp>
#include <spinroute/triangle.hpp>
#include <spinroute/units.hpp>

using namespace spinroute;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PairAngles angles_of(double theta, double phi) {
  PairAngles g;
  g.r = 1.0;
  g.cos_theta = std::cos(theta);
  g.sin_theta = std::sin(theta);
  g.phi = phi;
  return g;
}

}  // namespace

TEST_CASE("angular channel table", "[interaction]") {
  const double th = 1.1, ph = 0.7;
  const PairAngles g = angles_of(th, ph);
  const double ct = std::cos(th), st = std::sin(th);

  // dm_tot = 0: the pure (0,0) channel carries the full (1 - 3cos^2),
  // the flip-flop channels (+1,-1)/(-1,+1) carry half of it.
  CHECK_THAT(angular_channel(0, 0, g).real(),
             WithinAbs(1.0 - 3.0 * ct * ct, 1e-14));
  CHECK_THAT(angular_channel(+1, -1, g).real(),
             WithinAbs(0.5 * (1.0 - 3.0 * ct * ct), 1e-14));
  CHECK_THAT(angular_channel(-1, +1, g).real(),
             WithinAbs(0.5 * (1.0 - 3.0 * ct * ct), 1e-14));
  CHECK(angular_channel(0, 0, g).imag() == 0.0);

  // dm_tot = +-1.
  const cplx e_m = std::exp(-I * ph), e_p = std::exp(+I * ph);
  const double f1 = -3.0 / std::sqrt(2.0) * st * ct;
  CHECK_THAT(std::abs(angular_channel(-1, 0, g) - f1 * e_m),
             WithinAbs(0.0, 1e-14));
  CHECK_THAT(std::abs(angular_channel(0, -1, g) - f1 * e_m),
             WithinAbs(0.0, 1e-14));
  CHECK_THAT(std::abs(angular_channel(+1, 0, g) - f1 * e_p),
             WithinAbs(0.0, 1e-14));

  // dm_tot = +-2.
  const double f2 = -1.5 * st * st;
  CHECK_THAT(std::abs(angular_channel(-1, -1, g) - f2 * std::exp(-2.0 * I * ph)),
             WithinAbs(0.0, 1e-14));
  CHECK_THAT(std::abs(angular_channel(+1, +1, g) - f2 * std::exp(+2.0 * I * ph)),
             WithinAbs(0.0, 1e-14));

  CHECK_THROWS_AS(angular_channel(2, 0, g), std::invalid_argument);
}

TEST_CASE("angular channels conjugate under dm negation", "[interaction]") {
  const PairAngles g = angles_of(0.9, 2.1);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      CHECK_THAT(std::abs(angular_channel(di, dj, g) -
                          std::conj(angular_channel(-di, -dj, g))),
                 WithinAbs(0.0, 1e-14));
}

TEST_CASE("magic angle kills the dm_tot = 0 channels", "[interaction]") {
  const double magic = std::acos(1.0 / std::sqrt(3.0));
  const PairAngles g = angles_of(magic, 0.3);
  CHECK_THAT(std::abs(angular_channel(0, 0, g)), WithinAbs(0.0, 1e-14));
  CHECK_THAT(std::abs(angular_channel(+1, -1, g)), WithinAbs(0.0, 1e-14));
}

TEST_CASE("interaction coefficients C_AA and C_AB", "[interaction]") {
  const SpeciesParams rb = rubidium_default();
  const SpeciesParams cs = cesium_default();
  // Frozen: (R_eff/3)^2 * e^2 a0^2/(4 pi eps0 h) with R_eff = R/sqrt(2).
  CHECK_THAT(designated_c_coefficient_mhz_um3(rb, 70, rb, 70),
             WithinAbs(1407.832138, 1e-3));
  CHECK_THAT(designated_c_coefficient_mhz_um3(rb, 70, cs, 71),
             WithinAbs(1387.156315, 1e-3));
  // SchemeParams exposes the same coefficients in rad/us um^3.
  const SchemeParams sp = default_scheme_params();
  CHECK_THAT(to_2pi_mhz(sp.c_aa()), WithinAbs(1407.832138, 1e-3));
  CHECK_THAT(to_2pi_mhz(sp.c_ab()), WithinAbs(1387.156315, 1e-3));
}

TEST_CASE("dipole magnitudes are non-negative and obey selection rules",
          "[interaction]") {
  const SpeciesParams rb = rubidium_default();
  const auto lv = six_levels(70);
  for (const auto& a : lv)
    for (const auto& b : lv) {
      const double m = dipole_magnitude(rb, a, b);
      CHECK(m >= 0.0);
      if (std::abs(b.l - a.l) != 1 || std::abs(b.two_m - a.two_m) > 2)
        CHECK(m == 0.0);
    }
  // Designated |0> -> |1> element: unstretched |C| = 1/3 times R_eff.
  const double r_eff =
      std::abs(radial_dipole(rb, 70, 0, 1, 70, 1, 3)) / std::sqrt(2.0);
  CHECK_THAT(dipole_magnitude(rb, {70, 0, 1, -1}, {70, 1, 3, +1}),
             WithinRel(r_eff / 3.0, 1e-12));
  // Stretched element is sqrt(3) larger.
  CHECK_THAT(dipole_magnitude(rb, {70, 0, 1, +1}, {70, 1, 3, +3}),
             WithinRel(r_eff / std::sqrt(3.0), 1e-12));
}

TEST_CASE("full pair block: hermiticity and r^-3 scaling", "[interaction]") {
  const SpeciesParams rb = rubidium_default();
  const SpeciesParams cs = cesium_default();
  Geometry geom;
  geom.positions[1] = {0.0, 0.0, 6.2};
  geom.positions[2] = {-4.1, 2.5, 0.0};
  const PairCoupling pc = pair_coupling_full(rb, six_levels(70), cs,
                                             six_levels(71), geom, 1, 2);
  REQUIRE(pc.block.rows() == 36);
  REQUIRE(pc.block.cols() == 36);
  CHECK((pc.block - pc.block.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(pc.block.cwiseAbs().maxCoeff() > 0.0);

  // Doubling the separation scales every element by 1/8.
  Geometry geom2;
  geom2.positions[1] = geom.positions[1] * 2.0;
  geom2.positions[2] = geom.positions[2] * 2.0;
  const PairCoupling pc2 = pair_coupling_full(rb, six_levels(70), cs,
                                              six_levels(71), geom, 1, 2);
  const PairCoupling pc8 = pair_coupling_full(rb, six_levels(70), cs,
                                              six_levels(71), geom2, 1, 2);
  CHECK((pc8.block * 8.0 - pc2.block).cwiseAbs().maxCoeff() <
        1e-12 * pc2.block.cwiseAbs().maxCoeff());

  CHECK_THROWS_AS(
      pair_coupling_full(rb, six_levels(70), cs, six_levels(71), geom, 1, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(geom.angles(1, 7), std::invalid_argument);
}

TEST_CASE("full pair block matches the truncated flip-flop element",
          "[interaction]") {
  // <0_i 1_j| V |1_i 0_j> between two main-species atoms must equal
  // pair_coupling_aa exactly (same designated sublevels, same channel).
  const SpeciesParams rb = rubidium_default();
  Geometry geom;
  geom.positions[1] = {0.0, 0.0, 7.5};
  geom.positions[2] = {3.0, -1.0, 2.0};
  const PairAngles ang = geom.angles(1, 2);
  const auto lv = six_levels(70);
  const PairCoupling pc =
      pair_coupling_full(rb, lv, rb, lv, geom, 1, 2);
  // level indices: |0> = S(-1/2) = 0, |1> = P(+1/2) = 4.
  // row = (b_i, d_j) = (|1>, |0>) = 4*6 + 0; col = (a_i, c_j) = (|0>, |1>).
  const cplx full = pc.block(4 * 6 + 0, 0 * 6 + 4);
  const double c_aa = from_2pi_mhz(pc.c_aa_mhz_um3);
  const double trunc =
      pair_coupling_aa(ang.r, std::acos(ang.cos_theta), c_aa);
  CHECK_THAT(std::abs(full - trunc), WithinAbs(0.0, 1e-12 * std::abs(trunc)));
  CHECK(std::abs(full.imag()) < 1e-15 * std::abs(full));
}

TEST_CASE("truncated couplings: formulas and argument checks",
          "[interaction]") {
  const double c = 100.0;
  // In-plane pair (theta = pi/2): J_aa = -c/r^3.
  CHECK_THAT(pair_coupling_aa(2.0, 0.5 * PI, c), WithinRel(-c / 8.0, 1e-12));
  // Axial pair (theta = 0): J_aa = +c/r^3.
  CHECK_THAT(pair_coupling_aa(2.0, 0.0, c), WithinRel(c / 8.0, 1e-12));
  // Magic angle zero.
  CHECK_THAT(pair_coupling_aa(1.0, std::acos(1.0 / std::sqrt(3.0)), c),
             WithinAbs(0.0, 1e-12));
  // AB exchange: modulus (3/2) sin^2 / r^3, phase -2 phi + pi.
  const cplx ab = pair_coupling_ab(2.0, 0.5 * PI, 0.4, c);
  CHECK_THAT(std::abs(ab), WithinRel(1.5 * c / 8.0, 1e-12));
  CHECK_THAT(std::arg(ab), WithinAbs(wrap_pi(PI - 0.8), 1e-12));
  // phi -> phi + pi leaves the AB element invariant (e^{-2 i phi} period).
  const cplx ab2 = pair_coupling_ab(2.0, 0.5 * PI, 0.4 + PI, c);
  CHECK_THAT(std::abs(ab - ab2), WithinAbs(0.0, 1e-12 * std::abs(ab)));
  CHECK_THROWS_AS(pair_coupling_aa(0.0, 1.0, c), std::invalid_argument);
  CHECK_THROWS_AS(pair_coupling_ab(-1.0, 1.0, 0.0, c), std::invalid_argument);
}

TEST_CASE("router geometry invariants", "[interaction]") {
  const RouterGeometry rg(17.0, 9.39, 10.04);
  // Base atoms separated by a; aux equidistant (b) from both base atoms;
  // apex at distance c from both base atoms.
  CHECK_THAT((rg.position(3) - rg.position(2)).norm(), WithinRel(17.0, 1e-12));
  CHECK_THAT((rg.position(4) - rg.position(2)).norm(), WithinRel(9.39, 1e-12));
  CHECK_THAT((rg.position(4) - rg.position(3)).norm(), WithinRel(9.39, 1e-12));
  CHECK_THAT((rg.position(1) - rg.position(2)).norm(), WithinRel(10.04, 1e-12));
  CHECK_THAT((rg.position(1) - rg.position(3)).norm(), WithinRel(10.04, 1e-12));
  // Aux atoms mirror through the triangle plane (y = 0).
  CHECK_THAT((rg.position(4) + rg.position(5)).norm(), WithinAbs(0.0, 1e-12));
  // Degenerate geometries are rejected with named errors.
  CHECK_THROWS_AS(RouterGeometry(17.0, 8.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(RouterGeometry(17.0, 9.4, 8.0), std::invalid_argument);
  CHECK_THROWS_AS(RouterGeometry(-1.0, 9.4, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(rg.position(6), std::invalid_argument);
}

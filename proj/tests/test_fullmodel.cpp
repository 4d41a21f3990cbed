// Full multilevel router: basis bookkeeping, Hamiltonian assembly,
// truncation consistency with the two-level forms, decay accounting,
// level-shift compensation, Schur-complement triangle, the protocol
// propagator, and the full-model chirality metric.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include <spinroute/basis.hpp>
#include <spinroute/fullmodel.hpp>
#include <spinroute/triangle.hpp>
#include <spinroute/units.hpp>

using namespace spinroute;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MultilevelBasis router_basis() {
  const SpeciesParams rb = rubidium_default();
  const SpeciesParams cs = cesium_default();
  const SixLevelAtom m = main_atom(rb, 70);
  const SixLevelAtom a = aux_atom(cs, 71);
  return MultilevelBasis({m, m, m, a});
}

std::vector<Vec3> router_positions(const RouterGeometry& rg, int aux_id) {
  return {rg.position(1), rg.position(2), rg.position(3),
          rg.position(aux_id)};
}

}  // namespace

TEST_CASE("basis dimension is A * 4 * 2^(A-1)", "[fullmodel]") {
  const SixLevelAtom m = main_atom(rubidium_default(), 70);
  CHECK(MultilevelBasis({m}).size() == 4);
  CHECK(MultilevelBasis({m, m}).size() == 16);
  CHECK(MultilevelBasis({m, m, m}).size() == 48);
  CHECK(router_basis().size() == 128);
  CHECK(MultilevelBasis({m, m, m, m, m}).size() == 320);
  CHECK_THROWS_AS(MultilevelBasis(std::vector<SixLevelAtom>{}),
                  std::invalid_argument);
}

TEST_CASE("basis index/state round trip", "[fullmodel]") {
  const MultilevelBasis basis = router_basis();
  for (int idx = 0; idx < basis.size(); ++idx) {
    const BasisState s = basis.state(idx);
    REQUIRE(s.excited >= 0);
    REQUIRE(s.excited < 4);
    REQUIRE(s.upper >= 0);
    REQUIRE(s.upper < 4);
    REQUIRE(s.lows.size() == 3);
    unsigned bits = 0;
    for (std::size_t k = 0; k < s.lows.size(); ++k)
      bits |= static_cast<unsigned>(s.lows[k]) << (2 - k);
    CHECK(basis.index(s.excited, s.upper, bits) == idx);
  }
  CHECK_THROWS_AS(basis.state(128), std::out_of_range);
  CHECK_THROWS_AS(basis.state(-1), std::out_of_range);
}

TEST_CASE("designated states carry the working sublevels", "[fullmodel]") {
  const MultilevelBasis basis = router_basis();
  for (int e = 0; e < 4; ++e) {
    const BasisState s = basis.state(basis.designated_state(e));
    CHECK(s.excited == e);
    CHECK(s.upper == basis.atoms()[e].designated_upper);
    const auto others = basis.others(e);
    for (std::size_t k = 0; k < others.size(); ++k)
      CHECK(s.lows[k] == basis.atoms()[others[k]].designated_low);
  }
  // Main atoms: |0> = S(-1/2), |1> = P(+1/2); aux: |-> = S(+1/2),
  // |+> = P(-1/2).
  CHECK(basis.atoms()[0].designated_low == 0);
  CHECK(basis.atoms()[0].designated_upper == 2);
  CHECK(basis.atoms()[3].designated_low == 1);
  CHECK(basis.atoms()[3].designated_upper == 1);
}

TEST_CASE("full Hamiltonian: hermiticity and zeroed reference diagonal",
          "[fullmodel]") {
  const MultilevelBasis basis = router_basis();
  const RouterGeometry rg(17.0, 9.39, 10.04);
  const Eigen::MatrixXcd h =
      build_full_hamiltonian(basis, router_positions(rg, 4), 45.0);
  REQUIRE(h.rows() == 128);
  const double scale = h.cwiseAbs().maxCoeff();
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12 * scale);
  // All three main designated states are degenerate with the reference.
  for (int k = 0; k < 3; ++k)
    CHECK_THAT(h(basis.designated_state(k), basis.designated_state(k)).real(),
               WithinAbs(0.0, 1e-6));
  // The aux-excited designated state sits at the detuning Delta(B).
  // (tolerance reflects the cancellation of ~1e6 rad/us level sums down to
  // the ~3e2 rad/us detuning)
  const SchemeParams sp = default_scheme_params();
  CHECK_THAT(h(basis.designated_state(3), basis.designated_state(3)).real(),
             WithinRel(sp.delta_at(45.0), 1e-8));
  CHECK_THROWS_AS(
      build_full_hamiltonian(basis, {rg.position(1), rg.position(2)}, 45.0),
      std::invalid_argument);
}

TEST_CASE("full Hamiltonian reduces to the truncated couplings on the "
          "designated subspace",
          "[fullmodel]") {
  const MultilevelBasis basis = router_basis();
  const RouterGeometry rg(17.0, 9.39, 10.04);
  const int aux_id = 4;
  const Eigen::MatrixXcd h =
      build_full_hamiltonian(basis, router_positions(rg, aux_id), 45.0);
  const SchemeParams sp = default_scheme_params();
  const Geometry geom = router_sites(rg);

  // Main-main designated elements equal the two-level flip-flop amplitude.
  const std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {1, 2}, {0, 2}}};
  for (const auto& [i, j] : pairs) {
    const PairAngles ang = geom.angles(i + 1, j + 1);
    const double expect =
        pair_coupling_aa(ang.r, std::acos(ang.cos_theta), sp.c_aa());
    const cplx got = h(basis.designated_state(i), basis.designated_state(j));
    CHECK_THAT(std::abs(got - expect), WithinAbs(0.0, 1e-12 * std::abs(expect)));
  }
  // Main-aux designated elements equal the conjugated exchange amplitude
  // <d_i|H|d_aux> = <1_i, -_aux|V|0_i, +_aux> = conj(pair_coupling_ab).
  for (int i = 0; i < 3; ++i) {
    const PairAngles ang = geom.angles(i + 1, aux_id);
    const cplx expect = std::conj(pair_coupling_ab(
        ang.r, std::acos(ang.cos_theta), ang.phi, sp.c_ab()));
    const cplx got = h(basis.designated_state(i), basis.designated_state(3));
    CHECK_THAT(std::abs(got - expect), WithinAbs(0.0, 1e-12 * std::abs(expect)));
  }
}

TEST_CASE("decay model aggregates to the working totals", "[fullmodel]") {
  CHECK_THAT(gamma_total(DecayModel::at_temperature(0.0)),
             WithinRel(1.0 / 62.0, 1e-3));
  CHECK_THAT(gamma_total(DecayModel::at_temperature(77.0)),
             WithinRel(1.0 / 45.0, 1e-3));
  CHECK_THAT(gamma_total(DecayModel::at_temperature(300.0)),
             WithinRel(1.0 / 24.0, 1e-3));
  CHECK_THROWS_AS(DecayModel::at_temperature(50.0), std::invalid_argument);
  CHECK_THAT(gamma_total(DecayModel::uniform_total(0.02)),
             WithinRel(0.02, 1e-12));
  DecayModel bad;
  bad.rb_s_per_us = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("per-state decay rates", "[fullmodel]") {
  RouterConfig cfg;
  const RouterModel model(cfg);
  const DecayModel d = DecayModel::at_temperature(0.0);

  const auto uniform = model.decay_rates(d, true);
  REQUIRE(static_cast<int>(uniform.size()) == model.dim());
  for (double g : uniform) CHECK_THAT(g, WithinRel(gamma_total(d), 1e-12));

  // Finer mode: every main-excited and boundary-excited state carries
  // exactly the aggregate total; aux-excited states swap cs_p for
  // (rb_p + cs_s - rb_s) relative to it.
  const auto finer = model.decay_rates(d, false);
  const double tot = gamma_total(d);
  const double aux_tot = d.cs_p_per_us + 6.0 * d.rb_s_per_us;
  for (int k = 0; k < model.basis().size(); ++k) {
    const BasisState s = model.basis().state(k);
    if (s.excited == 3)
      CHECK_THAT(finer[k], WithinRel(aux_tot, 1e-12));
    else
      CHECK_THAT(finer[k], WithinRel(tot, 1e-12));
  }
  for (int k = model.basis().size(); k < model.dim(); ++k)
    CHECK_THAT(finer[k], WithinRel(tot, 1e-12));
}

TEST_CASE("level-shift compensation shifts exactly the designated upper "
          "levels",
          "[fullmodel]") {
  const MultilevelBasis basis = router_basis();
  const RouterGeometry rg(17.0, 9.39, 10.04);
  Eigen::MatrixXcd h =
      build_full_hamiltonian(basis, router_positions(rg, 4), 45.0);
  const Eigen::MatrixXcd h0 = h;

  compensate_level_shifts(basis, h, {0.0, 0.0, 0.0});
  CHECK((h - h0).cwiseAbs().maxCoeff() == 0.0);  // mu = 0 is the identity

  const std::array<double, 3> mu{0.3, -0.7, 1.1};
  compensate_level_shifts(basis, h, mu);
  const Eigen::MatrixXcd diff = h - h0;
  // Off-diagonal untouched; exactly 8 diagonal entries per triangle atom.
  CHECK((diff - Eigen::MatrixXcd(diff.diagonal().asDiagonal()))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  int shifted = 0;
  for (int k = 0; k < basis.size(); ++k) {
    const double dk = diff(k, k).real();
    if (dk == 0.0) continue;
    ++shifted;
    const BasisState s = basis.state(k);
    REQUIRE(s.excited < 3);
    CHECK(s.upper == basis.atoms()[s.excited].designated_upper);
    CHECK_THAT(dk, WithinRel(-mu[s.excited], 1e-12));
  }
  CHECK(shifted == 24);  // 3 atoms x 2^3 spectator configurations
}

TEST_CASE("network-form compensation subtracts the onsite shifts",
          "[fullmodel]") {
  FluxTriangle tri{1.0, 1.0, 1.0, 0.4, 0.5, 0.6};
  SpinNetwork net = router_network(1, 1, tri, 1.0);
  const SpinNetwork comp =
      compensate_level_shifts(net, {0.4, 0.5, 0.6});
  for (const char* label : {"1", "2", "3"})
    CHECK_THAT(comp.sites()[comp.index_of(label)].onsite, WithinAbs(0.0, 1e-15));
  // Non-triangle sites untouched.
  CHECK(comp.sites()[comp.index_of("L1")].onsite ==
        net.sites()[net.index_of("L1")].onsite);
}

TEST_CASE("Schur complement on an analytic arrow matrix", "[fullmodel]") {
  // H = [0 0 0 v; 0 0 0 v; 0 0 0 v; v v v D]: eliminating the last state
  // gives exactly -(v^2/D) on every designated element.
  const double v = 0.3, d = 2.0;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 4);
  h(0, 3) = h(1, 3) = h(2, 3) = v;
  h(3, 0) = h(3, 1) = h(3, 2) = v;
  h(3, 3) = d;
  const Eigen::Matrix3cd s = schur_complement_triangle(h, {0, 1, 2});
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      CHECK_THAT(std::abs(s(a, b) - cplx{-v * v / d, 0.0}),
                 WithinAbs(0.0, 1e-14));
}

TEST_CASE("router model: dimensions, boundary indices, Schur triangle at the "
          "transfer working point",
          "[fullmodel]") {
  // Frozen full-model working point (flux conditions solved on the Schur
  // triangle of the compensated block): b = 8.7781 um, c = 13.1322 um,
  // B = 47.9341 G.
  RouterConfig cfg;
  cfg.b_um = 8.7781;
  cfg.c_um = 13.1322;
  cfg.b_gauss = 47.9341;
  cfg.aux_id = 4;
  const RouterModel model(cfg);
  CHECK(model.dim() == 131);
  CHECK(model.sender() == 128);
  CHECK(model.receiver_left() == 129);
  CHECK(model.receiver_right() == 130);

  const Eigen::Matrix3cd h3 = model.schur_triangle();
  const double gamma_tot =
      wrap_pi(-std::arg(h3(0, 1) * h3(1, 2) * std::conj(h3(0, 2))));
  CHECK_THAT(gamma_tot, WithinAbs(+PI / 2.0, 2e-3));
  // Uniform all-order couplings |J| = 2pi x 206.9 kHz.
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      CHECK_THAT(to_2pi_mhz(std::abs(h3(a, b))) * 1e3,
                 WithinAbs(206.9, 0.5));
  // Compensation leaves the Schur diagonal uniform (flux residual solved).
  const double d0 = h3(0, 0).real();
  CHECK_THAT(h3(1, 1).real(), WithinAbs(d0, from_2pi_mhz(2e-4)));
  CHECK_THAT(h3(2, 2).real(), WithinAbs(d0, from_2pi_mhz(2e-4)));

  // Mirror auxiliary flips the all-order chirality too.
  RouterConfig cfg5 = cfg;
  cfg5.aux_id = 5;
  const RouterModel model5(cfg5);
  const Eigen::Matrix3cd g3 = model5.schur_triangle();
  const double gamma5 =
      wrap_pi(-std::arg(g3(0, 1) * g3(1, 2) * std::conj(g3(0, 2))));
  CHECK_THAT(gamma5, WithinAbs(-PI / 2.0, 2e-3));

  RouterConfig bad = cfg;
  bad.aux_id = 6;
  CHECK_THROWS_AS(RouterModel(bad), std::invalid_argument);
}

TEST_CASE("router run: zero drive keeps the sender state", "[fullmodel]") {
  RouterConfig cfg;
  const RouterModel model(cfg);
  RouterRunOptions opt;
  opt.dt_us = 0.01;
  const RouterRunResult r = run_router(model, {1.0, 2.0, 0.0}, opt);
  CHECK_THAT(r.final_sender, WithinAbs(1.0, 1e-12));
  CHECK_THAT(r.final_norm, WithinAbs(1.0, 1e-12));
  CHECK(r.max_left == 0.0);
  CHECK(r.max_right == 0.0);
  CHECK_THROWS_AS(run_router(model, {3.0, 2.0, 0.0}, opt),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_router(model, {1.0, 0.0, 0.0}, opt),
                  std::invalid_argument);
}

TEST_CASE("router run conserves the norm without decay", "[fullmodel]") {
  RouterConfig cfg;
  cfg.b_um = 8.7781;
  cfg.c_um = 13.1322;
  cfg.b_gauss = 47.9341;
  const RouterModel model(cfg);
  RouterPulses pulses{9.0, 10.0, from_2pi_mhz(0.06)};
  RouterRunOptions opt;
  opt.dt_us = 0.005;
  const RouterRunResult r = run_router(model, pulses, opt);
  for (double n : r.norm) CHECK_THAT(n, WithinAbs(1.0, 1e-9));
  // Populations move out of the sender under the drive.
  CHECK(r.final_sender < 1.0);
}

TEST_CASE("uniform decay produces exactly exp(-Gamma T)", "[fullmodel]") {
  RouterConfig cfg;
  const RouterModel model(cfg);
  RouterPulses pulses{4.0, 5.0, from_2pi_mhz(0.05)};
  RouterRunOptions opt;
  opt.dt_us = 0.01;
  opt.decay = DecayModel::uniform_total(1.0 / 62.0);
  opt.uniform_decay = true;
  const RouterRunResult r = run_router(model, pulses, opt);
  CHECK_THAT(r.final_norm, WithinRel(std::exp(-5.0 / 62.0), 1e-9));
}

TEST_CASE("superposition run is the weighted direct sum of the branches",
          "[fullmodel]") {
  RouterConfig cfg5;
  cfg5.aux_id = 5;
  RouterConfig cfg4;
  cfg4.aux_id = 4;
  const RouterModel m5(cfg5), m4(cfg4);
  const RouterPulses pulses{1.8, 2.0, from_2pi_mhz(0.05)};
  RouterRunOptions opt;
  opt.dt_us = 0.01;
  const cplx alpha{0.6, 0.0}, beta{0.0, 0.8};

  const RouterRunResult joint =
      run_router_superposition(m5, m4, alpha, beta, pulses, opt);
  const RouterRunResult r5 = run_router(m5, pulses, opt);
  const RouterRunResult r4 = run_router(m4, pulses, opt);

  REQUIRE(joint.t_us.size() == r5.t_us.size());
  const double w5 = std::norm(alpha), w4 = std::norm(beta);
  for (std::size_t k = 0; k < joint.t_us.size(); ++k) {
    CHECK_THAT(joint.pop_left[k],
               WithinAbs(w5 * r5.pop_left[k] + w4 * r4.pop_left[k], 1e-12));
    CHECK_THAT(joint.pop_right[k],
               WithinAbs(w5 * r5.pop_right[k] + w4 * r4.pop_right[k], 1e-12));
    CHECK_THAT(joint.norm[k],
               WithinAbs(w5 * r5.norm[k] + w4 * r4.norm[k], 1e-12));
  }
  // The joint state is the weighted concatenation of the branch states.
  CHECK(joint.final_state.size() == m5.dim() + m4.dim());
  const double d5 = (joint.final_state.head(m5.dim()) -
                     alpha * r5.final_state)
                        .norm();
  const double d4 = (joint.final_state.tail(m4.dim()) -
                     beta * r4.final_state)
                        .norm();
  CHECK_THAT(d5, WithinAbs(0.0, 1e-12));
  CHECK_THAT(d4, WithinAbs(0.0, 1e-12));

  // Argument order and normalization are enforced.
  CHECK_THROWS_AS(run_router_superposition(m4, m5, alpha, beta, pulses, opt),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      run_router_superposition(m5, m4, {1.0, 0.0}, {1.0, 0.0}, pulses, opt),
      std::invalid_argument);
}

TEST_CASE("full-model circulation metric at the unoptimized working point",
          "[fullmodel]") {
  // Frozen: the effective-model flux solution evaluated on the raw 128-state
  // model at the published field gives a first-peak metric of -0.1346 (the
  // second-order phases overshoot at all orders; optimization is required).
  const double m = full_circulation_metric(17.0, 9.39, 10.04, 26.84,
                                           default_scheme_params(), 4);
  CHECK_THAT(m, WithinAbs(-0.1346, 1e-3));
}

TEST_CASE("geometry optimizer is deterministic", "[fullmodel]") {
  NelderMeadOptions nm;
  nm.max_evaluations = 25;
  const std::array<double, 3> x0{9.39, 10.04, 26.84};
  const OptimizeResult a =
      optimize_geometry(OptimizeObjective::circulation_metric, 17.0,
                        default_scheme_params(), 4, x0, {}, nm);
  const OptimizeResult b =
      optimize_geometry(OptimizeObjective::circulation_metric, 17.0,
                        default_scheme_params(), 4, x0, {}, nm);
  CHECK(a.evaluations == b.evaluations);
  CHECK(a.score == b.score);
  CHECK(a.b_um == b.b_um);
  CHECK(a.c_um == b.c_um);
  CHECK(a.b_gauss == b.b_gauss);
  REQUIRE(a.log.size() == b.log.size());
  CHECK(a.evaluations <= nm.max_evaluations);
  CHECK(a.score >= -0.14);  // never worse than the starting point
  // The log tracks the best-so-far score monotonically.
  for (std::size_t k = 1; k < a.log.size(); ++k)
    CHECK(a.log[k].best_score >= a.log[k - 1].best_score);
}

// The published optimized coordinates (b = 12.25 um, c = 9.83 um,
// B = 46.38 G) are quoted together with a detuning our affine Zeeman model
// does not reproduce at that field; evaluating the raw model there gives a
// negative metric (-0.29), not the published positive chirality. Expected
// failure, documented in the README.
TEST_CASE("published optimized point has positive chirality (known deviation)",
          "[fullmodel][!shouldfail]") {
  const double m = full_circulation_metric(17.0, 12.25, 9.83, 46.38,
                                           default_scheme_params(), 4);
  CHECK(m > 0.0);
}

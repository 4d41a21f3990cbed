// Protocol layer: the auxiliary-selection blockade gate (ideal and finite
// blockade), the composed control -> receiver routing map, and the abstract
// boundary pulse schedule.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include <spinroute/protocols.hpp>
#include <spinroute/units.hpp>

using namespace spinroute;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

int joint(int i4, int i5) { return 3 * i4 + i5; }
int ridx(int c, int nl, int nr) { return (c << 2) | (nl << 1) | nr; }

RouterRunResult synthetic_run(cplx left, cplx right) {
  RouterRunResult r;
  r.t_us = {0.0, 1.0};
  r.final_state = Eigen::VectorXcd::Zero(4);
  r.final_left_amp = left;
  r.final_right_amp = right;
  r.final_left = std::norm(left);
  r.final_right = std::norm(right);
  return r;
}

}  // namespace

TEST_CASE("ideal blockade gate maps the control exactly", "[protocols]") {
  // i4 = 0,1,2 <-> |g>, |e>, |->; joint index 3 i4 + i5.
  for (double theta : {0.0, 0.3, 0.7853981633974483, 1.2, 1.5707963267948966}) {
    for (double phi : {0.0, 0.9, -2.2}) {
      const ControlQubit q{std::cos(theta),
                           std::sin(theta) * std::polar(1.0, phi)};
      const BlockadeGateResult g = blockade_gate(q, 0.0, 0.0,
                                                 BlockadeMode::ideal);
      CHECK(g.distance < 1e-12);
      CHECK_THAT(g.fidelity, WithinAbs(1.0, 1e-12));
      CHECK(g.leakage == 0.0);
      // i alpha |g,->  +  i beta |-, e>
      CHECK(std::abs(g.state[joint(0, 2)] - I * q.alpha) < 1e-15);
      CHECK(std::abs(g.state[joint(2, 1)] - I * q.beta) < 1e-15);
    }
  }
}

TEST_CASE("blockade gate input validation", "[protocols]") {
  CHECK_THROWS_AS(blockade_gate(ControlQubit{0.9, 0.1}, 1.0, 1.0,
                                BlockadeMode::ideal),
                  std::invalid_argument);
  const ControlQubit ok{1.0, 0.0};
  CHECK_THROWS_AS(blockade_gate(ok, 0.0, 1.0, BlockadeMode::finite_blockade),
                  std::invalid_argument);
  CHECK_THROWS_AS(blockade_gate(ok, 1.0, 0.0, BlockadeMode::finite_blockade),
                  std::invalid_argument);
  CHECK_THROWS_AS((PulseOp{"s", "g", "0", 0.0, 0.0}.validate()),
                  std::invalid_argument);
}

TEST_CASE("finite blockade: frozen leakage and fidelity values",
          "[protocols]") {
  // Balanced control, V = 2 pi x 30 MHz. The imperfection depends only on
  // Omega/V; frozen values for ratios {0.2, 0.1, 0.05}.
  const double v = from_2pi_mhz(30.0);
  const ControlQubit q{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
  const double ratios[] = {0.2, 0.1, 0.05};
  const double leak_ref[] = {1.876927e-2, 3.032329e-5, 1.919464e-6};
  const double fid_ref[] = {0.974987, 0.998451, 0.999614};
  double prev_leak = 1.0, prev_fid = 0.0;
  for (int k = 0; k < 3; ++k) {
    const BlockadeGateResult g =
        blockade_gate(q, v, ratios[k] * v, BlockadeMode::finite_blockade);
    CHECK_THAT(g.leakage, WithinRel(leak_ref[k], 1e-4));
    CHECK_THAT(g.fidelity, WithinAbs(fid_ref[k], 2e-6));
    CHECK(g.leakage < prev_leak);   // stronger blockade leaks less
    CHECK(g.fidelity > prev_fid);
    prev_leak = g.leakage;
    prev_fid = g.fidelity;
  }
}

TEST_CASE("finite blockade: sector structure", "[protocols]") {
  const double v = from_2pi_mhz(30.0);
  // The |g> sector sees a resonant pi-pulse with no blockade shift, so a
  // pure-alpha control is transferred exactly for any Omega.
  const BlockadeGateResult ga = blockade_gate(ControlQubit{1.0, 0.0}, v,
                                              0.3 * v,
                                              BlockadeMode::finite_blockade);
  CHECK(ga.distance < 1e-12);
  CHECK(ga.leakage < 1e-24);
  // All leakage comes from the beta sector: quadratic in |beta|.
  const BlockadeGateResult gb = blockade_gate(ControlQubit{0.0, 1.0}, v,
                                              0.2 * v,
                                              BlockadeMode::finite_blockade);
  const BlockadeGateResult gh =
      blockade_gate(ControlQubit{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)},
                    v, 0.2 * v, BlockadeMode::finite_blockade);
  CHECK_THAT(gb.leakage, WithinRel(2.0 * gh.leakage, 1e-9));
}

TEST_CASE("blockade interaction strength", "[protocols]") {
  CHECK_THAT(blockade_interaction(8.0, 2.0, 3), WithinRel(1.0, 1e-15));
  CHECK_THAT(blockade_interaction(64.0, 2.0, 6), WithinRel(1.0, 1e-15));
  CHECK(blockade_interaction(100.0, 10.0, 6) <
        blockade_interaction(100.0, 10.0, 3));
  CHECK_THROWS_AS(blockade_interaction(1.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(blockade_interaction(1.0, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(blockade_interaction(1.0, -2.0, 6), std::invalid_argument);
}

TEST_CASE("routing map: perfect branch runs give the target state",
          "[protocols]") {
  const cplx alpha{0.6, 0.0}, beta{0.0, 0.8};
  const ControlQubit q{alpha, beta};
  // alpha branch (auxiliary 5 active) must deliver the right receiver,
  // beta branch (auxiliary 4) the left one.
  const RoutingMapResult m = full_routing_map(
      q, synthetic_run(0.0, 1.0), synthetic_run(1.0, 0.0));
  CHECK(m.distance < 1e-12);
  CHECK_THAT(m.fidelity, WithinAbs(1.0, 1e-12));
  CHECK_THAT(m.lost_norm, WithinAbs(0.0, 1e-12));
  CHECK(std::abs(m.state[ridx(0, 0, 1)] - (-alpha)) < 1e-15);
  CHECK(std::abs(m.state[ridx(1, 1, 0)] - (-beta)) < 1e-15);
  CHECK(m.routed_aux5 == 1);
  CHECK(m.routed_aux4 == 0);
}

TEST_CASE("routing map: global branch phases leave the fidelity intact",
          "[protocols]") {
  const double r2 = 1.0 / std::sqrt(2.0);
  const ControlQubit q{r2, r2};
  const cplx a5 = std::polar(1.0, -PI / 2.0);  // both branches arrive as -i
  const RoutingMapResult m = full_routing_map(
      q, synthetic_run(0.0, a5), synthetic_run(a5, 0.0));
  CHECK_THAT(m.fidelity, WithinAbs(1.0, 1e-12));
  CHECK_THAT(m.distance, WithinAbs(std::sqrt(2.0), 1e-9));  // phase-exact
  CHECK_THAT(m.zeta_aux5, WithinAbs(-PI / 2.0, 1e-12));
  CHECK_THAT(m.zeta_aux4, WithinAbs(-PI / 2.0, 1e-12));
  // Oppositely routed branches maximally entangle the control with the
  // receivers: the reduced control state is an even mixture.
  CHECK_THAT(m.purity, WithinAbs(0.5, 1e-12));
  CHECK_THAT(m.entropy_bits, WithinAbs(1.0, 1e-9));
}

TEST_CASE("routing map: identical routing keeps the control pure",
          "[protocols]") {
  const double r2 = 1.0 / std::sqrt(2.0);
  const ControlQubit q{r2, r2};
  // Both branches deliver the right receiver: no which-path information.
  const RoutingMapResult m = full_routing_map(
      q, synthetic_run(0.0, 1.0), synthetic_run(0.0, 1.0));
  CHECK_THAT(m.purity, WithinAbs(1.0, 1e-12));
  CHECK_THAT(m.entropy_bits, WithinAbs(0.0, 1e-9));
  // Only the alpha component overlaps the target.
  CHECK_THAT(m.fidelity, WithinAbs(0.25, 1e-12));
  CHECK(m.routed_aux4 == 1);
}

TEST_CASE("routing map: incomplete transfer is reported as lost norm",
          "[protocols]") {
  const double r2 = 1.0 / std::sqrt(2.0);
  const ControlQubit q{r2, r2};
  const RoutingMapResult m = full_routing_map(
      q, synthetic_run(0.0, 0.8), synthetic_run(0.6, 0.0));
  CHECK_THAT(m.lost_norm, WithinAbs(0.5, 1e-12));
  CHECK_THAT(std::abs(m.overlap), WithinAbs(0.7, 1e-12));
  CHECK_THAT(m.fidelity, WithinAbs(0.49, 1e-12));
  CHECK_THAT(m.distance, WithinAbs(std::sqrt(0.5 * (0.04 + 0.16)), 1e-12));
}

TEST_CASE("routing map: missing branch runs are rejected", "[protocols]") {
  const ControlQubit q{1.0, 0.0};
  const RouterRunResult good = synthetic_run(0.0, 1.0);
  CHECK_THROWS_AS(full_routing_map(q, RouterRunResult{}, good),
                  std::invalid_argument);
  CHECK_THROWS_AS(full_routing_map(q, good, RouterRunResult{}),
                  std::invalid_argument);
  RouterRunResult no_state = good;
  no_state.final_state.resize(0);
  CHECK_THROWS_AS(full_routing_map(q, no_state, good), std::invalid_argument);
}

TEST_CASE("boundary pulse schedule", "[protocols]") {
  const double tm = 1.5, T = 2.0, peak = from_2pi_mhz(0.1);
  const cplx c0{0.6, 0.0}, c1{0.0, 0.8};
  const BoundarySchedule s = sender_receiver_pulses(
      c0, c1, sender_ramp(tm, T, peak), receiver_ramp(tm, T, peak));
  CHECK_THAT(s.active_weight, WithinAbs(0.64, 1e-15));
  REQUIRE(s.opening.size() == 2);
  REQUIRE(s.closing.size() == 2);
  // Opening moves the transferable component into the network-facing level
  // on the sender; closing stores the arrival on the receiver.
  CHECK(s.opening[0].target == "s");
  CHECK(s.opening[0].from == "g");
  CHECK(s.opening[0].to == "0");
  CHECK(s.opening[1].from == "e");
  CHECK(s.opening[1].to == "1");
  CHECK(s.closing[0].target == "r");
  CHECK(s.closing[0].from == "1");
  CHECK(s.closing[0].to == "e");
  CHECK(s.closing[1].from == "0");
  CHECK(s.closing[1].to == "g");
  for (const PulseOp& op : s.opening) CHECK(op.area_rad == PI);
  // The network-layer couplings inherit the laser envelopes unchanged.
  CHECK(s.sender_coupling.kind == PulseKind::ramp_on);
  CHECK(s.receiver_coupling.kind == PulseKind::ramp_off);
  CHECK(s.sender_coupling.t_m_us == tm);
  CHECK(s.sender_coupling.T_us == T);
  CHECK(s.sender_coupling.peak == peak);
  CHECK_THROWS_AS(
      sender_receiver_pulses(c0, c1, sender_ramp(tm, T, peak),
                             PulseProfile{PulseKind::ramp_off, 3.0, 2.0, 1.0}),
      std::invalid_argument);
}

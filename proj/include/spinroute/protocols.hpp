#pragma once
// State-preparation and readout protocols around the router: the two-atom
// blockade gate that selects the active auxiliary atom, the composition of
// branch router runs into the final control-receiver map, and the abstract
// pulse schedule that realizes the boundary couplings J_s(t), J_r(t).

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullmodel.hpp"
#include "pulses.hpp"
#include "units.hpp"

namespace spinroute {

// ------------------------------------------------------------- pulse types

// One abstract laser pulse of the protocol layer. Ideal pulses are
// instantaneous unitaries; a finite Rabi frequency only matters when a
// blockade interaction is declared alongside it.
struct PulseOp {
  std::string target;  // atom id, e.g. "4", "5", "s", "rL"
  std::string from, to;
  double area_rad = PI;
  double rabi = 0.0;  // rad/us; 0 = ideal (instantaneous)

  void validate() const {
    if (!(area_rad > 0.0))
      throw std::invalid_argument("pulse: area must be > 0");
  }
};

// Control qubit encoded in the ground-state sublevels of atom 4.
struct ControlQubit {
  cplx alpha{1.0, 0.0};  // |g>_4 amplitude
  cplx beta{0.0, 0.0};   // |e>_4 amplitude

  void validate(double tol = 1e-9) const {
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > tol)
      throw std::invalid_argument("control qubit: unnormalized control");
  }
};

// ------------------------------------------------------------ blockade gate

// Gate levels per atom: |g> (storage ground state), |e> (launch state),
// |-> (the auxiliary working state). Joint index 3*i4 + i5, atom 4 major.
enum class BlockadeMode { ideal, finite_blockade };

namespace detail {
constexpr int kG = 0, kE = 1, kM = 2;
inline int joint45(int i4, int i5) { return 3 * i4 + i5; }
}  // namespace detail

// Diagonal blockade shift V = C_nu / r^nu between |->_4 |->_5 for static
// dipole-dipole (nu = 3) or van der Waals (nu = 6) interactions. rad/us for
// c_nu in rad/us um^nu.
inline double blockade_interaction(double c_nu, double r_um, int nu) {
  if (nu != 3 && nu != 6)
    throw std::invalid_argument("blockade: exponent nu must be 3 or 6");
  if (!(r_um > 0.0))
    throw std::invalid_argument("blockade: separation must be > 0");
  return c_nu / std::pow(r_um, nu);
}

struct BlockadeGateResult {
  Eigen::VectorXcd state;   // 9-dim joint state of atoms 4, 5
  Eigen::VectorXcd target;  // i alpha |g,-> + i beta |-,e>
  double leakage = 0.0;     // population of |->_4 |->_5
  double fidelity = 0.0;    // |<target|state>|^2
  double distance = 0.0;    // ||state - target||, phase-exact
};

// Auxiliary-selection gate: starting from (alpha|g> + beta|e>)_4 x |e>_5,
// step (i) is a pi-pulse on atom 4's (|e>,|->) pair, step (ii) a pi-pulse on
// atom 5's pair that the interaction V on |->|-> blocks whenever atom 4 was
// transferred to |->. The pi-pulse convention is U|e> = i|->, U|-> = i|e>
// (H = -(Omega/2) sigma_x for t = pi/Omega).
inline BlockadeGateResult blockade_gate(const ControlQubit& control, double v,
                                        double omega, BlockadeMode mode) {
  using namespace detail;
  control.validate();
  if (mode == BlockadeMode::finite_blockade) {
    if (!(v > 0.0))
      throw std::invalid_argument("blockade: finite_blockade requires V > 0");
    if (!(omega > 0.0))
      throw std::invalid_argument(
          "blockade: finite_blockade requires Omega > 0");
  }

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(9);
  psi[joint45(kG, kE)] = control.alpha;
  psi[joint45(kE, kE)] = control.beta;

  // Step (i): ideal pi-pulse on atom 4, (e, -) pair.
  Eigen::MatrixXcd u1 = Eigen::MatrixXcd::Identity(9, 9);
  for (int i5 = 0; i5 < 3; ++i5) {
    const int a = joint45(kM, i5), b = joint45(kE, i5);
    u1(a, a) = u1(b, b) = 0.0;
    u1(a, b) = u1(b, a) = I;
  }
  psi = u1 * psi;

  if (mode == BlockadeMode::ideal) {
    // Step (ii): pi-pulse on atom 5, perfectly blocked for atom 4 in |->.
    Eigen::MatrixXcd u2 = Eigen::MatrixXcd::Identity(9, 9);
    for (int i4 : {kG, kE}) {
      const int a = joint45(i4, kM), b = joint45(i4, kE);
      u2(a, a) = u2(b, b) = 0.0;
      u2(a, b) = u2(b, a) = I;
    }
    psi = u2 * psi;
  } else {
    // Step (ii): driven two-atom dynamics with the diagonal blockade shift.
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(9, 9);
    for (int i4 = 0; i4 < 3; ++i4) {
      const int a = joint45(i4, kM), b = joint45(i4, kE);
      h(a, b) = h(b, a) = -0.5 * omega;
    }
    h(joint45(kM, kM), joint45(kM, kM)) += v;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const double t = PI / omega;
    Eigen::VectorXcd modal = es.eigenvectors().adjoint() * psi;
    for (int k = 0; k < 9; ++k)
      modal[k] *= std::exp(-I * es.eigenvalues()[k] * t);
    psi = es.eigenvectors() * modal;
  }

  BlockadeGateResult out;
  out.state = psi;
  out.target = Eigen::VectorXcd::Zero(9);
  out.target[joint45(kG, kM)] = I * control.alpha;
  out.target[joint45(kM, kE)] = I * control.beta;
  out.leakage = std::norm(psi[joint45(kM, kM)]);
  const cplx ov = out.target.dot(psi);
  out.fidelity = std::norm(ov);
  out.distance = (psi - out.target).norm();
  return out;
}

// ---------------------------------------------------------- routing map

// Final joint state of (control qubit x receivers) after composing the
// blockade gate, the two branch router runs, and the closing reversal
// pulses. Basis index (c << 2) | (n_L << 1) | n_R with c = 0 for |g>_4.
struct RoutingMapResult {
  Eigen::VectorXcd state;   // 8-dim composed state (norm <= 1)
  Eigen::VectorXcd target;  // -(alpha |g,0,1> + beta |e,1,0>)
  cplx overlap{0.0, 0.0};   // <target|state>
  double fidelity = 0.0;    // |overlap|^2 (global-phase free)
  double distance = 0.0;    // ||state - target||, phase-exact
  double lost_norm = 0.0;   // population outside the receiver subspace
  // Per-branch transfer phases zeta (phase of the dominant receiver
  // amplitude) and which receiver dominated (0 = left, 1 = right). Reported,
  // never compensated.
  double zeta_aux5 = 0.0, zeta_aux4 = 0.0;
  int routed_aux5 = 0, routed_aux4 = 0;
  // Reduced control-qubit density matrix (normalized), its purity and
  // entanglement entropy in bits.
  Eigen::Matrix2cd control_rho;
  double purity = 0.0;
  double entropy_bits = 0.0;
};

// Compose the Appendix-style protocol from the two single-auxiliary router
// runs: the alpha branch routes through auxiliary 5, the beta branch through
// auxiliary 4, and the closing pi-pulses contribute one factor of i per
// branch on top of the gate's, hence the overall minus sign of the target.
inline RoutingMapResult full_routing_map(const ControlQubit& control,
                                         const RouterRunResult& aux5_run,
                                         const RouterRunResult& aux4_run) {
  control.validate();
  if (aux5_run.final_state.size() == 0 || aux5_run.t_us.empty())
    throw std::invalid_argument(
        "full_routing_map: missing router run for auxiliary 5");
  if (aux4_run.final_state.size() == 0 || aux4_run.t_us.empty())
    throw std::invalid_argument(
        "full_routing_map: missing router run for auxiliary 4");

  auto idx = [](int c, int nl, int nr) { return (c << 2) | (nl << 1) | nr; };
  RoutingMapResult out;
  out.state = Eigen::VectorXcd::Zero(8);
  out.state[idx(0, 1, 0)] = -control.alpha * aux5_run.final_left_amp;
  out.state[idx(0, 0, 1)] = -control.alpha * aux5_run.final_right_amp;
  out.state[idx(1, 1, 0)] = -control.beta * aux4_run.final_left_amp;
  out.state[idx(1, 0, 1)] = -control.beta * aux4_run.final_right_amp;
  out.lost_norm = 1.0 - out.state.squaredNorm();

  out.target = Eigen::VectorXcd::Zero(8);
  out.target[idx(0, 0, 1)] = -control.alpha;
  out.target[idx(1, 1, 0)] = -control.beta;

  out.overlap = out.target.dot(out.state);
  out.fidelity = std::norm(out.overlap);
  out.distance = (out.state - out.target).norm();

  auto branch_zeta = [](const RouterRunResult& r, double& zeta, int& routed) {
    const bool right = std::norm(r.final_right_amp) >= std::norm(r.final_left_amp);
    routed = right ? 1 : 0;
    zeta = std::arg(right ? r.final_right_amp : r.final_left_amp);
  };
  branch_zeta(aux5_run, out.zeta_aux5, out.routed_aux5);
  branch_zeta(aux4_run, out.zeta_aux4, out.routed_aux4);

  // Reduced control-qubit state over the truncated receiver subspace,
  // renormalized; leakage outside the subspace is reported via lost_norm.
  Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
  for (int nl = 0; nl < 2; ++nl)
    for (int nr = 0; nr < 2; ++nr)
      for (int c1 = 0; c1 < 2; ++c1)
        for (int c2 = 0; c2 < 2; ++c2)
          rho(c1, c2) +=
              out.state[idx(c1, nl, nr)] * std::conj(out.state[idx(c2, nl, nr)]);
  const double tr = rho.trace().real();
  if (tr > 0.0) rho /= tr;
  out.control_rho = rho;
  out.purity = (rho * rho).trace().real();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho);
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double lam = es.eigenvalues()[k];
    if (lam > 1e-15) s -= lam * std::log2(lam);
  }
  out.entropy_bits = s;
  return out;
}

// ------------------------------------------------------- boundary schedule

// Abstract pulse schedule realizing the boundary couplings: opening
// ground-state pi-pulses move the qubit's transferable component into the
// network-facing level, the shaped drives produce J_s(t) and J_r(t)
// proportional to the laser envelopes, and closing pi-pulses store the
// arrived excitation. The |g> component never enters the network.
struct BoundarySchedule {
  cplx c0{0.0, 0.0}, c1{1.0, 0.0};
  std::vector<PulseOp> opening, closing;
  PulseProfile sender_coupling;    // network-layer J_s(t)
  PulseProfile receiver_coupling;  // network-layer J_r(t)
  double active_weight = 1.0;      // |c1|^2 entering the network
};

inline BoundarySchedule sender_receiver_pulses(cplx c0, cplx c1,
                                               const PulseProfile& omega_s,
                                               const PulseProfile& omega_r) {
  omega_s.validate();
  omega_r.validate();
  BoundarySchedule sched;
  sched.c0 = c0;
  sched.c1 = c1;
  sched.active_weight = std::norm(c1);
  sched.opening = {PulseOp{"s", "g", "0", PI, 0.0},
                   PulseOp{"s", "e", "1", PI, 0.0}};
  sched.closing = {PulseOp{"r", "1", "e", PI, 0.0},
                   PulseOp{"r", "0", "g", PI, 0.0}};
  // The effective couplings inherit the laser envelopes unchanged:
  // J_s(t)/peak = Omega_s(t)/max Omega_s.
  sched.sender_coupling = omega_s;
  sched.receiver_coupling = omega_r;
  return sched;
}

}  // namespace spinroute

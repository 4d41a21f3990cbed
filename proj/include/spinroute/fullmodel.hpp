#pragma once
// Full multilevel router: Hamiltonian assembly over the single-excitation
// basis of four (or more) six-level atoms, two-level sender/receiver
// extension (dimension 128+3), non-Hermitian decay, chirality metric on the
// full model, Nelder-Mead geometry optimization, and level-shift
// compensation.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "basis.hpp"
#include "dynamics.hpp"
#include "geometry.hpp"
#include "interaction.hpp"
#include "network.hpp"
#include "pulses.hpp"
#include "triangle.hpp"
#include "units.hpp"

namespace spinroute {

// ---------------------------------------------------------------- assembly

// Energy of one atom in one of its six sublevels (Rydberg + Zeeman), rad/us.
inline double sublevel_energy(const SixLevelAtom& atom, int level_idx,
                              double b_gauss) {
  const AtomLevel lv = six_levels(atom.n)[level_idx];
  return rydberg_energy(atom.species, lv.n, lv.l, lv.two_j) +
         zeeman_shift(lv, atom.species, b_gauss);
}

// Full single-excitation Hamiltonian over the multilevel basis: diagonal =
// summed level + Zeeman energies with the initial-configuration energy (the
// designated state of atom 0) subtracted; off-diagonal = all dipole-dipole
// elements pairing one de-excitation with one excitation. rad/us.
inline Eigen::MatrixXcd build_full_hamiltonian(
    const MultilevelBasis& basis, const std::vector<Vec3>& positions,
    double b_gauss) {
  const int n_atoms = basis.n_atoms();
  if (static_cast<int>(positions.size()) != n_atoms)
    throw std::invalid_argument(
        "build_full_hamiltonian: geometry must cover all atoms");
  const int dim = basis.size();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);

  // Diagonal energies.
  for (int k = 0; k < dim; ++k) {
    const BasisState s = basis.state(k);
    double e = sublevel_energy(basis.atoms()[s.excited], 2 + s.upper, b_gauss);
    const std::vector<int> others = basis.others(s.excited);
    for (std::size_t o = 0; o < others.size(); ++o)
      e += sublevel_energy(basis.atoms()[others[o]], s.lows[o], b_gauss);
    h(k, k) = e;
  }
  const double offset = h(basis.designated_state(0), basis.designated_state(0))
                            .real();
  for (int k = 0; k < dim; ++k) h(k, k) -= offset;

  // Off-diagonal excitation exchange, atom pair by atom pair.
  Eigen::MatrixXcd hoff = Eigen::MatrixXcd::Zero(dim, dim);
  const int n_cfg = 1 << (n_atoms - 1);
  for (int i = 0; i < n_atoms; ++i) {
    for (int j = i + 1; j < n_atoms; ++j) {
      Geometry pair_geom;
      pair_geom.positions[i] = positions[i];
      pair_geom.positions[j] = positions[j];
      const PairCoupling pc = pair_coupling_full(
          basis.atoms()[i].species, six_levels(basis.atoms()[i].n),
          basis.atoms()[j].species, six_levels(basis.atoms()[j].n), pair_geom,
          i, j);
      // Excitation hop j -> i: atom i raises from S sublevel m_i to P
      // sublevel u_i while atom j lowers from P sublevel u_j to S sublevel
      // m_j; the element is the pair-coupling block entry for those two
      // single-atom transitions.
      const std::vector<int> others_j = basis.others(j);
      const int li = static_cast<int>(
          std::find(others_j.begin(), others_j.end(), i) - others_j.begin());
      const std::vector<int> others_i = basis.others(i);
      for (int u_j = 0; u_j < 4; ++u_j)
        for (int cfg = 0; cfg < n_cfg; ++cfg) {
          const int src = basis.index(j, u_j, static_cast<unsigned>(cfg));
          const BasisState s = basis.state(src);
          const int m_i = s.lows[li];
          for (int u_i = 0; u_i < 4; ++u_i)
            for (int m_j = 0; m_j < 2; ++m_j) {
              const cplx amp =
                  pc.block((2 + u_i) * 6 + m_j, m_i * 6 + (2 + u_j));
              if (amp == cplx{0.0, 0.0}) continue;
              unsigned bits = 0;
              const int kbits = n_atoms - 1;
              for (int slot = 0; slot < kbits; ++slot) {
                const int a2 = others_i[slot];
                const int low =
                    (a2 == j)
                        ? m_j
                        : s.lows[static_cast<int>(
                              std::find(others_j.begin(), others_j.end(), a2) -
                              others_j.begin())];
                bits |= static_cast<unsigned>(low) << (kbits - 1 - slot);
              }
              hoff(basis.index(i, u_i, bits), src) += amp;
            }
        }
    }
  }
  h += hoff + hoff.adjoint();
  return h;
}

// ------------------------------------------------------------------- decay

// Per-species, per-level decay rates (1/us). The aggregate total follows the
// seven-atom accounting: one excited main atom in nP, five main-species atoms
// in nS (two triangle spectators, sender, two receivers), one aux in n'S.
struct DecayModel {
  double rb_s_per_us = 0.0;  // main species nS
  double rb_p_per_us = 0.0;  // main species nP
  double cs_s_per_us = 0.0;  // aux species n'S
  double cs_p_per_us = 0.0;  // aux species n'P (only the finer mode uses it)
  std::optional<double> explicit_total;  // overrides the aggregate if set

  void validate() const {
    if (rb_s_per_us < 0 || rb_p_per_us < 0 || cs_s_per_us < 0 ||
        cs_p_per_us < 0 || (explicit_total && *explicit_total < 0))
      throw std::invalid_argument("decay: rates must be >= 0");
  }

  // Rates calibrated so the aggregate equals the working totals
  // 1/62, 1/45, 1/24 us^-1 at 0, 77, 300 K.
  static DecayModel at_temperature(double kelvin) {
    if (kelvin == 0.0) return {0.0024601, 0.0014841, 0.0023454, 0.0023454, {}};
    if (kelvin == 77.0) return {0.0033306, 0.0023546, 0.0032159, 0.0032159, {}};
    if (kelvin == 300.0)
      return {0.0061083, 0.0051323, 0.0059936, 0.0059936, {}};
    throw std::invalid_argument(
        "decay.temperature_K: calibrated tables exist for 0, 77 and 300 only");
  }

  static DecayModel uniform_total(double gamma_tot_per_us) {
    DecayModel d;
    d.explicit_total = gamma_tot_per_us;
    d.validate();
    return d;
  }
};

inline double gamma_total(const DecayModel& d) {
  d.validate();
  if (d.explicit_total) return *d.explicit_total;
  return d.rb_p_per_us + 5.0 * d.rb_s_per_us + d.cs_s_per_us;
}

// ---------------------------------------------------- level-shift handling

// Network form: subtract mu_i from the on-site energies of the triangle
// sites so all sites are resonant again. mu_i = 0 is the identity.
inline SpinNetwork compensate_level_shifts(
    SpinNetwork net, const std::array<double, 3>& mu,
    const std::array<std::string, 3>& triangle_labels = {"1", "2", "3"}) {
  for (int k = 0; k < 3; ++k) {
    const int i = net.index_of(triangle_labels[k]);
    net.set_onsite(i, net.sites()[i].onsite - mu[k]);
  }
  return net;
}

// Full-model form: an ac-Stark shift of -mu_i on the designated upper level
// of triangle atom i, i.e. every basis state with that atom excited in its
// designated sublevel moves down by mu_i.
inline void compensate_level_shifts(
    const MultilevelBasis& basis, Eigen::MatrixXcd& h,
    const std::array<double, 3>& mu,
    const std::array<int, 3>& triangle_atoms = {0, 1, 2}) {
  const int n_cfg = 1 << (basis.n_atoms() - 1);
  for (int k = 0; k < 3; ++k) {
    const int atom = triangle_atoms[k];
    const int u = basis.atoms()[atom].designated_upper;
    for (int cfg = 0; cfg < n_cfg; ++cfg) {
      const int idx = basis.index(atom, u, static_cast<unsigned>(cfg));
      h(idx, idx) -= mu[k];
    }
  }
}

// Schur complement of the full Hamiltonian onto the three designated
// triangle-excited states at E = 0: H3 = H_dd - H_dq H_qq^{-1} H_qd. This is
// the all-order analogue of the second-order effective triangle.
inline Eigen::Matrix3cd schur_complement_triangle(
    const Eigen::MatrixXcd& h, const std::array<int, 3>& d) {
  const int dim = static_cast<int>(h.rows());
  std::vector<int> q;
  q.reserve(dim - 3);
  for (int k = 0; k < dim; ++k)
    if (k != d[0] && k != d[1] && k != d[2]) q.push_back(k);
  Eigen::Matrix3cd hdd;
  Eigen::MatrixXcd hdq(3, q.size()), hqq(q.size(), q.size());
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) hdd(a, b) = h(d[a], d[b]);
    for (std::size_t b = 0; b < q.size(); ++b) hdq(a, b) = h(d[a], q[b]);
  }
  for (std::size_t a = 0; a < q.size(); ++a)
    for (std::size_t b = 0; b < q.size(); ++b) hqq(a, b) = h(q[a], q[b]);
  return hdd - hdq * hqq.partialPivLu().solve(hdq.adjoint());
}

// ------------------------------------------------------------ router model

// Static 131-state router: the 128-state multilevel block plus two-level
// sender and receivers coupled through time-dependent edges at run time.
struct RouterConfig {
  double a_um = 17.0;
  double b_um = 9.39;
  double c_um = 10.04;
  double b_gauss = 45.0;
  int aux_id = 4;  // 4 or 5
  SchemeParams scheme = default_scheme_params();
  bool compensate = true;
};

class RouterModel {
 public:
  explicit RouterModel(const RouterConfig& cfg)
      : cfg_(cfg), basis_(make_atoms(cfg)) {
    if (cfg.aux_id != 4 && cfg.aux_id != 5)
      throw std::invalid_argument("router: aux_id must be 4 or 5");
    const RouterGeometry rg(cfg.a_um, cfg.b_um, cfg.c_um);
    const std::vector<Vec3> pos{rg.position(1), rg.position(2), rg.position(3),
                                rg.position(cfg.aux_id)};
    Eigen::MatrixXcd h128 = build_full_hamiltonian(basis_, pos, cfg.b_gauss);
    effective_ = effective_triangle(router_sites(rg), cfg.scheme, cfg.b_gauss,
                                    cfg.aux_id, /*adiabaticity_factor=*/0.0);
    designated_ = {basis_.designated_state(0), basis_.designated_state(1),
                   basis_.designated_state(2)};
    double center = 0.0;
    if (cfg.compensate) {
      compensate_level_shifts(basis_, h128, effective_.mu);
      const Eigen::Matrix3cd h3 = schur_complement_triangle(h128, designated_);
      center = h3.diagonal().real().mean();
    }
    const int dim = basis_.size() + 3;
    h0_ = Eigen::MatrixXcd::Zero(dim, dim);
    h0_.topLeftCorner(basis_.size(), basis_.size()) = h128;
    for (int k = basis_.size(); k < dim; ++k) h0_(k, k) = center;
  }

  const RouterConfig& config() const { return cfg_; }
  const MultilevelBasis& basis() const { return basis_; }
  const Eigen::MatrixXcd& h0() const { return h0_; }
  int dim() const { return static_cast<int>(h0_.rows()); }
  int sender() const { return basis_.size(); }
  int receiver_left() const { return basis_.size() + 1; }
  int receiver_right() const { return basis_.size() + 2; }
  const std::array<int, 3>& designated() const { return designated_; }
  const EffectiveTriangle& effective() const { return effective_; }

  Eigen::Matrix3cd schur_triangle() const {
    return schur_complement_triangle(
        h0_.topLeftCorner(basis_.size(), basis_.size()), designated_);
  }

  // Per-state population decay rates (1/us). Uniform mode: the aggregate
  // total on every state. Finer mode: sum of per-level rates of every atom
  // in its current level, with sender/receivers counted as main-species
  // lower-level atoms when unexcited.
  std::vector<double> decay_rates(const DecayModel& d, bool uniform) const {
    d.validate();
    std::vector<double> g(dim(), 0.0);
    if (uniform) {
      std::fill(g.begin(), g.end(), gamma_total(d));
      return g;
    }
    auto level_rate = [&](int atom, bool upper) {
      const bool is_aux = (atom == 3);
      if (is_aux) return upper ? d.cs_p_per_us : d.cs_s_per_us;
      return upper ? d.rb_p_per_us : d.rb_s_per_us;
    };
    for (int k = 0; k < basis_.size(); ++k) {
      const BasisState s = basis_.state(k);
      double rate = level_rate(s.excited, true);
      for (int a : basis_.others(s.excited)) rate += level_rate(a, false);
      rate += 2.0 * d.rb_s_per_us;  // the two unexcited receivers
      g[k] = rate + d.rb_s_per_us;  // plus the unexcited sender
    }
    // Boundary-excited states: the four six-level atoms all sit in lower
    // levels; one boundary atom is in its upper level.
    const double all_lower = 3.0 * d.rb_s_per_us + d.cs_s_per_us;
    for (int k = basis_.size(); k < dim(); ++k)
      g[k] = all_lower + d.rb_p_per_us + 2.0 * d.rb_s_per_us;
    return g;
  }

 private:
  static MultilevelBasis make_atoms(const RouterConfig& cfg) {
    auto low_of = [](const AtomLevel& lv) { return (lv.two_m + 1) / 2; };
    auto up_of = [](const AtomLevel& lv) { return (lv.two_m + 3) / 2; };
    const SublevelScheme& s = cfg.scheme.scheme;
    SixLevelAtom main{cfg.scheme.main_sp, cfg.scheme.n_main, low_of(s.zero),
                      up_of(s.one)};
    SixLevelAtom aux{cfg.scheme.aux_sp, cfg.scheme.n_aux, low_of(s.minus),
                     up_of(s.plus)};
    return MultilevelBasis({main, main, main, aux});
  }

  RouterConfig cfg_;
  MultilevelBasis basis_;
  Eigen::MatrixXcd h0_;
  std::array<int, 3> designated_{};
  EffectiveTriangle effective_;
};

// -------------------------------------------------------------- router run

struct RouterPulses {
  double t_m_us = 0.0;
  double T_us = 0.0;
  double peak = 0.0;  // rad/us
};

struct RouterRunOptions {
  double dt_us = 0.002;
  int record_every = 5;
  std::optional<DecayModel> decay;
  bool uniform_decay = true;
};

// Compact trajectory of the tracked populations plus the final full state.
struct RouterRunResult {
  std::vector<double> t_us;
  std::vector<double> pop_sender, pop_left, pop_right, norm;
  std::array<std::vector<double>, 3> pop_triangle;
  Eigen::VectorXcd final_state;
  cplx final_left_amp{0.0, 0.0}, final_right_amp{0.0, 0.0};
  double final_sender = 0.0, final_left = 0.0, final_right = 0.0;
  double max_left = 0.0, max_right = 0.0, final_norm = 0.0;
};

namespace detail {

// Exact 2x2 rotation exp(-i theta (|i><j| + |j><i|)) applied in place.
inline void kick(Eigen::VectorXcd& psi, int i, int j, double theta) {
  const cplx ci = psi[i], cj = psi[j];
  const double c = std::cos(theta), s = std::sin(theta);
  psi[i] = c * ci - I * s * cj;
  psi[j] = c * cj - I * s * ci;
}

struct RouterBranch {
  const RouterModel* model = nullptr;
  cplx weight{1.0, 0.0};
  int offset = 0;  // block offset in the joint state vector
  Eigen::MatrixXcd v, vd;
  Eigen::VectorXd w;
  std::vector<double> decay;  // per-state population rates, possibly empty
};

// Strang-split propagation of one or more independent router blocks sharing
// the pulse schedule: exact free evolution in each block's eigenbasis, exact
// 2x2 boundary kicks at the interval midpoint, and diagonal decay factors.
inline RouterRunResult run_branches(std::vector<RouterBranch>& branches,
                                    const RouterPulses& p,
                                    const RouterRunOptions& opt) {
  if (!(p.T_us > 0.0) || p.t_m_us < 0.0 || p.t_m_us > p.T_us)
    throw std::invalid_argument("run_router: need 0 <= t_m_us <= T_us, T > 0");
  int joint_dim = 0;
  for (auto& b : branches) {
    b.offset = joint_dim;
    joint_dim += b.model->dim();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b.model->h0());
    if (es.info() != Eigen::Success)
      throw std::runtime_error("run_router: eigendecomposition failed");
    b.w = es.eigenvalues();
    b.v = es.eigenvectors();
    b.vd = b.v.adjoint();
    if (opt.decay)
      b.decay = b.model->decay_rates(*opt.decay, opt.uniform_decay);
  }

  const int n_steps = std::max(1, static_cast<int>(std::ceil(p.T_us / opt.dt_us)));
  const double dt = p.T_us / n_steps;

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(joint_dim);
  for (const auto& b : branches) psi[b.offset + b.model->sender()] = b.weight;
  if (std::abs(psi.norm() - 1.0) > 1e-9)
    throw std::invalid_argument(
        "run_router: branch weights must form a normalized state");

  // Cached per-branch phase factors for a half step.
  std::vector<Eigen::VectorXcd> ph_half(branches.size());
  for (std::size_t bi = 0; bi < branches.size(); ++bi) {
    const auto& b = branches[bi];
    ph_half[bi].resize(b.w.size());
    for (Eigen::Index k = 0; k < b.w.size(); ++k)
      ph_half[bi][k] = std::exp(-I * b.w[k] * (0.5 * dt));
  }

  RouterRunResult out;
  auto record = [&](double t) {
    out.t_us.push_back(t);
    double ps = 0, pl = 0, pr = 0, nn = 0;
    std::array<double, 3> ptri{0, 0, 0};
    for (const auto& b : branches) {
      const auto seg = psi.segment(b.offset, b.model->dim());
      ps += std::norm(seg[b.model->sender()]);
      pl += std::norm(seg[b.model->receiver_left()]);
      pr += std::norm(seg[b.model->receiver_right()]);
      for (int k = 0; k < 3; ++k)
        ptri[k] += std::norm(seg[b.model->designated()[k]]);
      nn += seg.squaredNorm();
    }
    out.pop_sender.push_back(ps);
    out.pop_left.push_back(pl);
    out.pop_right.push_back(pr);
    for (int k = 0; k < 3; ++k) out.pop_triangle[k].push_back(ptri[k]);
    out.norm.push_back(nn);
    out.max_left = std::max(out.max_left, pl);
    out.max_right = std::max(out.max_right, pr);
  };
  record(0.0);

  Eigen::VectorXcd scratch;
  for (int step = 0; step < n_steps; ++step) {
    const double t_mid = (step + 0.5) * dt;
    const double fs = (t_mid <= p.t_m_us) ? p.peak * t_mid / p.T_us : 0.0;
    const double fr = (t_mid >= p.T_us - p.t_m_us)
                          ? p.peak * (1.0 - t_mid / p.T_us)
                          : 0.0;
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
      auto seg = psi.segment(branches[bi].offset, branches[bi].model->dim());
      scratch = branches[bi].vd * seg;
      scratch.array() *= ph_half[bi].array();
      seg = branches[bi].v * scratch;
    }
    if (fs != 0.0 || fr != 0.0)
      for (const auto& b : branches) {
        const int o = b.offset;
        if (fs != 0.0)
          kick(psi, o + b.model->sender(), o + b.model->designated()[0],
               fs * dt);
        if (fr != 0.0) {
          kick(psi, o + b.model->receiver_left(),
               o + b.model->designated()[1], fr * dt);
          kick(psi, o + b.model->receiver_right(),
               o + b.model->designated()[2], fr * dt);
        }
      }
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
      auto seg = psi.segment(branches[bi].offset, branches[bi].model->dim());
      scratch = branches[bi].vd * seg;
      scratch.array() *= ph_half[bi].array();
      seg = branches[bi].v * scratch;
    }
    for (const auto& b : branches)
      if (!b.decay.empty())
        for (int k = 0; k < b.model->dim(); ++k)
          psi[b.offset + k] *= std::exp(-0.5 * b.decay[k] * dt);
    if ((step + 1) % opt.record_every == 0 || step == n_steps - 1)
      record((step + 1) * dt);
  }

  out.final_state = psi;
  out.final_sender = out.pop_sender.back();
  out.final_left = out.pop_left.back();
  out.final_right = out.pop_right.back();
  out.final_norm = out.norm.back();
  // Per-branch receiver amplitudes are only unambiguous for a single branch;
  // report the first branch's (callers with several branches read
  // final_state directly).
  const auto& b0 = branches.front();
  out.final_left_amp = psi[b0.offset + b0.model->receiver_left()];
  out.final_right_amp = psi[b0.offset + b0.model->receiver_right()];
  return out;
}

}  // namespace detail

// Single-auxiliary router run from |1_s> x |0,0,0> x |-> x |0_rL, 0_rR>.
inline RouterRunResult run_router(const RouterModel& model,
                                  const RouterPulses& pulses,
                                  const RouterRunOptions& opt = {}) {
  std::vector<detail::RouterBranch> branches(1);
  branches[0].model = &model;
  branches[0].weight = 1.0;
  return detail::run_branches(branches, pulses, opt);
}

// Superposition-control run over the enlarged basis containing both
// auxiliary atoms: the joint space is the direct sum of the aux-5-active and
// aux-4-active blocks (the inactive partner sits in an inert low-lying
// state, so the blocks cannot mix - the same neglect of aux-aux couplings
// the protocol itself relies on). Initial state alpha |1_s; aux5 active> +
// beta |1_s; aux4 active>.
inline RouterRunResult run_router_superposition(const RouterModel& aux5_model,
                                                const RouterModel& aux4_model,
                                                cplx alpha, cplx beta,
                                                const RouterPulses& pulses,
                                                const RouterRunOptions& opt = {}) {
  if (aux5_model.config().aux_id != 5 || aux4_model.config().aux_id != 4)
    throw std::invalid_argument(
        "run_router_superposition: pass the aux-5 model first, aux-4 second");
  std::vector<detail::RouterBranch> branches(2);
  branches[0].model = &aux5_model;
  branches[0].weight = alpha;
  branches[1].model = &aux4_model;
  branches[1].weight = beta;
  return detail::run_branches(branches, pulses, opt);
}

// ------------------------------------------------------- chirality metric

// Circulation metric of the raw (uncompensated, boundary-free) full model:
// start in the designated apex-excited state and compare the designated
// populations of sites 2 and 3 at the first circulation peak. The window is
// `periods` estimated circulation periods of the effective triangle.
inline double full_circulation_metric(double a_um, double b_um, double c_um,
                                      double b_gauss,
                                      const SchemeParams& scheme,
                                      int aux_id = 4, int npts = 1200,
                                      double periods = 1.5) {
  const RouterGeometry rg(a_um, b_um, c_um);
  auto low_of = [](const AtomLevel& lv) { return (lv.two_m + 1) / 2; };
  auto up_of = [](const AtomLevel& lv) { return (lv.two_m + 3) / 2; };
  const SublevelScheme& s = scheme.scheme;
  SixLevelAtom main{scheme.main_sp, scheme.n_main, low_of(s.zero),
                    up_of(s.one)};
  SixLevelAtom aux{scheme.aux_sp, scheme.n_aux, low_of(s.minus),
                   up_of(s.plus)};
  const MultilevelBasis basis({main, main, main, aux});
  const std::vector<Vec3> pos{rg.position(1), rg.position(2), rg.position(3),
                              rg.position(aux_id)};
  const Eigen::MatrixXcd h = build_full_hamiltonian(basis, pos, b_gauss);

  const EffectiveTriangle eff = effective_triangle(
      router_sites(rg), scheme, b_gauss, aux_id, /*adiabaticity_factor=*/0.0);
  const double j_mean =
      (eff.j_abs[0] + eff.j_abs[1] + eff.j_abs[2]) / 3.0;
  const double window = periods * triangle_period_estimate(j_mean);

  std::vector<double> ts(npts);
  for (int k = 0; k < npts; ++k) ts[k] = window * k / (npts - 1.0);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(basis.size());
  psi0[basis.designated_state(0)] = 1.0;
  const SpectralPropagator prop(h);
  const Eigen::MatrixXcd traj = prop.evolve_many(psi0, ts);
  Eigen::MatrixXd pops(npts, 3);
  for (int k = 0; k < 3; ++k)
    pops.col(k) = traj.row(basis.designated_state(k)).cwiseAbs2().transpose();
  return circulation_metric(ts, pops, {0, 1, 2}, window);
}

// ------------------------------------------------------------ optimization

enum class OptimizeObjective { circulation_metric, transfer_fidelity };

struct GeometryBounds {
  double b_lo = 8.6, b_hi = 25.0;
  double c_lo = 8.6, c_hi = 25.0;
  double field_lo = 0.0, field_hi = 55.0;
};

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double simplex_scale = 0.05;   // initial simplex: +-5% per coordinate
  double diameter_tol = 1e-4;    // relative simplex diameter
  int max_evaluations = 500;
};

struct OptimizeLogEntry {
  int evaluation = 0;
  double best_score = 0.0;
  double b_um = 0.0, c_um = 0.0, b_gauss = 0.0;
};

struct OptimizeResult {
  double b_um = 0.0, c_um = 0.0, b_gauss = 0.0;
  double score = 0.0;
  int evaluations = 0;
  bool converged = false;  // false = evaluation budget hit (best-so-far)
  std::vector<OptimizeLogEntry> log;
};

namespace detail {

// Deterministic Nelder-Mead maximization over (b, c, B) with hard bounds.
template <typename F>
OptimizeResult nelder_mead_max(F objective, const std::array<double, 3>& x0,
                               const GeometryBounds& bounds,
                               const NelderMeadOptions& opt) {
  using Vec = std::array<double, 3>;
  auto inside = [&](const Vec& x) {
    return x[0] >= bounds.b_lo && x[0] <= bounds.b_hi && x[1] >= bounds.c_lo &&
           x[1] <= bounds.c_hi && x[2] >= bounds.field_lo &&
           x[2] <= bounds.field_hi;
  };
  OptimizeResult res;
  int evals = 0;
  auto f = [&](const Vec& x) {
    ++evals;
    double v = -1e100;
    if (inside(x)) {
      try {
        v = objective(x[0], x[1], x[2]);
      } catch (const std::exception&) {
        v = -1e100;  // infeasible interior point (e.g. vanishing detuning)
      }
    }
    if (res.log.empty() || v > res.log.back().best_score)
      res.log.push_back({evals, v, x[0], x[1], x[2]});
    return v;
  };

  std::array<Vec, 4> xs;
  std::array<double, 4> fs;
  xs[0] = x0;
  for (int k = 1; k < 4; ++k) {
    xs[k] = x0;
    const double step = opt.simplex_scale * std::max(std::abs(x0[k - 1]), 1.0);
    xs[k][k - 1] += step;
  }
  for (int k = 0; k < 4; ++k) fs[k] = f(xs[k]);

  auto order = [&] {
    std::array<int, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return fs[a] > fs[b]; });
    std::array<Vec, 4> xs2;
    std::array<double, 4> fs2;
    for (int k = 0; k < 4; ++k) {
      xs2[k] = xs[idx[k]];
      fs2[k] = fs[idx[k]];
    }
    xs = xs2;
    fs = fs2;
  };
  auto diameter = [&] {
    double d = 0.0;
    for (int k = 1; k < 4; ++k) {
      double n2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double scale = std::max(std::abs(xs[0][c]), 1.0);
        const double dd = (xs[k][c] - xs[0][c]) / scale;
        n2 += dd * dd;
      }
      d = std::max(d, std::sqrt(n2));
    }
    return d;
  };
  auto blend = [](const Vec& a, const Vec& b, double t) {
    Vec r;
    for (int c = 0; c < 3; ++c) r[c] = a[c] + t * (b[c] - a[c]);
    return r;
  };

  order();
  while (evals < opt.max_evaluations) {
    if (diameter() < opt.diameter_tol) {
      res.converged = true;
      break;
    }
    Vec centroid{0, 0, 0};
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 3; ++c) centroid[c] += xs[k][c] / 3.0;
    const Vec xr = blend(centroid, xs[3], -opt.reflection);
    const double fr = f(xr);
    if (fr > fs[0]) {
      const Vec xe = blend(centroid, xs[3], -opt.expansion);
      const double fe = f(xe);
      if (fe > fr) {
        xs[3] = xe;
        fs[3] = fe;
      } else {
        xs[3] = xr;
        fs[3] = fr;
      }
    } else if (fr > fs[2]) {
      xs[3] = xr;
      fs[3] = fr;
    } else {
      const Vec xc = blend(centroid, xs[3],
                           (fr > fs[3]) ? -opt.contraction : opt.contraction);
      const double fc = f(xc);
      if (fc > std::min(fr, fs[3])) {
        xs[3] = xc;
        fs[3] = fc;
      } else {
        for (int k = 1; k < 4; ++k) {
          xs[k] = blend(xs[0], xs[k], opt.shrink);
          fs[k] = f(xs[k]);
        }
      }
    }
    order();
  }

  res.b_um = xs[0][0];
  res.c_um = xs[0][1];
  res.b_gauss = xs[0][2];
  res.score = fs[0];
  res.evaluations = evals;
  return res;
}

}  // namespace detail

// Nelder-Mead over (b, c, B) maximizing the chosen full-model objective at
// fixed base length a. transfer_fidelity runs the router protocol per
// evaluation and maximizes the final correct-receiver population (the
// larger of the two receivers); circulation_metric is the default and far
// cheaper. Deterministic for fixed inputs.
inline OptimizeResult optimize_geometry(
    OptimizeObjective objective, double a_um, const SchemeParams& scheme,
    int aux_id, const std::array<double, 3>& initial_bcB,
    const GeometryBounds& bounds = {}, const NelderMeadOptions& nm = {},
    const RouterPulses& pulses_for_fidelity = {}) {
  if (objective == OptimizeObjective::circulation_metric) {
    return detail::nelder_mead_max(
        [&](double b, double c, double field) {
          return full_circulation_metric(a_um, b, c, field, scheme, aux_id);
        },
        initial_bcB, bounds, nm);
  }
  return detail::nelder_mead_max(
      [&](double b, double c, double field) {
        RouterConfig cfg;
        cfg.a_um = a_um;
        cfg.b_um = b;
        cfg.c_um = c;
        cfg.b_gauss = field;
        cfg.aux_id = aux_id;
        cfg.scheme = scheme;
        const RouterModel model(cfg);
        RouterRunOptions opt;
        opt.dt_us = 0.01;  // coarser step: objective, not reporting, quality
        const RouterRunResult r = run_router(model, pulses_for_fidelity, opt);
        return std::max(r.final_left, r.final_right);
      },
      initial_bcB, bounds, nm);
}

}  // namespace spinroute

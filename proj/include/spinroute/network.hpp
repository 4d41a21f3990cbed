#pragma once
// Abstract spin-network layer: single-excitation Hamiltonians for chains and
// router graphs, time-dependent boundary couplings, propagation, spectra,
// transfer probability and phase extraction, and the pulse-timing scan.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csv.hpp"
#include "pulses.hpp"
#include "triangle.hpp"
#include "units.hpp"

namespace spinroute {

enum class ChainModel { nearest_neighbor, dipolar_r3 };

// Single-excitation network: one basis vector per site, Hermitian edge set.
// Onsite energies and static edge amplitudes are in rad/us. An edge that
// references a pulse profile has time-dependent amplitude
// multiplier * profile.value(t); its stored multiplier is dimensionless
// (the profile carries the rad/us scale).
class SpinNetwork {
 public:
  struct Site {
    std::string label;
    double onsite = 0.0;
  };
  struct Edge {
    int i = 0, j = 0;
    cplx amplitude{0.0, 0.0};
    int profile = -1;  // index into profiles(), -1 for static edges
  };

  int add_site(const std::string& label, double onsite = 0.0) {
    if (index_.count(label))
      throw std::invalid_argument("network: duplicate site id '" + label + "'");
    index_[label] = static_cast<int>(sites_.size());
    sites_.push_back({label, onsite});
    return index_[label];
  }

  void add_edge(int i, int j, cplx amplitude) {
    check_pair(i, j);
    edges_.push_back({i, j, amplitude, -1});
  }

  void add_pulsed_edge(int i, int j, const PulseProfile& profile,
                       cplx multiplier = {1.0, 0.0}) {
    check_pair(i, j);
    profile.validate();
    profiles_.push_back(profile);
    edges_.push_back(
        {i, j, multiplier, static_cast<int>(profiles_.size()) - 1});
  }

  int size() const { return static_cast<int>(sites_.size()); }
  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<PulseProfile>& profiles() const { return profiles_; }

  bool has_site(const std::string& label) const { return index_.count(label); }
  int index_of(const std::string& label) const {
    const auto it = index_.find(label);
    if (it == index_.end())
      throw std::invalid_argument("network: unknown site id '" + label + "'");
    return it->second;
  }
  void set_onsite(int i, double value) { sites_.at(i).onsite = value; }

  // Dense H(t); storing amplitude A on (i -> j) implies conj(A) on (j -> i).
  Eigen::MatrixXcd hamiltonian(double t) const {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(size(), size());
    for (int k = 0; k < size(); ++k) h(k, k) = sites_[k].onsite;
    for (const Edge& e : edges_) {
      const cplx a = edge_amplitude(e, t);
      h(e.i, e.j) += a;
      h(e.j, e.i) += std::conj(a);
    }
    return h;
  }

  // out = H(t) psi, accumulated over the edge list (O(sites + edges)).
  void apply(double t, const Eigen::VectorXcd& psi,
             Eigen::VectorXcd& out) const {
    for (int k = 0; k < size(); ++k) out[k] = sites_[k].onsite * psi[k];
    for (const Edge& e : edges_) {
      const cplx a = edge_amplitude(e, t);
      out[e.i] += a * psi[e.j];
      out[e.j] += std::conj(a) * psi[e.i];
    }
  }

  // Upper bound on the infinity norm of H(t) over all t (profiles replaced
  // by their maximal values), in rad/us.
  double max_h_norm() const {
    std::vector<double> row(size(), 0.0);
    for (int k = 0; k < size(); ++k) row[k] = std::abs(sites_[k].onsite);
    for (const Edge& e : edges_) {
      const double a = (e.profile >= 0)
                           ? std::abs(e.amplitude) *
                                 profiles_[e.profile].max_abs()
                           : std::abs(e.amplitude);
      row[e.i] += a;
      row[e.j] += a;
    }
    return *std::max_element(row.begin(), row.end());
  }

  // Derivative-discontinuity times of all referenced profiles.
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (const PulseProfile& p : profiles_)
      for (double t : p.breakpoints()) b.push_back(t);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

 private:
  cplx edge_amplitude(const Edge& e, double t) const {
    return (e.profile >= 0) ? e.amplitude * profiles_[e.profile].value(t)
                            : e.amplitude;
  }
  void check_pair(int i, int j) const {
    if (i < 0 || j < 0 || i >= size() || j >= size() || i == j)
      throw std::invalid_argument("network: invalid edge endpoints");
  }

  std::vector<Site> sites_;
  std::vector<Edge> edges_;
  std::vector<PulseProfile> profiles_;
  std::map<std::string, int> index_;
};

// Open chain of N spins with onsite energy B. nearest_neighbor: tridiagonal
// coupling J; dipolar_r3: coupling J/m^3 between sites m apart, all pairs.
// Site labels are "1".."N". J, B in rad/us.
inline SpinNetwork chain_hamiltonian(int n, double j, double b,
                                     ChainModel model) {
  if (n < 1) throw std::invalid_argument("chain: N >= 1 required");
  SpinNetwork net;
  for (int k = 1; k <= n; ++k) net.add_site(std::to_string(k), b);
  if (model == ChainModel::nearest_neighbor) {
    for (int k = 0; k + 1 < n; ++k) net.add_edge(k, k + 1, j);
  } else {
    for (int k = 0; k < n; ++k)
      for (int m = 1; k + m < n; ++m)
        net.add_edge(k, k + m, j / (static_cast<double>(m) * m * m));
  }
  return net;
}

// Analytic single-excitation spectrum in band-index order n = 1..N
// (monotonically decreasing). nearest_neighbor: E_n = 2J cos(pi n/(N+1));
// dipolar_r3: E_n = 2 sum_{m=1}^{N-1} (J/m^3) cos(pi n m/(N+1)) - for an
// open chain the latter is the standing-wave approximation, not the exact
// spectrum, so callers should compare against diagonalization explicitly.
inline std::vector<double> chain_spectrum(int n, double j, ChainModel model) {
  if (n < 1) throw std::invalid_argument("chain_spectrum: N >= 1 required");
  std::vector<double> e(n, 0.0);
  for (int band = 1; band <= n; ++band) {
    if (model == ChainModel::nearest_neighbor) {
      e[band - 1] = 2.0 * j * std::cos(PI * band / (n + 1.0));
    } else {
      double sum = 0.0;
      for (int m = 1; m <= n - 1; ++m)
        sum += j / (static_cast<double>(m) * m * m) *
               std::cos(PI * band * m / (n + 1.0));
      e[band - 1] = 2.0 * sum;
    }
  }
  return e;
}

// Copy the network and couple a new external site (sender or receiver) to an
// existing one through a time-dependent profile.
inline SpinNetwork attach_boundary(const SpinNetwork& net,
                                   const std::string& site,
                                   const std::string& external,
                                   const PulseProfile& profile,
                                   double b_ext = 0.0) {
  SpinNetwork out = net;
  const int i = out.index_of(site);  // throws for unknown site
  const int j = out.add_site(external, b_ext);  // throws for duplicate id
  out.add_pulsed_edge(i, j, profile);
  return out;
}

// Router graph: flux triangle with apex site "1" exposed for the sender and
// sites "2"/"3" continued into left/right subchains of uniform coupling J.
// Chain labels are "L1".."L<NL>" and "R1".."R<NR>"; receivers attach at
// "L<NL>" and "R<NR>". Odd subchain lengths are required by default (the
// sender couples to no zero mode otherwise).
inline SpinNetwork router_network(int n_left, int n_right,
                                  const FluxTriangle& tri, double j,
                                  bool allow_even = false) {
  if (n_left < 1 || n_right < 1)
    throw std::invalid_argument("router_network: subchain lengths must be >= 1");
  if (!allow_even && (n_left % 2 == 0 || n_right % 2 == 0))
    throw std::invalid_argument(
        "router_network: even subchain lengths place no zero mode at the "
        "sender resonance; pass allow_even to override");
  SpinNetwork net;
  net.add_site("1", tri.mu1);
  net.add_site("2", tri.mu2);
  net.add_site("3", tri.mu3);
  net.add_edge(0, 1, tri.j1);  // H_12
  net.add_edge(1, 2, tri.j2);  // H_23
  net.add_edge(2, 0, tri.j3);  // H_31
  int prev = 1;  // site "2"
  for (int k = 1; k <= n_left; ++k) {
    const int s = net.add_site("L" + std::to_string(k), 0.0);
    net.add_edge(prev, s, j);
    prev = s;
  }
  prev = 2;  // site "3"
  for (int k = 1; k <= n_right; ++k) {
    const int s = net.add_site("R" + std::to_string(k), 0.0);
    net.add_edge(prev, s, j);
    prev = s;
  }
  return net;
}

// Time series of the full state vector; norms are <psi|psi> (so uniform
// population decay Gamma gives norm(t) = exp(-Gamma t)).
struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXcd states;  // one column per time point
  std::vector<double> norms;
  std::vector<std::string> labels;

  Eigen::VectorXcd final_state() const { return states.col(states.cols() - 1); }
};

namespace detail {

// One RK4 step for psi' = -i (H(t) - i Gamma/2) psi.
inline void rk4_step(const SpinNetwork& net,
                     const std::vector<double>* decay, double t, double h,
                     Eigen::VectorXcd& psi, Eigen::VectorXcd& k1,
                     Eigen::VectorXcd& k2, Eigen::VectorXcd& k3,
                     Eigen::VectorXcd& k4, Eigen::VectorXcd& tmp) {
  auto deriv = [&](double tt, const Eigen::VectorXcd& y,
                   Eigen::VectorXcd& dy) {
    net.apply(tt, y, dy);
    if (decay)
      for (int s = 0; s < net.size(); ++s)
        dy[s] += -I * 0.5 * (*decay)[s] * y[s];
    dy *= -I;
  };
  deriv(t, psi, k1);
  tmp = psi + 0.5 * h * k1;
  deriv(t + 0.5 * h, tmp, k2);
  tmp = psi + 0.5 * h * k2;
  deriv(t + 0.5 * h, tmp, k3);
  tmp = psi + h * k3;
  deriv(t + h, tmp, k4);
  psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Fixed-step RK4 propagation of i dpsi/dt = (H(t) - i Gamma/2) psi sampled on
// t_grid. The base step satisfies (max ||H||) h <= 0.05 rad and is aligned to
// profile breakpoints; it is halved until the accuracy check passes (norm
// conservation for Hermitian runs, Richardson end-state comparison with
// decay). Decay rates are per-site population rates (1/us).
inline Trajectory propagate(const SpinNetwork& net,
                            const Eigen::VectorXcd& initial,
                            const std::vector<double>& t_grid,
                            const std::vector<double>* decay = nullptr) {
  if (initial.size() != net.size())
    throw std::invalid_argument("propagate: state dimension mismatch");
  if (std::abs(initial.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("propagate: initial state must be normalized");
  if (t_grid.size() < 2 || t_grid.front() != 0.0)
    throw std::invalid_argument("propagate: t_grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (t_grid[k] <= t_grid[k - 1])
      throw std::invalid_argument("propagate: t_grid must increase");
  if (decay) {
    if (static_cast<int>(decay->size()) != net.size())
      throw std::invalid_argument("propagate: decay rate count mismatch");
    for (double g : *decay)
      if (g < 0.0)
        throw std::invalid_argument("propagate: decay rates must be >= 0");
  }

  // Merge sample times and profile breakpoints into one segment list.
  std::vector<double> nodes = t_grid;
  for (double b : net.breakpoints())
    if (b > 0.0 && b < t_grid.back()) nodes.push_back(b);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double a, double b) {
                            return std::abs(a - b) < 1e-13;
                          }),
              nodes.end());

  double hnorm = net.max_h_norm();
  if (decay)
    for (double g : *decay) hnorm = std::max(hnorm, 0.5 * g);
  // Phase resolution bound (max||H|| h <= 0.05 rad) combined with a norm-
  // drift estimate: RK4 loses ~(||H|| h)^6/144 of the norm per step, so keep
  // the accumulated T/h * (||H|| h)^6 / 144 below the 1e-9 target.
  double h_base = t_grid.back();
  if (hnorm > 0.0) {
    const double h_phase = 0.05 / hnorm;
    const double h_drift = std::pow(
        144.0 * 1e-10 / (t_grid.back() * std::pow(hnorm, 6.0)), 0.2);
    h_base = std::min(h_phase, h_drift);
  }

  auto run = [&](double h_max) {
    Trajectory traj;
    traj.times = t_grid;
    traj.states.resize(net.size(), static_cast<Eigen::Index>(t_grid.size()));
    traj.norms.resize(t_grid.size());
    for (const auto& s : net.sites()) traj.labels.push_back(s.label);

    Eigen::VectorXcd psi = initial, k1, k2, k3, k4, tmp;
    k1.resizeLike(psi);
    k2.resizeLike(psi);
    k3.resizeLike(psi);
    k4.resizeLike(psi);
    tmp.resizeLike(psi);
    std::size_t next_sample = 0;
    auto sample = [&](double /*t*/) {
      traj.states.col(static_cast<Eigen::Index>(next_sample)) = psi;
      traj.norms[next_sample] = psi.squaredNorm();
      ++next_sample;
    };
    sample(0.0);
    for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
      const double t0 = nodes[seg], t1 = nodes[seg + 1];
      const int n_steps =
          std::max(1, static_cast<int>(std::ceil((t1 - t0) / h_max)));
      const double h = (t1 - t0) / n_steps;
      for (int s = 0; s < n_steps; ++s)
        detail::rk4_step(net, decay, t0 + s * h, h, psi, k1, k2, k3, k4, tmp);
      if (next_sample < t_grid.size() &&
          std::abs(t_grid[next_sample] - t1) < 1e-13)
        sample(t1);
    }
    return traj;
  };

  const int max_halvings = 8;
  double h = h_base;
  Trajectory traj = run(h);
  for (int attempt = 0;; ++attempt) {
    bool ok = true;
    double achieved = 0.0;
    if (!decay) {
      for (double n : traj.norms) achieved = std::max(achieved, std::abs(n - 1.0));
      ok = achieved <= 1e-9;
    } else {
      const Trajectory finer = run(0.5 * h);
      achieved = (finer.final_state() - traj.final_state()).norm();
      ok = achieved <= 1e-9;
      traj = finer;
      h *= 0.5;
    }
    if (ok) break;
    if (attempt >= max_halvings) {
      std::ostringstream msg;
      msg << "propagate: accuracy target 1e-9 not reached after "
          << max_halvings << " step halvings (achieved " << achieved << ")";
      throw std::runtime_error(msg.str());
    }
    h *= 0.5;
    traj = run(h);
  }
  return traj;
}

// Transfer probability and arrival phase at the end of a run.
struct TransferResult {
  double p_t = 0.0;
  double zeta = 0.0;  // in (-pi, pi], meaningful only when zeta_valid
  bool zeta_valid = false;  // phase reported only when P_T > 0.5
};

inline TransferResult transfer_result(const Trajectory& traj,
                                      const std::string& sender,
                                      const std::string& receiver) {
  const auto find = [&](const std::string& label) {
    for (std::size_t k = 0; k < traj.labels.size(); ++k)
      if (traj.labels[k] == label) return static_cast<int>(k);
    throw std::invalid_argument("transfer_result: unknown site '" + label +
                                "'");
  };
  const int s = find(sender), r = find(receiver);
  if (std::abs(std::abs(traj.states(s, 0)) - 1.0) > 1e-6)
    throw std::invalid_argument(
        "transfer_result: trajectory does not start in the sender state");
  const cplx amp = traj.states(r, traj.states.cols() - 1);
  TransferResult out;
  out.p_t = std::norm(amp);
  if (out.p_t > 0.5) {
    out.zeta = std::arg(amp);
    out.zeta_valid = true;
  }
  return out;
}

// Chain-transfer run: sender "s" ramped onto site 1, receiver "r" ramped off
// site N, per the linear profiles. Returns the end-to-end transfer result.
inline TransferResult chain_transfer_run(int n, ChainModel model, double j,
                                         double t_m_us, double t_us,
                                         Trajectory* traj_out = nullptr) {
  SpinNetwork net = chain_hamiltonian(n, j, 0.0, model);
  net = attach_boundary(net, "1", "s", sender_ramp(t_m_us, t_us, j));
  net = attach_boundary(net, std::to_string(n), "r",
                        receiver_ramp(t_m_us, t_us, j));
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(net.size());
  psi0[net.index_of("s")] = 1.0;
  std::vector<double> grid;
  const int n_samples = traj_out ? 400 : 1;
  for (int k = 0; k <= n_samples; ++k) grid.push_back(t_us * k / n_samples);
  const Trajectory traj = propagate(net, psi0, grid);
  if (traj_out) *traj_out = traj;
  return transfer_result(traj, "s", "r");
}

struct ScanResult {
  double t_m_us = 0.0;
  double t_us = 0.0;
  double p_t = 0.0;
};

namespace detail {

template <typename F>
double golden_max(F f, double lo, double hi, int iters = 40) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters && (b - a) > 1e-10 * std::max(1.0, std::abs(b));
       ++k) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  return (f1 > f2) ? x1 : x2;
}

}  // namespace detail

// Grid search plus golden-section refinement of the pulse pair (t_m, T)
// maximizing the chain transfer probability. Defaults: T in [0.8, 3] x
// N/(2J), t_m in [0.1 T, T], 40 x 40 coarse grid.
inline ScanResult scan_protocol(int n, ChainModel model, double j,
                                int grid_t = 40, int grid_tm = 40,
                                double t_lo_factor = 0.8,
                                double t_hi_factor = 3.0) {
  if (n < 1) throw std::invalid_argument("scan_protocol: N >= 1 required");
  if (!(j > 0.0)) throw std::invalid_argument("scan_protocol: J must be > 0");
  const double t_scale = n / (2.0 * to_2pi_mhz(j));  // N/(2J) with J in MHz
  const double t_lo = t_lo_factor * t_scale, t_hi = t_hi_factor * t_scale;

  ScanResult best;
  auto eval = [&](double t_m, double t_tot) {
    const TransferResult r = chain_transfer_run(n, model, j, t_m, t_tot);
    return r.p_t;
  };
  for (int a = 0; a < grid_t; ++a) {
    const double t_tot =
        t_lo + (t_hi - t_lo) * (grid_t == 1 ? 0.0 : a / (grid_t - 1.0));
    for (int b = 0; b < grid_tm; ++b) {
      const double ratio =
          0.1 + 0.9 * (grid_tm == 1 ? 1.0 : b / (grid_tm - 1.0));
      const double t_m = ratio * t_tot;
      const double p = eval(t_m, t_tot);
      if (p > best.p_t) best = {t_m, t_tot, p};
    }
  }
  // Refine T at fixed t_m/T ratio, then t_m at fixed T.
  const double ratio0 = best.t_m_us / best.t_us;
  const double dt = (t_hi - t_lo) / std::max(1, grid_t - 1);
  const double t_ref = detail::golden_max(
      [&](double t_tot) { return eval(ratio0 * t_tot, t_tot); },
      std::max(t_lo, best.t_us - dt), std::min(t_hi, best.t_us + dt), 30);
  if (eval(ratio0 * t_ref, t_ref) > best.p_t)
    best = {ratio0 * t_ref, t_ref, eval(ratio0 * t_ref, t_ref)};
  const double dm = 0.9 / std::max(1, grid_tm - 1) * best.t_us;
  const double m_ref = detail::golden_max(
      [&](double t_m) { return eval(t_m, best.t_us); },
      std::max(0.1 * best.t_us, best.t_m_us - dm),
      std::min(best.t_us, best.t_m_us + dm), 30);
  if (eval(m_ref, best.t_us) > best.p_t)
    best = {m_ref, best.t_us, eval(m_ref, best.t_us)};
  return best;
}

// CSV export: t_us, site_<label>_pop..., norm, re_amp_<label>...,
// im_amp_<label>... in basis order.
inline void write_trajectory_csv(const Trajectory& traj,
                                 const std::string& path) {
  CsvWriter csv(path);
  std::vector<std::string> head{"t_us"};
  for (const auto& l : traj.labels) head.push_back("site_" + l + "_pop");
  head.push_back("norm");
  for (const auto& l : traj.labels) head.push_back("re_amp_" + l);
  for (const auto& l : traj.labels) head.push_back("im_amp_" + l);
  csv.header(head);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    const auto col = traj.states.col(static_cast<Eigen::Index>(k));
    for (Eigen::Index s = 0; s < col.size(); ++s)
      row.push_back(std::norm(col[s]));
    row.push_back(traj.norms[k]);
    for (Eigen::Index s = 0; s < col.size(); ++s)
      row.push_back(col[s].real());
    for (Eigen::Index s = 0; s < col.size(); ++s)
      row.push_back(col[s].imag());
    csv.row(row);
  }
}

}  // namespace spinroute

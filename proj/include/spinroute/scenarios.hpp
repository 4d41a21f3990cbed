#pragma once
// Scenario layer shared by the CLI and the tests: nine deterministic,
// config-driven runs that each write CSV artifacts plus a JSON manifest of
// resolved parameters and headline results.

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "protocols.hpp"

namespace spinroute {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct ScenarioKey {
  std::string path;
  bool required = false;
  std::string desc;
};

struct ScenarioSchema {
  std::string kind;
  std::string summary;
  std::vector<ScenarioKey> keys;
};

inline const std::vector<ScenarioSchema>& scenario_schemas() {
  static const std::vector<ScenarioSchema> schemas = [] {
    const ScenarioKey kind{"kind", true, "scenario kind"};
    const ScenarioKey output{"output.csv_path", false,
                             "CSV file name (default <kind>.csv)"};
    auto atoms = [](std::vector<ScenarioKey>& v) {
      v.push_back({"atoms.main.species", false, "Rb87 (default) or Cs133"});
      v.push_back({"atoms.main.n", false, "main principal number (default 70)"});
      v.push_back({"atoms.aux.species", false, "Cs133 (default) or Rb87"});
      v.push_back({"atoms.aux.n", false, "aux principal number (default 71)"});
    };
    std::vector<ScenarioSchema> s;

    s.push_back({"triangle",
                 "abstract flux-triangle circulation trajectory",
                 {kind, output,
                  {"j_abs_2piMHz", true, "coupling magnitude |J|"},
                  {"gamma_rad", false,
                   "hopping phases [g1,g2,g3] (default -pi/6 each)"},
                  {"mu_2piMHz", false, "onsite shifts [mu1,mu2,mu3]"},
                  {"initial_site", false, "starting site 1..3 (default 1)"},
                  {"reverse", false, "conjugate all couplings (default false)"},
                  {"t_max_us", false, "trajectory end (default 1.5 periods)"},
                  {"samples", false, "sample count (default 601)"}}});

    s.push_back({"chain_transfer",
                 "sender->chain->receiver transfer (fixed pulses or scan)",
                 {kind, output,
                  {"n_sites", true, "chain length N"},
                  {"j_2piMHz", true, "chain coupling J"},
                  {"model", false, "nearest_neighbor (default) or dipolar_r3"},
                  {"t_m_us", false, "ramp duration (with T_us: single run)"},
                  {"T_us", false, "protocol duration (with t_m_us)"},
                  {"scan.grid_T", false, "coarse grid points in T (default 40)"},
                  {"scan.grid_tm", false,
                   "coarse grid points in t_m (default 40)"},
                  {"scan.T_lo_factor", false, "T window low x N/(2J) (0.8)"},
                  {"scan.T_hi_factor", false, "T window high x N/(2J) (3.0)"}}});

    s.push_back({"router_abstract",
                 "triangle + two subchains + pulsed sender/receivers",
                 {kind, output,
                  {"n_left", true, "left subchain length (odd)"},
                  {"n_right", true, "right subchain length (odd)"},
                  {"j_2piMHz", true, "chain coupling J"},
                  {"triangle.j_abs_2piMHz", false,
                   "triangle |J| (default: chain J)"},
                  {"triangle.gamma_rad", false,
                   "triangle phases [g1,g2,g3] (default -pi/6 each)"},
                  {"triangle.mu_2piMHz", false, "triangle shifts [mu1,mu2,mu3]"},
                  {"compensate", false,
                   "subtract the triangle shifts (default true)"},
                  {"pulses.t_m_us", true, "ramp duration"},
                  {"pulses.T_us", true, "protocol duration"},
                  {"pulses.peak_2piMHz", false, "boundary peak (default J)"},
                  {"samples", false, "trajectory samples (default 400)"}}});

    {
      ScenarioSchema es{"effective_solve",
                        "solve the flux conditions for (b, c, Delta) at "
                        "fixed base a",
                        {kind, output,
                         {"geometry.a_um", false, "base length (default 17)"},
                         {"guess.b_um", false, "initial b (default 9.4)"},
                         {"guess.c_um", false, "initial c (default 10.0)"},
                         {"guess.delta_2piMHz", false,
                          "initial detuning (default 50)"},
                         {"aux.active", false, "auxiliary atom 4 or 5"}}};
      atoms(es.keys);
      s.push_back(es);
    }

    {
      ScenarioSchema fm{"full_model",
                        "multilevel-basis circulation at fixed geometry",
                        {kind, output,
                         {"geometry.a_um", false, "base length (default 17)"},
                         {"geometry.b_um", true, "triangle-aux distance b"},
                         {"geometry.c_um", true, "apex-base distance c"},
                         {"field.B_gauss", true, "magnetic field"},
                         {"aux.active", false, "auxiliary atom 4 or 5"},
                         {"samples", false, "trajectory samples (default 1200)"},
                         {"periods", false, "window in periods (default 1.5)"}}};
      atoms(fm.keys);
      s.push_back(fm);
    }

    {
      ScenarioSchema fr{"full_router",
                        "full-model routing run with pulsed boundary atoms",
                        {kind, output,
                         {"geometry.a_um", false, "base length (default 17)"},
                         {"geometry.b_um", true, "triangle-aux distance b"},
                         {"geometry.c_um", true, "apex-base distance c"},
                         {"field.B_gauss", true, "magnetic field"},
                         {"aux.active", false,
                          "4, 5 or \"superposition\" (default 4)"},
                         {"aux.alpha_re", false,
                          "superposition weight of the aux-5 branch"},
                         {"aux.alpha_im", false, ""},
                         {"aux.beta_re", false,
                          "superposition weight of the aux-4 branch"},
                         {"aux.beta_im", false, ""},
                         {"decay.temperature_K", false,
                          "calibrated decay table: 0, 77 or 300"},
                         {"decay.gamma_tot_per_us", false,
                          "uniform total decay rate (exclusive with "
                          "temperature_K)"},
                         {"decay.per_level", false,
                          "per-level rates instead of the uniform total"},
                         {"pulses.t_m_us", true, "ramp duration"},
                         {"pulses.T_us", true, "protocol duration"},
                         {"pulses.peak_2piMHz", true, "boundary peak coupling"},
                         {"compensate", false,
                          "level-shift compensation (default true)"},
                         {"dt_us", false, "integrator step (default 0.002)"},
                         {"record_every", false,
                          "sampling stride in steps (default 5)"}}};
      atoms(fr.keys);
      s.push_back(fr);
    }

    s.push_back({"blockade",
                 "auxiliary-selection blockade gate",
                 {kind, output,
                  {"mode", true, "ideal or finite_blockade"},
                  {"omega_2piMHz", false, "pi-pulse Rabi frequency"},
                  {"v_2piMHz", false, "blockade shift V (direct)"},
                  {"c3_2piMHz_um3", false, "dipolar coefficient (with r_um)"},
                  {"c6_2piMHz_um6", false,
                   "van der Waals coefficient (with r_um)"},
                  {"r_um", false, "aux-aux separation for c3/c6"},
                  {"alpha.re", false, "control |g> amplitude (default 1/sqrt2)"},
                  {"alpha.im", false, ""},
                  {"beta.re", false, "control |e> amplitude (default 1/sqrt2)"},
                  {"beta.im", false, ""},
                  {"scan_omega_over_v", false,
                   "array of Omega/V ratios (one CSV row each)"}}});

    s.push_back({"spectrum",
                 "chain eigenvalues: closed form vs diagonalization",
                 {kind, output,
                  {"n_sites", true, "chain length N"},
                  {"j_2piMHz", true, "chain coupling J"},
                  {"model", false, "nearest_neighbor (default) or dipolar_r3"}}});

    {
      ScenarioSchema op{"optimize",
                        "Nelder-Mead over (b, c, B) on a full-model objective",
                        {kind, output,
                         {"objective", false,
                          "circulation_metric (default) or transfer_fidelity"},
                         {"geometry.a_um", false, "base length (default 17)"},
                         {"initial.b_um", true, "starting b"},
                         {"initial.c_um", true, "starting c"},
                         {"initial.B_gauss", true, "starting field"},
                         {"bounds.b_lo_um", false, "default 8.6"},
                         {"bounds.b_hi_um", false, "default 25"},
                         {"bounds.c_lo_um", false, "default 8.6"},
                         {"bounds.c_hi_um", false, "default 25"},
                         {"bounds.B_lo_gauss", false, "default 0"},
                         {"bounds.B_hi_gauss", false, "default 55"},
                         {"nelder_mead.max_evaluations", false, "default 500"},
                         {"nelder_mead.diameter_tol", false, "default 1e-4"},
                         {"nelder_mead.simplex_scale", false, "default 0.05"},
                         {"restarts", false,
                          "seeded restarts with jittered starts (default 1)"},
                         {"aux.active", false, "auxiliary atom 4 or 5"},
                         {"pulses.t_m_us", false,
                          "required for transfer_fidelity"},
                         {"pulses.T_us", false, "required for transfer_fidelity"},
                         {"pulses.peak_2piMHz", false,
                          "required for transfer_fidelity"}}};
      atoms(op.keys);
      s.push_back(op);
    }
    return s;
  }();
  return schemas;
}

inline const ScenarioSchema& schema_for(const std::string& kind) {
  std::string valid;
  for (const auto& s : scenario_schemas()) {
    if (s.kind == kind) return s;
    if (!valid.empty()) valid += ", ";
    valid += s.kind;
  }
  throw ConfigError("config: unknown kind '" + kind + "'; valid kinds: " +
                    valid);
}

struct RunSettings {
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct ScenarioOutcome {
  std::string kind;
  std::vector<std::string> files;  // everything written, CSVs then manifest
  json manifest;
};

namespace detail {

inline std::string resolve_output(const ConfigView& cv,
                                  const RunSettings& rs,
                                  const std::string& default_name) {
  namespace fs = std::filesystem;
  const std::string name = cv.text_or("output.csv_path", default_name);
  fs::path p(name);
  if (p.is_relative()) p = fs::path(rs.output_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p.string();
}

inline std::string manifest_path(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(),
                       suffix) == 0)
    return csv_path.substr(0, csv_path.size() - suffix.size()) +
           ".manifest.json";
  return csv_path + ".manifest.json";
}

inline json manifest_base(const std::string& kind, const ConfigView& cv,
                          const RunSettings& rs) {
  json m;
  m["artifact"] = std::string("spinroute ") + kArtifactVersion;
  m["kind"] = kind;
  m["config"] = cv.origin();
  m["seed"] = rs.seed;
  return m;
}

inline void write_manifest(const std::string& path, const json& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot open '" + path + "'");
  out << m.dump(2) << '\n';
}

inline SpeciesParams species_by_name(const std::string& name,
                                     const std::string& key,
                                     const ConfigView& cv) {
  if (name == "Rb87") return rubidium_default();
  if (name == "Cs133") return cesium_default();
  throw ConfigError(cv.origin() + ": key '" + key +
                    "' must be \"Rb87\" or \"Cs133\"");
}

inline SchemeParams scheme_from(const ConfigView& cv) {
  const SpeciesParams main_sp = species_by_name(
      cv.text_or("atoms.main.species", "Rb87"), "atoms.main.species", cv);
  const SpeciesParams aux_sp = species_by_name(
      cv.text_or("atoms.aux.species", "Cs133"), "atoms.aux.species", cv);
  const int n_main =
      cv.has("atoms.main.n") ? cv.integer_in("atoms.main.n", 30, 120) : 70;
  const int n_aux =
      cv.has("atoms.aux.n") ? cv.integer_in("atoms.aux.n", 30, 120) : 71;
  return {main_sp, aux_sp, n_main, n_aux};
}

inline int aux_site(const ConfigView& cv) {
  if (!cv.has("aux.active")) return 4;
  return cv.integer_in("aux.active", 4, 5);
}

inline ChainModel chain_model(const ConfigView& cv) {
  const std::string m = cv.text_or("model", "nearest_neighbor");
  if (m == "nearest_neighbor") return ChainModel::nearest_neighbor;
  if (m == "dipolar_r3") return ChainModel::dipolar_r3;
  throw ConfigError(cv.origin() +
                    ": key 'model' must be \"nearest_neighbor\" or "
                    "\"dipolar_r3\"");
}

inline json effective_to_json(const EffectiveTriangle& eff) {
  json e;
  e["mu_2piMHz"] = {to_2pi_mhz(eff.mu[0]), to_2pi_mhz(eff.mu[1]),
                    to_2pi_mhz(eff.mu[2])};
  e["j_abs_2piMHz"] = {to_2pi_mhz(eff.j_abs[0]), to_2pi_mhz(eff.j_abs[1]),
                       to_2pi_mhz(eff.j_abs[2])};
  e["gamma_rad"] = {eff.gamma[0], eff.gamma[1], eff.gamma[2]};
  e["gamma_tot_rad"] = eff.gamma_tot();
  e["detuning_2piMHz"] = to_2pi_mhz(eff.detuning);
  e["adiabaticity_ratio"] = eff.adiabaticity_ratio;
  return e;
}

// ------------------------------------------------------------- triangle

inline ScenarioOutcome run_triangle(const ConfigView& cv,
                                    const RunSettings& rs, bool execute) {
  const double j_abs = from_2pi_mhz(cv.positive("j_abs_2piMHz"));
  std::vector<double> gamma{-PI / 6, -PI / 6, -PI / 6};
  if (cv.has("gamma_rad")) gamma = cv.number_array("gamma_rad", 3);
  std::vector<double> mu{0.0, 0.0, 0.0};
  if (cv.has("mu_2piMHz")) {
    mu = cv.number_array("mu_2piMHz", 3);
    for (double& m : mu) m = from_2pi_mhz(m);
  }
  const int start = cv.has("initial_site")
                        ? cv.integer_in("initial_site", 1, 3)
                        : 1;
  const bool reverse = cv.boolean_or("reverse", false);
  const double period = triangle_period_estimate(j_abs);
  const double t_max = cv.positive_or("t_max_us", 1.5 * period);
  const int samples =
      cv.has("samples") ? cv.integer_in("samples", 3, 1000000) : 601;

  FluxTriangle tri{std::polar(j_abs, -gamma[0]), std::polar(j_abs, -gamma[1]),
                   std::polar(j_abs, -gamma[2]), mu[0], mu[1], mu[2]};
  if (reverse) {
    tri.j1 = std::conj(tri.j1);
    tri.j2 = std::conj(tri.j2);
    tri.j3 = std::conj(tri.j3);
  }

  ScenarioOutcome out;
  out.kind = "triangle";
  out.manifest = manifest_base("triangle", cv, rs);
  json& res = out.manifest["results"];
  const FluxDiagnostic diag = check_flux_conditions(tri, 1e-9);
  res["gamma_tot_rad"] = tri.gamma_tot();
  res["flux_satisfied"] = diag.satisfied;
  res["chirality_sign"] = diag.chirality_sign;
  res["period_us"] = period;
  if (!execute) return out;

  const std::string csv_path = resolve_output(cv, rs, "triangle.csv");
  const Eigen::Matrix3cd h3 = build_h3(tri);
  const SpectralPropagator prop(h3);
  std::vector<double> ts(samples);
  for (int k = 0; k < samples; ++k) ts[k] = t_max * k / (samples - 1.0);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(3);
  psi0[start - 1] = 1.0;
  const Eigen::MatrixXcd traj = prop.evolve_many(psi0, ts);

  CsvWriter csv(csv_path);
  csv.header({"t_us", "p1", "p2", "p3", "norm"});
  for (int k = 0; k < samples; ++k) {
    const Eigen::Vector3cd c = traj.col(k);
    csv.row({ts[k], std::norm(c[0]), std::norm(c[1]), std::norm(c[2]),
             c.squaredNorm()});
  }

  // Populations at one third of the circulation period (the chiral arrival
  // time of the neighboring site) and the circulation metric.
  const Eigen::Vector3cd third = prop.evolve(psi0, period / 3.0);
  res["p_at_third_period"] = {std::norm(third[0]), std::norm(third[1]),
                              std::norm(third[2])};
  Eigen::MatrixXd pops(samples, 3);
  for (int k = 0; k < samples; ++k)
    pops.row(k) = traj.col(k).cwiseAbs2().real().transpose();
  if (ts.back() + 1e-12 >= period) {
    const int next = start % 3, rev = (start + 1) % 3;
    res["circulation_metric"] =
        circulation_metric(ts, pops, {start - 1, next, rev}, period);
  }
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// -------------------------------------------------------- chain_transfer

inline ScenarioOutcome run_chain_transfer(const ConfigView& cv,
                                          const RunSettings& rs,
                                          bool execute) {
  const int n = cv.integer_in("n_sites", 1, 501);
  const double j = from_2pi_mhz(cv.positive("j_2piMHz"));
  const ChainModel model = chain_model(cv);
  const bool fixed = cv.has("t_m_us") && cv.has("T_us");
  if (cv.has("t_m_us") != cv.has("T_us"))
    throw ConfigError(cv.origin() +
                      ": keys 't_m_us' and 'T_us' must be given together");

  ScenarioOutcome out;
  out.kind = "chain_transfer";
  out.manifest = manifest_base("chain_transfer", cv, rs);
  json& res = out.manifest["results"];
  double t_m = 0.0, t_tot = 0.0;
  if (fixed) {
    t_m = cv.positive("t_m_us");
    t_tot = cv.positive("T_us");
    if (t_m > t_tot)
      throw ConfigError(cv.origin() + ": key 't_m_us' must be <= 'T_us'");
  }
  if (!execute) return out;

  const std::string csv_path = resolve_output(cv, rs, "chain_transfer.csv");
  if (!fixed) {
    const int grid_t =
        cv.has("scan.grid_T") ? cv.integer_in("scan.grid_T", 1, 400) : 40;
    const int grid_tm =
        cv.has("scan.grid_tm") ? cv.integer_in("scan.grid_tm", 1, 400) : 40;
    const ScanResult sc =
        scan_protocol(n, model, j, grid_t, grid_tm,
                      cv.positive_or("scan.T_lo_factor", 0.8),
                      cv.positive_or("scan.T_hi_factor", 3.0));
    t_m = sc.t_m_us;
    t_tot = sc.t_us;
    res["scan"] = {{"t_m_us", sc.t_m_us}, {"T_us", sc.t_us}, {"p_t", sc.p_t}};
  }
  Trajectory traj;
  const TransferResult tr = chain_transfer_run(n, model, j, t_m, t_tot, &traj);
  write_trajectory_csv(traj, csv_path);
  res["t_m_us"] = t_m;
  res["T_us"] = t_tot;
  res["p_t"] = tr.p_t;
  res["zeta_valid"] = tr.zeta_valid;
  if (tr.zeta_valid) {
    res["zeta_rad"] = tr.zeta;
    res["zeta_expected_rad"] = wrap_pi(-(n + 1) * PI / 2.0);
  }
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ------------------------------------------------------- router_abstract

inline ScenarioOutcome run_router_abstract(const ConfigView& cv,
                                           const RunSettings& rs,
                                           bool execute) {
  const int n_left = cv.integer_in("n_left", 1, 99);
  const int n_right = cv.integer_in("n_right", 1, 99);
  const double j = from_2pi_mhz(cv.positive("j_2piMHz"));
  const double tri_j =
      from_2pi_mhz(cv.positive_or("triangle.j_abs_2piMHz", to_2pi_mhz(j)));
  std::vector<double> gamma{-PI / 6, -PI / 6, -PI / 6};
  if (cv.has("triangle.gamma_rad"))
    gamma = cv.number_array("triangle.gamma_rad", 3);
  std::vector<double> mu{0.0, 0.0, 0.0};
  if (cv.has("triangle.mu_2piMHz")) {
    mu = cv.number_array("triangle.mu_2piMHz", 3);
    for (double& m : mu) m = from_2pi_mhz(m);
  }
  const bool compensate = cv.boolean_or("compensate", true);
  const double t_m = cv.positive("pulses.t_m_us");
  const double t_tot = cv.positive("pulses.T_us");
  if (t_m > t_tot)
    throw ConfigError(cv.origin() +
                      ": key 'pulses.t_m_us' must be <= 'pulses.T_us'");
  const double peak =
      from_2pi_mhz(cv.positive_or("pulses.peak_2piMHz", to_2pi_mhz(j)));
  const int samples =
      cv.has("samples") ? cv.integer_in("samples", 2, 1000000) : 400;

  const FluxTriangle tri{std::polar(tri_j, -gamma[0]),
                         std::polar(tri_j, -gamma[1]),
                         std::polar(tri_j, -gamma[2]),
                         mu[0], mu[1], mu[2]};
  ScenarioOutcome out;
  out.kind = "router_abstract";
  out.manifest = manifest_base("router_abstract", cv, rs);
  json& res = out.manifest["results"];
  res["gamma_tot_rad"] = tri.gamma_tot();
  res["compensated"] = compensate;
  SpinNetwork net = router_network(n_left, n_right, tri, j);
  if (compensate) net = compensate_level_shifts(net, {mu[0], mu[1], mu[2]});
  if (!execute) return out;

  net = attach_boundary(net, "1", "s", sender_ramp(t_m, t_tot, peak));
  net = attach_boundary(net, "L" + std::to_string(n_left), "rL",
                        receiver_ramp(t_m, t_tot, peak));
  net = attach_boundary(net, "R" + std::to_string(n_right), "rR",
                        receiver_ramp(t_m, t_tot, peak));
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(net.size());
  psi0[net.index_of("s")] = 1.0;
  std::vector<double> grid(samples + 1);
  for (int k = 0; k <= samples; ++k) grid[k] = t_tot * k / samples;
  const Trajectory traj = propagate(net, psi0, grid);

  const std::string csv_path = resolve_output(cv, rs, "router_abstract.csv");
  write_trajectory_csv(traj, csv_path);
  const TransferResult left = transfer_result(traj, "s", "rL");
  const TransferResult right = transfer_result(traj, "s", "rR");
  res["p_left"] = left.p_t;
  res["p_right"] = right.p_t;
  if (left.zeta_valid) res["zeta_left_rad"] = left.zeta;
  if (right.zeta_valid) res["zeta_right_rad"] = right.zeta;
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ------------------------------------------------------- effective_solve

inline ScenarioOutcome run_effective_solve(const ConfigView& cv,
                                           const RunSettings& rs,
                                           bool execute) {
  const double a = cv.positive_or("geometry.a_um", 17.0);
  FluxGuess guess;
  guess.b_um = cv.positive_or("guess.b_um", guess.b_um);
  guess.c_um = cv.positive_or("guess.c_um", guess.c_um);
  guess.delta = from_2pi_mhz(
      cv.number_or("guess.delta_2piMHz", to_2pi_mhz(guess.delta)));
  if (guess.delta == 0.0)
    throw ConfigError(cv.origin() +
                      ": key 'guess.delta_2piMHz' must be nonzero (adiabatic "
                      "elimination is undefined at zero detuning)");
  const int aux = aux_site(cv);
  const SchemeParams scheme = scheme_from(cv);

  ScenarioOutcome out;
  out.kind = "effective_solve";
  out.manifest = manifest_base("effective_solve", cv, rs);
  if (!execute) return out;

  const FluxSolution sol = solve_flux_conditions(a, scheme, guess, aux);
  const std::string csv_path = resolve_output(cv, rs, "effective_solve.csv");
  CsvWriter csv(csv_path);
  csv.header({"a_um", "b_um", "c_um", "delta_2piMHz", "B_gauss",
              "j12_abs_2pikHz", "j23_abs_2pikHz", "j13_abs_2pikHz",
              "mu_2pikHz", "gamma1_rad", "gamma2_rad", "gamma3_rad",
              "gamma_tot_rad", "iterations"});
  const EffectiveTriangle& eff = sol.at_solution;
  csv.row({a, sol.b_um, sol.c_um, to_2pi_mhz(sol.delta), sol.b_gauss,
           to_2pi_mhz(eff.j_abs[0]) * 1e3, to_2pi_mhz(eff.j_abs[1]) * 1e3,
           to_2pi_mhz(eff.j_abs[2]) * 1e3, to_2pi_mhz(eff.mu[0]) * 1e3,
           eff.gamma[0], eff.gamma[1], eff.gamma[2], eff.gamma_tot(),
           static_cast<double>(sol.iterations)});

  json& res = out.manifest["results"];
  res["b_um"] = sol.b_um;
  res["c_um"] = sol.c_um;
  res["delta_2piMHz"] = to_2pi_mhz(sol.delta);
  res["B_gauss"] = sol.b_gauss;
  res["iterations"] = sol.iterations;
  res["residuals"] = {{"mu_mismatch_2pikHz", sol.residuals[0]},
                      {"j_mismatch_2pikHz", sol.residuals[1]},
                      {"gamma_tot_error_rad", sol.residuals[2]}};
  res["effective"] = effective_to_json(eff);
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ----------------------------------------------------------- full_model

inline ScenarioOutcome run_full_model(const ConfigView& cv,
                                      const RunSettings& rs, bool execute) {
  const double a = cv.positive_or("geometry.a_um", 17.0);
  const double b = cv.positive("geometry.b_um");
  const double c = cv.positive("geometry.c_um");
  const double field = cv.number("field.B_gauss");
  const int aux = aux_site(cv);
  const SchemeParams scheme = scheme_from(cv);
  const int samples =
      cv.has("samples") ? cv.integer_in("samples", 3, 100000) : 1200;
  const double periods = cv.positive_or("periods", 1.5);
  const RouterGeometry rg(a, b, c);  // validates the triangle inequalities
  if (std::abs(scheme.delta_at(field)) < from_2pi_mhz(1e-6))
    throw ConfigError(cv.origin() +
                      ": 'field.B_gauss' puts the S-P transitions in "
                      "resonance (Delta = 0); the effective model is "
                      "undefined there");

  ScenarioOutcome out;
  out.kind = "full_model";
  out.manifest = manifest_base("full_model", cv, rs);
  if (!execute) return out;

  auto low_of = [](const AtomLevel& lv) { return (lv.two_m + 1) / 2; };
  auto up_of = [](const AtomLevel& lv) { return (lv.two_m + 3) / 2; };
  const SixLevelAtom main_a{scheme.main_sp, scheme.n_main,
                            low_of(scheme.scheme.zero),
                            up_of(scheme.scheme.one)};
  const SixLevelAtom aux_a{scheme.aux_sp, scheme.n_aux,
                           low_of(scheme.scheme.minus),
                           up_of(scheme.scheme.plus)};
  const MultilevelBasis basis({main_a, main_a, main_a, aux_a});
  const std::vector<Vec3> pos{rg.position(1), rg.position(2), rg.position(3),
                              rg.position(aux)};
  const Eigen::MatrixXcd h = build_full_hamiltonian(basis, pos, field);
  const EffectiveTriangle eff =
      effective_triangle(router_sites(rg), scheme, field, aux, 0.0);
  const double j_mean = (eff.j_abs[0] + eff.j_abs[1] + eff.j_abs[2]) / 3.0;
  const double window = periods * triangle_period_estimate(j_mean);

  std::vector<double> ts(samples);
  for (int k = 0; k < samples; ++k) ts[k] = window * k / (samples - 1.0);
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(basis.size());
  psi0[basis.designated_state(0)] = 1.0;
  const SpectralPropagator prop(h);
  const Eigen::MatrixXcd traj = prop.evolve_many(psi0, ts);

  const std::string csv_path = resolve_output(cv, rs, "full_model.csv");
  CsvWriter csv(csv_path);
  csv.header({"t_us", "p1", "p2", "p3"});
  Eigen::MatrixXd pops(samples, 3);
  for (int k = 0; k < 3; ++k)
    pops.col(k) = traj.row(basis.designated_state(k)).cwiseAbs2().transpose();
  for (int k = 0; k < samples; ++k)
    csv.row({ts[k], pops(k, 0), pops(k, 1), pops(k, 2)});

  json& res = out.manifest["results"];
  res["basis_dim"] = basis.size();
  res["circulation_metric"] =
      circulation_metric(ts, pops, {0, 1, 2}, window);
  res["effective"] = effective_to_json(eff);
  const Eigen::Matrix3cd h3 = schur_complement_triangle(
      h, {basis.designated_state(0), basis.designated_state(1),
          basis.designated_state(2)});
  res["schur"] = {
      {"j_abs_2piMHz",
       {to_2pi_mhz(std::abs(h3(0, 1))), to_2pi_mhz(std::abs(h3(1, 2))),
        to_2pi_mhz(std::abs(h3(0, 2)))}},
      {"gamma_tot_rad",
       wrap_pi(-std::arg(h3(0, 1) * h3(1, 2) * std::conj(h3(0, 2))))}};
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ---------------------------------------------------------- full_router

inline ScenarioOutcome run_full_router(const ConfigView& cv,
                                       const RunSettings& rs, bool execute) {
  RouterConfig rc;
  rc.a_um = cv.positive_or("geometry.a_um", 17.0);
  rc.b_um = cv.positive("geometry.b_um");
  rc.c_um = cv.positive("geometry.c_um");
  rc.b_gauss = cv.number("field.B_gauss");
  rc.scheme = scheme_from(cv);
  rc.compensate = cv.boolean_or("compensate", true);
  const RouterGeometry rg(rc.a_um, rc.b_um, rc.c_um);
  if (std::abs(rc.scheme.delta_at(rc.b_gauss)) < from_2pi_mhz(1e-6))
    throw ConfigError(cv.origin() +
                      ": 'field.B_gauss' puts the S-P transitions in "
                      "resonance (Delta = 0); adiabatic elimination and the "
                      "level-shift compensation are undefined there");

  bool superposition = false;
  int aux = 4;
  if (cv.has("aux.active")) {
    if (cv.leaves().at("aux.active").is_string()) {
      const std::string mode = cv.text("aux.active");
      if (mode != "superposition")
        throw ConfigError(cv.origin() +
                          ": key 'aux.active' must be 4, 5 or "
                          "\"superposition\"");
      superposition = true;
    } else {
      aux = cv.integer_in("aux.active", 4, 5);
    }
  }
  cplx alpha{cv.number_or("aux.alpha_re", 1.0 / std::sqrt(2.0)),
             cv.number_or("aux.alpha_im", 0.0)};
  cplx beta{cv.number_or("aux.beta_re", 1.0 / std::sqrt(2.0)),
            cv.number_or("aux.beta_im", 0.0)};
  if (superposition &&
      std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-9)
    throw ConfigError(cv.origin() +
                      ": superposition weights 'aux.alpha_*'/'aux.beta_*' "
                      "must satisfy |alpha|^2 + |beta|^2 = 1");

  RouterPulses pulses;
  pulses.t_m_us = cv.positive("pulses.t_m_us");
  pulses.T_us = cv.positive("pulses.T_us");
  pulses.peak = from_2pi_mhz(cv.positive("pulses.peak_2piMHz"));
  if (pulses.t_m_us > pulses.T_us)
    throw ConfigError(cv.origin() +
                      ": key 'pulses.t_m_us' must be <= 'pulses.T_us'");

  RouterRunOptions opt;
  opt.dt_us = cv.positive_or("dt_us", 0.002);
  opt.record_every =
      cv.has("record_every") ? cv.integer_in("record_every", 1, 100000) : 5;
  if (cv.has("decay.temperature_K") && cv.has("decay.gamma_tot_per_us"))
    throw ConfigError(cv.origin() +
                      ": keys 'decay.temperature_K' and "
                      "'decay.gamma_tot_per_us' are mutually exclusive");
  if (cv.has("decay.temperature_K"))
    opt.decay = DecayModel::at_temperature(cv.number("decay.temperature_K"));
  else if (cv.has("decay.gamma_tot_per_us"))
    opt.decay = DecayModel::uniform_total(cv.number("decay.gamma_tot_per_us"));
  opt.uniform_decay = !cv.boolean_or("decay.per_level", false);
  if (!opt.uniform_decay && !cv.has("decay.temperature_K"))
    throw ConfigError(cv.origin() +
                      ": key 'decay.per_level' requires "
                      "'decay.temperature_K' (the uniform total carries no "
                      "per-level information)");

  ScenarioOutcome out;
  out.kind = "full_router";
  out.manifest = manifest_base("full_router", cv, rs);
  if (!execute) return out;

  RouterRunResult run;
  json& res = out.manifest["results"];
  if (superposition) {
    RouterConfig c5 = rc;
    c5.aux_id = 5;
    RouterConfig c4 = rc;
    c4.aux_id = 4;
    const RouterModel m5(c5), m4(c4);
    run = run_router_superposition(m5, m4, alpha, beta, pulses, opt);
    res["mode"] = "superposition";
    res["alpha"] = {alpha.real(), alpha.imag()};
    res["beta"] = {beta.real(), beta.imag()};
    res["effective"] = effective_to_json(m4.effective());
  } else {
    rc.aux_id = aux;
    const RouterModel model(rc);
    run = run_router(model, pulses, opt);
    res["mode"] = aux;
    res["effective"] = effective_to_json(model.effective());
    const Eigen::Matrix3cd h3 = model.schur_triangle();
    res["schur"] = {
        {"j_abs_2piMHz",
         {to_2pi_mhz(std::abs(h3(0, 1))), to_2pi_mhz(std::abs(h3(1, 2))),
          to_2pi_mhz(std::abs(h3(0, 2)))}},
        {"gamma_tot_rad",
         wrap_pi(-std::arg(h3(0, 1) * h3(1, 2) * std::conj(h3(0, 2))))},
        {"band_center_2piMHz", to_2pi_mhz(model.h0()(model.sender(),
                                                     model.sender())
                                              .real())}};
  }

  const std::string csv_path = resolve_output(cv, rs, "full_router.csv");
  CsvWriter csv(csv_path);
  csv.header({"t_us", "p_sender", "p_left", "p_right", "p_tri1", "p_tri2",
              "p_tri3", "norm"});
  for (std::size_t k = 0; k < run.t_us.size(); ++k)
    csv.row({run.t_us[k], run.pop_sender[k], run.pop_left[k], run.pop_right[k],
             run.pop_triangle[0][k], run.pop_triangle[1][k],
             run.pop_triangle[2][k], run.norm[k]});

  res["final"] = {{"sender", run.final_sender},
                  {"left", run.final_left},
                  {"right", run.final_right},
                  {"norm", run.final_norm}};
  res["max_left"] = run.max_left;
  res["max_right"] = run.max_right;
  if (opt.decay) res["gamma_tot_per_us"] = gamma_total(*opt.decay);
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ------------------------------------------------------------- blockade

inline ScenarioOutcome run_blockade(const ConfigView& cv,
                                    const RunSettings& rs, bool execute) {
  const std::string mode_s = cv.text("mode");
  if (mode_s != "ideal" && mode_s != "finite_blockade")
    throw ConfigError(cv.origin() +
                      ": key 'mode' must be \"ideal\" or \"finite_blockade\"");
  const BlockadeMode mode = (mode_s == "ideal") ? BlockadeMode::ideal
                                                : BlockadeMode::finite_blockade;
  double v = 0.0;
  if (cv.has("v_2piMHz")) {
    v = from_2pi_mhz(cv.positive("v_2piMHz"));
  } else if (cv.has("c3_2piMHz_um3") || cv.has("c6_2piMHz_um6")) {
    if (!cv.has("r_um"))
      throw ConfigError(cv.origin() +
                        ": key 'r_um' is required with 'c3_2piMHz_um3' or "
                        "'c6_2piMHz_um6'");
    const double r = cv.positive("r_um");
    if (cv.has("c3_2piMHz_um3"))
      v = blockade_interaction(from_2pi_mhz(cv.number("c3_2piMHz_um3")), r, 3);
    else
      v = blockade_interaction(from_2pi_mhz(cv.number("c6_2piMHz_um6")), r, 6);
  } else if (mode == BlockadeMode::finite_blockade) {
    throw ConfigError(cv.origin() +
                      ": finite_blockade requires 'v_2piMHz' or a "
                      "'c3_2piMHz_um3'/'c6_2piMHz_um6' + 'r_um' pair");
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  ControlQubit q{{cv.number_or("alpha.re", inv_sqrt2),
                  cv.number_or("alpha.im", 0.0)},
                 {cv.number_or("beta.re", inv_sqrt2),
                  cv.number_or("beta.im", 0.0)}};
  q.validate();
  std::vector<double> omegas;
  if (cv.has("scan_omega_over_v")) {
    if (!cv.has("v_2piMHz") && !cv.has("c3_2piMHz_um3") &&
        !cv.has("c6_2piMHz_um6"))
      throw ConfigError(cv.origin() +
                        ": key 'scan_omega_over_v' requires a blockade "
                        "interaction ('v_2piMHz' or c3/c6 + r)");
    const json& arr = cv.leaves().at("scan_omega_over_v");
    if (!arr.is_array() || arr.empty())
      throw ConfigError(cv.origin() +
                        ": key 'scan_omega_over_v' must be a nonempty array "
                        "of numbers");
    for (const auto& e : arr) {
      if (!e.is_number() || !(e.get<double>() > 0.0))
        throw ConfigError(cv.origin() +
                          ": key 'scan_omega_over_v' must contain positive "
                          "numbers");
      omegas.push_back(e.get<double>() * v);
    }
  } else {
    if (mode == BlockadeMode::finite_blockade && !cv.has("omega_2piMHz"))
      throw ConfigError(cv.origin() +
                        ": finite_blockade requires 'omega_2piMHz'");
    omegas.push_back(from_2pi_mhz(cv.positive_or("omega_2piMHz", 1.0)));
  }

  ScenarioOutcome out;
  out.kind = "blockade";
  out.manifest = manifest_base("blockade", cv, rs);
  if (!execute) return out;

  const std::string csv_path = resolve_output(cv, rs, "blockade.csv");
  CsvWriter csv(csv_path);
  csv.header({"omega_2piMHz", "v_2piMHz", "omega_over_v", "leakage",
              "fidelity", "distance"});
  json rows = json::array();
  for (const double omega : omegas) {
    const double ratio = (v > 0.0) ? omega / v : 0.0;
    const BlockadeGateResult g = blockade_gate(q, v, omega, mode);
    csv.row({to_2pi_mhz(omega), to_2pi_mhz(v), ratio, g.leakage, g.fidelity,
             g.distance});
    rows.push_back({{"omega_over_v", ratio},
                    {"leakage", g.leakage},
                    {"fidelity", g.fidelity}});
  }
  out.manifest["results"] = {{"mode", mode_s},
                             {"v_2piMHz", to_2pi_mhz(v)},
                             {"runs", rows}};
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ------------------------------------------------------------- spectrum

inline ScenarioOutcome run_spectrum(const ConfigView& cv,
                                    const RunSettings& rs, bool execute) {
  const int n = cv.integer_in("n_sites", 1, 501);
  const double j = from_2pi_mhz(cv.positive("j_2piMHz"));
  const ChainModel model = chain_model(cv);

  ScenarioOutcome out;
  out.kind = "spectrum";
  out.manifest = manifest_base("spectrum", cv, rs);
  if (!execute) return out;

  const std::vector<double> analytic = chain_spectrum(n, j, model);
  const Eigen::MatrixXcd h = chain_hamiltonian(n, j, 0.0, model).hamiltonian(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  std::vector<double> numeric(es.eigenvalues().data(),
                              es.eigenvalues().data() + n);
  std::sort(numeric.begin(), numeric.end(), std::greater<double>());

  const std::string csv_path = resolve_output(cv, rs, "spectrum.csv");
  CsvWriter csv(csv_path);
  csv.header({"band_n", "analytic_2piMHz", "numeric_2piMHz",
              "abs_error_2piMHz"});
  double max_err = 0.0;
  for (int k = 0; k < n; ++k) {
    const double err = std::abs(analytic[k] - numeric[k]);
    max_err = std::max(max_err, err);
    csv.row({static_cast<double>(k + 1), to_2pi_mhz(analytic[k]),
             to_2pi_mhz(numeric[k]), to_2pi_mhz(err)});
  }
  out.manifest["results"] = {
      {"max_abs_error_2piMHz", to_2pi_mhz(max_err)},
      {"closed_form_exact", model == ChainModel::nearest_neighbor}};
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

// ------------------------------------------------------------- optimize

inline ScenarioOutcome run_optimize(const ConfigView& cv,
                                    const RunSettings& rs, bool execute) {
  const std::string obj_s = cv.text_or("objective", "circulation_metric");
  if (obj_s != "circulation_metric" && obj_s != "transfer_fidelity")
    throw ConfigError(cv.origin() +
                      ": key 'objective' must be \"circulation_metric\" or "
                      "\"transfer_fidelity\"");
  const OptimizeObjective obj = (obj_s == "circulation_metric")
                                    ? OptimizeObjective::circulation_metric
                                    : OptimizeObjective::transfer_fidelity;
  const double a = cv.positive_or("geometry.a_um", 17.0);
  const std::array<double, 3> x0{cv.positive("initial.b_um"),
                                 cv.positive("initial.c_um"),
                                 cv.number("initial.B_gauss")};
  GeometryBounds bounds;
  bounds.b_lo = cv.positive_or("bounds.b_lo_um", bounds.b_lo);
  bounds.b_hi = cv.positive_or("bounds.b_hi_um", bounds.b_hi);
  bounds.c_lo = cv.positive_or("bounds.c_lo_um", bounds.c_lo);
  bounds.c_hi = cv.positive_or("bounds.c_hi_um", bounds.c_hi);
  bounds.field_lo = cv.number_or("bounds.B_lo_gauss", bounds.field_lo);
  bounds.field_hi = cv.number_or("bounds.B_hi_gauss", bounds.field_hi);
  NelderMeadOptions nm;
  nm.max_evaluations = cv.has("nelder_mead.max_evaluations")
                           ? cv.integer_in("nelder_mead.max_evaluations", 4,
                                           100000)
                           : nm.max_evaluations;
  nm.diameter_tol = cv.positive_or("nelder_mead.diameter_tol", nm.diameter_tol);
  nm.simplex_scale =
      cv.positive_or("nelder_mead.simplex_scale", nm.simplex_scale);
  const int restarts =
      cv.has("restarts") ? cv.integer_in("restarts", 1, 64) : 1;
  const int aux = aux_site(cv);
  const SchemeParams scheme = scheme_from(cv);
  RouterPulses pulses;
  if (obj == OptimizeObjective::transfer_fidelity) {
    if (!cv.has("pulses.t_m_us") || !cv.has("pulses.T_us") ||
        !cv.has("pulses.peak_2piMHz"))
      throw ConfigError(cv.origin() +
                        ": objective transfer_fidelity requires "
                        "'pulses.t_m_us', 'pulses.T_us' and "
                        "'pulses.peak_2piMHz'");
    pulses.t_m_us = cv.positive("pulses.t_m_us");
    pulses.T_us = cv.positive("pulses.T_us");
    pulses.peak = from_2pi_mhz(cv.positive("pulses.peak_2piMHz"));
  }

  ScenarioOutcome out;
  out.kind = "optimize";
  out.manifest = manifest_base("optimize", cv, rs);
  if (!execute) return out;

  const std::string csv_path = resolve_output(cv, rs, "optimize.csv");
  CsvWriter csv(csv_path);
  csv.header({"restart", "evaluation", "best_score", "b_um", "c_um",
              "B_gauss"});
  OptimizeResult best;
  bool have_best = false;
  std::uint64_t rng_state = rs.seed ? rs.seed : 0x9e3779b97f4a7c15ull;
  auto next_u01 = [&rng_state] {
    // splitmix64: portable, deterministic jitter for restart seeds
    rng_state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = rng_state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return (z >> 11) * 0x1.0p-53;
  };
  for (int r = 0; r < restarts; ++r) {
    std::array<double, 3> start = x0;
    if (r > 0)
      for (double& x : start) x *= 1.0 + 0.1 * (next_u01() - 0.5);
    const OptimizeResult res =
        optimize_geometry(obj, a, scheme, aux, start, bounds, nm, pulses);
    for (const OptimizeLogEntry& e : res.log)
      csv.row({static_cast<double>(r), static_cast<double>(e.evaluation),
               e.best_score, e.b_um, e.c_um, e.b_gauss});
    if (!have_best || res.score > best.score) {
      best = res;
      have_best = true;
    }
  }
  out.manifest["results"] = {{"objective", obj_s},
                             {"b_um", best.b_um},
                             {"c_um", best.c_um},
                             {"B_gauss", best.b_gauss},
                             {"score", best.score},
                             {"evaluations", best.evaluations},
                             {"converged", best.converged},
                             {"restarts", restarts}};
  out.files.push_back(csv_path);
  const std::string man = manifest_path(csv_path);
  write_manifest(man, out.manifest);
  out.files.push_back(man);
  return out;
}

inline ScenarioOutcome dispatch(const std::string& kind, const ConfigView& cv,
                                const RunSettings& rs, bool execute) {
  if (kind == "triangle") return run_triangle(cv, rs, execute);
  if (kind == "chain_transfer") return run_chain_transfer(cv, rs, execute);
  if (kind == "router_abstract") return run_router_abstract(cv, rs, execute);
  if (kind == "effective_solve") return run_effective_solve(cv, rs, execute);
  if (kind == "full_model") return run_full_model(cv, rs, execute);
  if (kind == "full_router") return run_full_router(cv, rs, execute);
  if (kind == "blockade") return run_blockade(cv, rs, execute);
  if (kind == "spectrum") return run_spectrum(cv, rs, execute);
  if (kind == "optimize") return run_optimize(cv, rs, execute);
  schema_for(kind);  // throws with the list of valid kinds
  throw ConfigError("config: unknown kind '" + kind + "'");
}

}  // namespace detail

// Schema-check a parsed config (presence, key names, types, feasibility)
// without running any dynamics. Throws ConfigError on the first violation.
inline std::string validate_scenario(const json& cfg,
                                     const std::string& origin) {
  ConfigView cv(cfg, origin);
  if (!cv.has("kind"))
    throw ConfigError(origin + ": missing required key 'kind'");
  const std::string kind = cv.text("kind");
  const ScenarioSchema& schema = schema_for(kind);
  std::vector<std::string> allowed, required;
  for (const auto& k : schema.keys) {
    allowed.push_back(k.path);
    if (k.required) required.push_back(k.path);
  }
  cv.check_keys(allowed, required);
  detail::dispatch(kind, cv, RunSettings{}, /*execute=*/false);
  return kind;
}

// Validate and execute one scenario config; returns the written artifacts
// and the manifest content.
inline ScenarioOutcome run_scenario(const json& cfg, const std::string& origin,
                                    const RunSettings& rs) {
  const std::string kind = validate_scenario(cfg, origin);
  ConfigView cv(cfg, origin);
  return detail::dispatch(kind, cv, rs, /*execute=*/true);
}

}  // namespace spinroute

#include "smc/cli.hpp"

#include "smc/bundles.hpp"
#include "smc/characterization.hpp"
#include "smc/config.hpp"
#include "smc/macro1d.hpp"
#include "smc/material.hpp"
#include "smc/output.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>

namespace smc::cli {

namespace fs = std::filesystem;
using output::format_number;

namespace {

const char* kKeyReference = R"(Configuration files are INI-style. Every physical quantity carries its
unit as a key suffix (mm, m, s, C, bar, Pa, kPa, MPa, kN, Pas, kPas, ...),
converted to SI when read. Keys:

[scenario]   materials (file), L_max_mm, W_mm, X0_mm, h0_mm, rho0_kg_per_m3,
             T0_C, TM_C, sensors_mm (list), grid_n, closure
             (quadratic|linear|hybrid|ibof)
[press]      profile_gap_mm (list, decreasing), profile_velocity_mm_per_s
             (list), F_max_kN, Pp, Pi
[solver]     control_dt_s, output_dt_s, hold_s, t_max_s, rtol,
             atol_v_mm_per_s, fixed_temperature_C, temperature_terms
[viscosity]  D1_kPas, gamma0_1_per_s, n, Tstar_C, alpha1, alpha2_C,
             T_min_C, T_max_C
[eos]        table (CSV: strain, pressure in bar), scale
[friction]   lambda_MNs_per_m3, m, v0_mm_per_s
[thermal]    kappa_W_per_mC, k_gap_W_per_m2C, cp_J_per_kgC, rho0_kg_per_m3
[suspension] f, r_p or bundle_length_mm + bundle_area_mm2, C, xi,
             fiber_stress (true|false)
[bundles]    stack_x_mm, stack_y_mm, stack_z_mm, stack_offset_mm,
             volume_fraction, bundle_length_mm, bundle_area_mm2,
             segment_length_mm, search_radius_mm, sigma_mm, cell_mm,
             drag_angle_deg (list), k_d (list), k_l (list),
             contact_cap_MPa, g_min_um, seed, workers

Exit codes: 0 success, 1 invalid input, 2 solver failure (partial outputs
are kept and listed in MANIFEST). SMC_OUT_DIR sets the default output
directory.)";

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("SMC_OUT_DIR"); env && *env) return env;
  return "out";
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error(p.string() + ": cannot open for writing");
  f << text;
}

output::Table load_table(const fs::path& p) {
  try {
    return output::read_csv(p);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
}

std::size_t column(const output::Table& t, const std::string& name, const fs::path& p) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw InputError(p.string() + ": missing column '" + name + "'");
  return std::size_t(it - t.header.begin());
}

// Millimetre value embedded in a column name such as "z2.5mm" or "x146mm_bar".
bool column_mm(const std::string& name, double& mm) {
  static const std::regex re("([0-9]+(\\.[0-9]*)?)\\s*mm");
  std::smatch m;
  if (!std::regex_search(name, m, re)) return false;
  mm = std::stod(m[1].str());
  return true;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scenario;
  std::string out;
  bool plot = false;
  int grid_n = 0;
};

int simulate(const SimulateArgs& a, std::ostream& out) {
  macro1d::Scenario sc = macro1d::Scenario::load(a.scenario);
  if (a.grid_n > 0) sc.grid_n = a.grid_n;
  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  const auto result = macro1d::run_scenario(sc);
  auto files = output::write_simulation(result, dir);
  if (a.plot) {
    std::vector<std::string> notices;
    const auto plots = output::emit_plots(result, dir, &notices);
    files.insert(files.end(), plots.begin(), plots.end());
    for (const auto& n : notices) out << "notice: " << n << '\n';
  }
  out << "samples: " << result.samples.size() << '\n';
  out << "fill_time_s: " << format_number(result.fill_time) << '\n';
  out << "switch_time_s: " << format_number(result.switch_time) << '\n';
  out << "peak_force_kN: " << format_number(result.peak_force * 1e-3) << '\n';
  if (!result.samples.empty())
    out << "mass_drift: "
        << format_number(result.samples.back().mass / result.samples.front().mass - 1.0) << '\n';
  if (!result.completed) {
    output::write_manifest(dir, files, "solver failure: " + result.error);
    throw SolverError(result.error);
  }
  output::write_manifest(dir, files, "ok");
  out << "wrote " << files.size() << " files to " << dir.string() << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// fits

struct ThermalArgs {
  std::string data;
  std::string out;
  double H_mm = 11.0;
  double T0 = 24.0;
  double TM = 145.0;
  double cp = 1530.0;
  double rho = 1480.0;
};

int fit_thermal(const ThermalArgs& a, std::ostream& out) {
  const auto t = load_table(a.data);
  const std::size_t tc = column(t, "time_s", a.data);
  std::vector<characterization::SensorSeries> series;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == tc) continue;
    double mm = 0.0;
    if (!column_mm(t.header[c], mm))
      throw InputError(a.data + ": column '" + t.header[c] + "' does not name a depth in mm");
    characterization::SensorSeries s;
    s.depth = mm * 1e-3;
    for (const auto& row : t.rows) {
      s.times.push_back(row[tc]);
      s.temps.push_back(row[c]);
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) throw InputError(a.data + ": no sensor columns");
  characterization::ThermalFitSetup setup;
  setup.H = a.H_mm * 1e-3;
  setup.T0 = a.T0;
  setup.TM = a.TM;
  setup.cp = a.cp;
  setup.rho = a.rho;
  const auto fit = characterization::fit_thermal(series, setup);
  out << "kappa_W_per_mC: " << format_number(fit.kappa) << '\n';
  out << "k_gap_W_per_m2C: " << format_number(fit.k_gap) << '\n';
  out << "residual_C2: " << format_number(fit.residual) << '\n';
  out << "iterations: " << fit.iterations << '\n';
  out << "converged: " << (fit.converged ? "yes" : "no") << '\n';
  std::vector<fs::path> files;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    files.push_back(fs::path(a.out) / "thermal.cfg");
    write_text(files.back(), "[thermal]\nkappa_W_per_mC = " + format_number(fit.kappa) +
                                 "\nk_gap_W_per_m2C = " + format_number(fit.k_gap) + "\ncp_J_per_kgC = " +
                                 format_number(a.cp) + "\nrho0_kg_per_m3 = " + format_number(a.rho) + "\n");
    output::write_manifest(a.out, files, fit.converged ? "ok" : "solver failure: fit did not converge");
  }
  if (!fit.converged) throw SolverError("thermal fit did not converge");
  return ok;
}

struct ViscosityArgs {
  std::string data;
  std::string out;
  double gamma0 = 0.1;
  double Tstar = 40.73;
};

int fit_viscosity(const ViscosityArgs& a, std::ostream& out) {
  const auto t = load_table(a.data);
  const std::size_t cT = column(t, "T_C", a.data);
  const std::size_t cg = column(t, "gammadot_1_per_s", a.data);
  const std::size_t ce = column(t, "eta_Pa_s", a.data);
  std::vector<characterization::ViscosityPoint> pts;
  for (const auto& r : t.rows) pts.push_back({r[cT], r[cg], r[ce]});
  material::ViscosityModel guess;
  guess.gamma0 = a.gamma0;
  guess.Tstar = a.Tstar;
  characterization::ViscosityFit fit;
  try {
    fit = characterization::fit_viscosity(pts, guess);
  } catch (const characterization::FitError& e) {
    throw InputError(a.data + ": " + e.what());
  }
  const auto& m = fit.model;
  const std::string kv = "[viscosity]\nD1_kPas = " + format_number(m.D1 * 1e-3) +
                         "\ngamma0_1_per_s = " + format_number(m.gamma0) + "\nn = " + format_number(m.n) +
                         "\nTstar_C = " + format_number(m.Tstar) + "\nalpha1 = " + format_number(m.alpha1) +
                         "\nalpha2_C = " + format_number(m.alpha2) + "\n";
  out << kv;
  out << "residual: " << format_number(fit.residual) << '\n';
  out << "converged: " << (fit.converged ? "yes" : "no") << '\n';
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const fs::path p = fs::path(a.out) / "viscosity.cfg";
    write_text(p, kv);
    output::write_manifest(a.out, {p}, fit.converged ? "ok" : "solver failure: fit did not converge");
  }
  if (!fit.converged) throw SolverError("viscosity fit did not converge");
  return ok;
}

struct FrictionArgs {
  std::string data;
  std::string sensors;
  std::string force;
  std::string out;
  double threshold_bar = 5.0;
  double v0_mm_per_s = 1.0;
};

int fit_friction(const FrictionArgs& a, std::ostream& out) {
  std::vector<double> times, gap, rate;
  std::vector<characterization::SensorTrace> traces;
  auto add_sensors = [&](const output::Table& t, const std::string& file, std::size_t tc) {
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      double mm = 0.0;
      if (c == tc || t.header[c].find("_bar") == std::string::npos || !column_mm(t.header[c], mm)) continue;
      characterization::SensorTrace tr;
      tr.x = mm * 1e-3;
      for (const auto& r : t.rows) {
        tr.times.push_back(r[tc]);
        tr.pressures.push_back(r[c] * 1e5);
      }
      traces.push_back(std::move(tr));
    }
    if (traces.size() < 2) throw InputError(file + ": need at least two sensor columns (x<pos>mm_bar)");
  };
  if (!a.data.empty()) {
    const auto t = load_table(a.data);
    const std::size_t tc = column(t, "t_s", a.data);
    const std::size_t hc = column(t, "h_mm", a.data);
    const std::size_t rc = column(t, "hdot_mm_per_s", a.data);
    for (const auto& r : t.rows) {
      times.push_back(r[tc]);
      gap.push_back(r[hc] * 1e-3);
      rate.push_back(r[rc] * 1e-3);
    }
    add_sensors(t, a.data, tc);
  } else {
    if (a.sensors.empty() || a.force.empty())
      throw InputError("fit-friction: give --data, or both --sensors and --force");
    const auto f = load_table(a.force);
    const auto s = load_table(a.sensors);
    const std::size_t tc = column(f, "t_s", a.force);
    const std::size_t hc = column(f, "h_mm", a.force);
    const std::size_t rc = column(f, "hdot_mm_per_s", a.force);
    const std::size_t sc = column(s, "t_s", a.sensors);
    if (f.rows.size() != s.rows.size()) throw InputError(a.sensors + ": row count differs from " + a.force);
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
      if (f.rows[i][tc] != s.rows[i][sc])
        throw InputError(a.sensors + ": time column differs from " + a.force + " at row " + std::to_string(i + 2));
      times.push_back(f.rows[i][tc]);
      gap.push_back(f.rows[i][hc] * 1e-3);
      rate.push_back(f.rows[i][rc] * 1e-3);
    }
    add_sensors(s, a.sensors, sc);
  }
  std::sort(traces.begin(), traces.end(), [](const auto& l, const auto& r) { return l.x < r.x; });
  std::vector<characterization::FrictionSample> samples;
  for (std::size_t k = 0; k + 1 < traces.size(); ++k) {
    const auto part =
        characterization::extract_friction(traces[k], traces[k + 1], gap, rate, a.threshold_bar * 1e5);
    samples.insert(samples.end(), part.begin(), part.end());
  }
  out << "samples: " << samples.size() << '\n';
  characterization::FrictionFit fit;
  try {
    fit = characterization::fit_friction(samples, a.v0_mm_per_s * 1e-3);
  } catch (const characterization::FitError& e) {
    throw InputError(std::string("fit-friction: ") + e.what());
  }
  const std::string kv = "[friction]\nlambda_MNs_per_m3 = " + format_number(fit.lambda * 1e-6) +
                         "\nm = " + format_number(fit.m) + "\nv0_mm_per_s = " + format_number(a.v0_mm_per_s) +
                         "\n";
  out << kv;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const fs::path p = fs::path(a.out) / "friction.cfg";
    write_text(p, kv);
    output::write_manifest(a.out, {p}, "ok");
  }
  return ok;
}

// ---------------------------------------------------------------------------
// bundles

struct BundlesArgs {
  std::string scenario;
  std::string config;
  std::string out;
  bool plot = false;
  long seed = -1;
  int workers = 0;
};

// Plug-flow velocity of a macroscale state at a physical point: v_x from the
// stretched-coordinate profile, v_y = 0, v_z = hdot z / h.
bundles::Vec3 plug_velocity(const macro1d::MacroState& s, const bundles::Vec3& x) {
  const int n = s.n();
  const double xs = std::clamp(x.x() / s.X, 0.0, 1.0) * (n - 1);
  const int i = std::min(int(xs), n - 2);
  const double w = xs - i;
  return {(1 - w) * s.v[i] + w * s.v[i + 1], 0.0, s.hdot * x.z() / s.h};
}

void write_chains(const fs::path& p, const std::vector<bundles::BundleChain>& chains) {
  output::Table t{{"chain", "node", "x_mm", "y_mm", "z_mm"}, {}};
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t k = 0; k < chains[c].nodes.size(); ++k) {
      const auto& q = chains[c].nodes[k];
      t.rows.push_back({double(c), double(k), q.x() * 1e3, q.y() * 1e3, q.z() * 1e3});
    }
  output::write_csv(p, t);
}

int run_bundles(const BundlesArgs& a, std::ostream& out) {
  const Config scfg = Config::load(a.scenario);
  macro1d::Scenario sc = macro1d::Scenario::from_config(scfg);
  const Config bcfg = a.config.empty() ? scfg : Config::load(a.config);
  bundles::BundleSettings bs = bundles::BundleSettings::from_config(bcfg);
  if (a.seed >= 0) bs.seed = std::uint64_t(a.seed);
  if (a.workers > 0) bs.workers = a.workers;
  if (bs.stack_offset + bs.stack_extent.x() > sc.X0 || bs.stack_extent.y() > sc.W ||
      bs.stack_extent.z() > sc.h0)
    throw ConfigError(bcfg.origin() + ": [bundles] stack_x_mm: stack does not fit inside the initial charge");

  const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
  fs::create_directories(dir);
  std::vector<fs::path> files;

  bundles::StackOptions opt;
  opt.area = bs.area;
  opt.rest_length = bs.rest_length;
  bundles::StackStats stats;
  auto chains = bundles::generate_stack(bs.stack_extent, bs.volume_fraction, bs.bundle_length, bs.seed, opt, &stats);
  for (auto& c : chains)
    for (auto& p : c.nodes) p.x() += bs.stack_offset;
  out << "chains: " << chains.size() << '\n';
  out << "volume_fraction: " << format_number(stats.volume_fraction) << '\n';
  files.push_back(dir / "bundles_initial.csv");
  write_chains(files.back(), chains);

  bundles::Box region{bundles::Vec3(0, 0, 0), bundles::Vec3(sc.L_max, sc.W, sc.h0)};
  output::Table orient{{"t_s", "Axx", "Ayy", "Azz", "Axy"}, {}};
  auto record = [&](double t) {
    const auto A = bundles::measure_orientation(chains, region).matrix();
    orient.rows.push_back({t, A(0, 0), A(1, 1), A(2, 2), A(0, 1)});
  };
  record(0.0);
  std::size_t clamped = 0;
  double next_output = sc.output_dt;
  // Chains are advected over batches of controller steps; the plug field
  // varies slowly, so the midpoint rule on the interpolated field suffices.
  const double advect_dt = std::min(0.01, sc.output_dt);
  macro1d::MacroState anchor, last;
  bool have_anchor = false;
  auto observer = [&](const macro1d::MacroState& before, const macro1d::MacroState& after) {
    if (!have_anchor) {
      anchor = before;
      have_anchor = true;
    }
    last = after;
    const bool output_due = after.t >= next_output - 1e-9;
    if (after.t - anchor.t < advect_dt - 1e-12 && !output_due && after.filled == anchor.filled) return;
    const double t0 = anchor.t, dt = after.t - anchor.t;
    const bundles::VelocityField field = [&](const bundles::Vec3& x, double t) {
      const double w = std::clamp((t - t0) / dt, 0.0, 1.0);
      return (1 - w) * plug_velocity(anchor, x) + w * plug_velocity(after, x);
    };
    region.hi.z() = std::max(anchor.h, after.h);
    bundles::Box domain{bundles::Vec3(0, 0, 0), bundles::Vec3(sc.L_max, sc.W, after.h)};
    bundles::advect(chains, field, t0, dt, domain, &clamped);
    anchor = after;
    if (output_due) {
      record(after.t);
      while (next_output <= after.t + 1e-9) next_output += sc.output_dt;
    }
  };
  const auto result = macro1d::run_scenario(sc, observer);
  auto sim_files = output::write_simulation(result, dir);
  files.insert(files.end(), sim_files.begin(), sim_files.end());
  files.push_back(dir / "bundles_final.csv");
  write_chains(files.back(), chains);
  files.push_back(dir / "bundle_orientation.csv");
  output::write_csv(files.back(), orient);

  if (!last.rho.empty()) {
    const double Dxx = (last.v[last.n() / 2 + 1] - last.v[last.n() / 2 - 1]) * (last.n() - 1) / (2.0 * last.X);
    const double gd = std::sqrt(2.0 * (Dxx * Dxx + (last.hdot / last.h) * (last.hdot / last.h)));
    const double eta = material::viscosity(sc.materials.viscosity, gd, last.Tbar);
    bundles::Vec3 lo = chains.empty() ? bundles::Vec3::Zero() : chains.front().nodes.front();
    bundles::Vec3 hi = lo;
    for (const auto& c : chains)
      for (const auto& p : c.nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    const bundles::Vec3 pad = bundles::Vec3::Constant(bs.search_radius);
    const bundles::Box box{(lo - pad).cwiseMax(bundles::Vec3::Zero()), hi + pad};
    const bundles::VelocityField field = [&](const bundles::Vec3& x, double) { return plug_velocity(last, x); };
    const auto diag = bundles::interaction(chains, field, last.t, eta, bs, box);
    output::Table bf{{"cell", "x_mm", "y_mm", "z_mm", "fx_N_per_m3", "fy_N_per_m3", "fz_N_per_m3"}, {}};
    for (int c = 0; c < diag.grid.size(); ++c) {
      const auto x = diag.grid.center(c);
      const auto& f = diag.grid.force[c];
      bf.rows.push_back({double(c), x.x() * 1e3, x.y() * 1e3, x.z() * 1e3, f.x(), f.y(), f.z()});
    }
    files.push_back(dir / "body_force.csv");
    output::write_csv(files.back(), bf);
    out << "reaction_residual: " << format_number(diag.reaction_residual) << '\n';
    out << "isolated_segments: " << diag.isolated_segments << '\n';
  }
  out << "clamped_nodes: " << clamped << '\n';
  if (!orient.rows.empty()) {
    const auto& r = orient.rows.back();
    out << "final_Axx: " << format_number(r[1]) << "\nfinal_Ayy: " << format_number(r[2])
        << "\nfinal_Azz: " << format_number(r[3]) << '\n';
  }
  if (a.plot) {
    output::Plot p{"Bundle ensemble orientation", "time (s)", "component (-)", {}};
    for (int k : {1, 2, 3}) {
      output::Series s{orient.header[k], {}, {}};
      for (const auto& r : orient.rows) {
        s.x.push_back(r[0]);
        s.y.push_back(r[k]);
      }
      p.series.push_back(std::move(s));
    }
    files.push_back(dir / "bundle_orientation.svg");
    write_text(files.back(), output::render_svg(p));
  }
  if (!result.completed) {
    output::write_manifest(dir, files, "solver failure: " + result.error);
    throw SolverError(result.error);
  }
  output::write_manifest(dir, files, "ok");
  out << "wrote " << files.size() << " files to " << dir.string() << '\n';
  return ok;
}

// ---------------------------------------------------------------------------
// validate

int validate(const std::vector<std::string>& paths, std::ostream& out) {
  for (const auto& p : paths) {
    const Config cfg = Config::load(p);
    std::string kind;
    if (cfg.has_section("scenario")) {
      const auto sc = macro1d::Scenario::from_config(cfg);
      kind = "scenario (grid_n " + std::to_string(sc.grid_n) + ", X0 " + format_number(sc.X0 * 1e3) + " mm)";
      if (cfg.has_section("bundles")) {
        bundles::BundleSettings::from_config(cfg);
        kind += " + bundles";
      }
    } else if (cfg.has_section("bundles")) {
      bundles::BundleSettings::from_config(cfg);
      kind = "bundles";
    } else {
      material::MaterialSet::from_config(cfg);
      kind = "materials";
    }
    out << p << ": ok, " << kind << '\n';
  }
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Press-rheometer compression molding simulation and characterization", "smc"};
  app.footer(kKeyReference);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run a one-dimensional press scenario");
  c_sim->add_option("--scenario", sim.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out, "Output directory (default $SMC_OUT_DIR or ./out)");
  c_sim->add_flag("--plot", sim.plot, "Also write SVG plots");
  c_sim->add_option("--grid-n", sim.grid_n, "Override [scenario] grid_n");

  ThermalArgs th;
  auto* c_th = app.add_subcommand("fit-thermal", "Fit conductivity and gap conductance to thermocouple data");
  c_th->add_option("--data", th.data, "CSV: time_s, then one column per sensor named with its depth, e.g. z2.5mm")
      ->required()
      ->check(CLI::ExistingFile);
  c_th->add_option("--out", th.out, "Directory for thermal.cfg");
  c_th->add_option("--height-mm", th.H_mm, "Stack height")->capture_default_str();
  c_th->add_option("--T0-C", th.T0, "Initial temperature")->capture_default_str();
  c_th->add_option("--TM-C", th.TM, "Mold temperature")->capture_default_str();
  c_th->add_option("--cp", th.cp, "Specific heat, J/(kg C)")->capture_default_str();
  c_th->add_option("--rho", th.rho, "Density, kg/m^3")->capture_default_str();

  ViscosityArgs vi;
  auto* c_vi = app.add_subcommand("fit-viscosity", "Fit the viscosity model to rheometer data");
  c_vi->add_option("--data", vi.data, "CSV: T_C, gammadot_1_per_s, eta_Pa_s")->required()->check(CLI::ExistingFile);
  c_vi->add_option("--out", vi.out, "Directory for viscosity.cfg");
  c_vi->add_option("--gamma0", vi.gamma0, "Fixed gamma0, 1/s")->capture_default_str();
  c_vi->add_option("--Tstar-C", vi.Tstar, "Fixed reference temperature")->capture_default_str();

  FrictionArgs fr;
  auto* c_fr = app.add_subcommand("fit-friction", "Extract and fit mold friction from sensor traces");
  c_fr->add_option("--data", fr.data, "CSV: t_s, h_mm, hdot_mm_per_s, x<pos>mm_bar ...")->check(CLI::ExistingFile);
  c_fr->add_option("--sensors", fr.sensors, "sensors.csv of a simulation")->check(CLI::ExistingFile);
  c_fr->add_option("--force", fr.force, "force.csv of the same simulation")->check(CLI::ExistingFile);
  c_fr->add_option("--threshold-bar", fr.threshold_bar, "Minimum pressure difference")->capture_default_str();
  c_fr->add_option("--v0-mm-per-s", fr.v0_mm_per_s, "Reference slip velocity")->capture_default_str();
  c_fr->add_option("--out", fr.out, "Directory for friction.cfg");

  BundlesArgs bu;
  auto* c_bu = app.add_subcommand("bundles", "Advect a bundle stack with a scenario's plug flow");
  c_bu->add_option("--scenario", bu.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  c_bu->add_option("--config", bu.config, "File with a [bundles] section (default: the scenario file)")
      ->check(CLI::ExistingFile);
  c_bu->add_option("--out", bu.out, "Output directory (default $SMC_OUT_DIR or ./out)");
  c_bu->add_option("--seed", bu.seed, "Override [bundles] seed");
  c_bu->add_option("--workers", bu.workers, "Override [bundles] workers");
  c_bu->add_flag("--plot", bu.plot, "Also write an SVG of the ensemble orientation");

  std::vector<std::string> vpaths;
  auto* c_va = app.add_subcommand("validate", "Parse and check configuration files without solving");
  c_va->add_option("files", vpaths, "Scenario, material or bundle files")->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : validation_error;
  }

  try {
    if (*c_sim) return simulate(sim, out);
    if (*c_th) return fit_thermal(th, out);
    if (*c_vi) return fit_viscosity(vi, out);
    if (*c_fr) return fit_friction(fr, out);
    if (*c_bu) return run_bundles(bu, out);
    if (*c_va) return validate(vpaths, out);
  } catch (const SolverError& e) {
    err << "error: solver failure: " << e.what() << '\n';
    return solver_failure;
  } catch (const macro1d::StepFailure& e) {
    err << "error: solver failure: " << e.what() << '\n';
    return solver_failure;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return validation_error;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return validation_error;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return validation_error;
  } catch (const bundles::BundleError& e) {
    err << "error: " << e.what() << '\n';
    return validation_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return solver_failure;
  }
  return ok;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace smc::cli

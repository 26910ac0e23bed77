// One line per acceptance criterion: PASS/FAIL, runtime and the measured
// values. Exit status is the number of failed criteria.

#include "smc/bundles.hpp"
#include "smc/characterization.hpp"
#include "smc/kdtree.hpp"
#include "smc/macro1d.hpp"
#include "smc/material.hpp"
#include "smc/orientation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace smc;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.note << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    o.pass = false;
    o.note << " [runtime over " << budget_s << " s]";
  }
  failures += !o.pass;
  std::printf("criterion %2d %s  %-44s %7.2f s %s\n", id, o.pass ? "PASS" : "FAIL", title, secs,
              o.note.str().c_str());
  std::fflush(stdout);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

macro1d::Scenario limit_scenario() {
  macro1d::Scenario sc;
  sc.materials.eos = sc.materials.eos.scaled(1e6);
  sc.materials.friction.lambda = 0.0;
  sc.materials.suspension.fiber_stress = false;
  sc.profile = {{0.1, -1e-3}, {0.0, -1e-3}};
  sc.fixed_temperature = true;
  sc.T_fixed = 25.0;
  sc.hold_time = 0.0;
  sc.t_max = 10.0;
  return sc;
}

// Pressure knots in bar against Hencky strain.
const double kEos[][2] = {
    {-0.0000, 0.0},  {-0.0770, 6.3},  {-0.1098, 12.6}, {-0.1325, 18.9}, {-0.1496, 25.3},
    {-0.1638, 31.6}, {-0.1749, 37.9}, {-0.1840, 44.2}, {-0.1923, 50.5}, {-0.1982, 56.8},
    {-0.2029, 63.2}, {-0.2073, 69.5}, {-0.2116, 75.8}, {-0.2167, 82.1}, {-0.2219, 88.4},
    {-0.2270, 94.7}, {-0.2317, 101.1}, {-0.2349, 107.4}, {-0.2378, 113.7}, {-0.2407, 120.0},
};

struct Coverage75 {
  macro1d::Scenario sc;
  macro1d::SimulationOutput out;
  int rows = 0;
  int nonmonotone_rows = 0;
  int nonmonotone_filled = 0;
  double last_bad_t = -1.0;
};

Coverage75 run_coverage75(int grid_n, bool check_monotone) {
  Coverage75 r;
  r.sc = macro1d::Scenario::load(fs::path(SMC_SOURCE_DIR) / "configs/coverage75.cfg");
  r.sc.grid_n = grid_n;
  double next = 0.0;
  macro1d::StepObserver obs;
  if (check_monotone)
    obs = [&](const macro1d::MacroState&, const macro1d::MacroState& b) {
      if (b.t < next - 1e-9) return;
      while (next <= b.t + 1e-9) next += r.sc.output_dt;
      const auto s = macro1d::sigma_zz_nodes(b, r.sc);
      ++r.rows;
      for (std::size_t i = 1; i < s.size(); ++i)
        if (-s[i] > -s[i - 1] + 1e-9 * std::abs(s[0])) {
          ++r.nonmonotone_rows;
          r.nonmonotone_filled += b.filled;
          r.last_bad_t = b.t;
          break;
        }
    };
  r.out = macro1d::run_scenario(r.sc, obs);
  return r;
}

}  // namespace

int main() {
  criterion(1, "viscosity anchors", 1.0, [](Outcome& o) {
    const material::ViscosityModel m;
    const double a = material::viscosity(m, 50.0, 80.0), b = material::viscosity(m, 0.5, 20.0);
    o.note << "eta(80C,50/s)=" << a << " Pa s, eta(20C,0.5/s)=" << b << " Pa s";
    o.require(rel(a, 179.0) < 0.02, "80 C point");
    o.require(rel(b, 135.4e3) < 0.02, "20 C point");
  });

  criterion(2, "EOS knots and midpoint", 1.0, [](Outcome& o) {
    const material::EquationOfState eos;
    int exact = 0;
    for (const auto& k : kEos) exact += material::eos_pressure(eos, k[0]) == k[1] * 1e5;
    const double mid = material::eos_pressure(eos, -0.0385) * 1e-5;
    o.note << exact << "/" << std::size(kEos) << " knots exact, p(-0.0385)=" << mid << " bar";
    o.require(exact == int(std::size(kEos)) && eos.knots().size() == std::size(kEos), "knots");
    o.require(std::abs(mid - 3.15) < 1e-9, "midpoint");
  });

  criterion(3, "average temperature series", 1.0, [](Outcome& o) {
    material::ThermalProps p;
    const double T0 = 25.0, TM = 145.0, h0 = 18e-3;
    const double at0 = characterization::average_temperature(p, T0, TM, h0, h0, 0.0);
    const double atinf = characterization::average_temperature(p, T0, TM, h0, h0, 1e7);
    double worst = 0.0, prev = at0;
    bool monotone = true;
    for (double t = 0.05; t < 5000.0; t *= 1.15) {
      const double a = characterization::average_temperature(p, T0, TM, h0, 0.9 * h0, t, 100);
      const double b = characterization::average_temperature(p, T0, TM, h0, 0.9 * h0, t, 2000);
      worst = std::max(worst, std::abs(a - b));
      const double c = characterization::average_temperature(p, T0, TM, h0, h0, t);
      monotone &= c >= prev;
      prev = c;
    }
    o.note << "T(0)=" << at0 << ", T(inf)=" << atinf << ", |T100-T2000|max=" << worst;
    o.require(std::abs(at0 - T0) <= 0.1, "initial value");
    o.require(std::abs(atinf - TM) < 1e-6, "limit");
    o.require(monotone, "monotone");
    o.require(worst < 1e-6, "truncation");
  });

  criterion(4, "thermal inverse fit round trip", 60.0, [](Outcome& o) {
    material::ThermalProps p;
    p.kappa = 0.163;
    p.k_gap = 403.0;
    characterization::ThermalFitSetup setup;
    std::vector<double> times;
    for (int i = 0; i <= 60; ++i) times.push_back(5.0 * i);
    const auto fields = characterization::solve_heat_1d(p, setup.H, setup.T0, setup.TM, times.back(), times);
    std::vector<characterization::SensorSeries> data;
    for (double depth : {2.5e-3, 5.5e-3, 8.5e-3}) {
      characterization::SensorSeries s{depth, times, {}};
      for (const auto& f : fields) s.temps.push_back(f.at(depth));
      data.push_back(s);
    }
    const auto fit = characterization::fit_thermal(data, setup);
    o.note << "kappa=" << fit.kappa << ", k=" << fit.k_gap << " from guess (" << setup.kappa_guess << ", "
           << setup.k_gap_guess << ")";
    o.require(rel(fit.kappa, 0.163) < 0.02, "kappa");
    o.require(rel(fit.k_gap, 403.0) < 0.02, "k_gap");
  });

  criterion(5, "friction extraction and fit", 5.0, [](Outcome& o) {
    const double lambda = 3.0e6, m = 0.6, v0 = 1e-3;
    // sensors along a charge with a uniform gap, pressure fields built from
    // the local force balance of the power law
    const std::vector<double> xs = {0.032, 0.146, 0.248, 0.450};
    std::vector<double> gap, rate;
    std::vector<characterization::SensorTrace> traces(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) traces[k].x = xs[k];
    for (int i = 0; i < 50; ++i) {
      const double h = 0.006 - 2e-5 * i, hdot = -(2.0 + 0.15 * i) * 1e-3;
      gap.push_back(h);
      rate.push_back(hdot);
      double p = 500e5;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k > 0) {
          const double xm = 0.5 * (xs[k - 1] + xs[k]);
          const double v = -(hdot / h) * xm;
          p -= 2.0 * lambda * v0 * std::pow(v / v0, m) * (xs[k] - xs[k - 1]) / h;
        }
        traces[k].times.push_back(0.1 * i);
        traces[k].pressures.push_back(p);
      }
    }
    std::vector<characterization::FrictionSample> samples;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      const auto s = characterization::extract_friction(traces[k], traces[k + 1], gap, rate, 5e5);
      samples.insert(samples.end(), s.begin(), s.end());
    }
    const auto fit = characterization::fit_friction(samples, v0);
    o.note << samples.size() << " samples, lambda=" << fit.lambda << ", m=" << fit.m;
    o.require(rel(fit.lambda, lambda) < 1e-6, "lambda");
    o.require(rel(fit.m, m) < 1e-6, "m");
    // boundary: exactly 5 bar is excluded, just above is kept
    characterization::SensorTrace up{0.0, {0.0, 1.0}, {10e5, 10.0001e5}}, down{0.1, {0.0, 1.0}, {5e5, 5e5}};
    const auto b = characterization::extract_friction(up, down, {0.01, 0.01}, {-1e-3, -1e-3}, 5e5);
    o.note << ", threshold kept " << b.size() << "/2";
    o.require(b.size() == 1 && b[0].t == 1.0, "threshold");
  });

  criterion(6, "incompressible frictionless fill", 60.0, [](Outcome& o) {
    const auto sc = limit_scenario();
    double worst = 0.0;
    const auto out = macro1d::run_scenario(sc, [&](const macro1d::MacroState&, const macro1d::MacroState& b) {
      if (b.filled) return;
      const int n = b.n();
      const double v1 = b.v[n - 1];
      if (v1 == 0.0) return;
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(b.v[i] - v1 * b.xstar(i)) / std::abs(v1));
    });
    o.note << "fill=" << out.fill_time << " s, linearity dev=" << worst;
    o.require(out.completed, "run completed");
    o.require(rel(out.fill_time, 4.5) < 0.01, "fill time");
    o.require(worst < 1e-3, "linearity");
  });

  criterion(7, "Newtonian frictionless stress", 60.0, [](Outcome& o) {
    auto sc = limit_scenario();
    sc.h0 = 0.010;
    sc.materials.viscosity.D1 = 1e4;
    sc.materials.viscosity.alpha1 = 0.0;
    sc.materials.viscosity.gamma0 = 1e12;
    sc.t_max = 0.02;
    macro1d::MacroState last;
    macro1d::run_scenario(sc, [&](const macro1d::MacroState&, const macro1d::MacroState& b) { last = b; });
    const double expected = 4.0 * 1e4 * last.hdot / last.h;
    double worst = 0.0;
    for (double s : macro1d::sigma_zz_nodes(last, sc)) worst = std::max(worst, rel(s, expected));
    const double F = macro1d::total_force(last, sc);
    o.note << "max sigma_zz dev=" << worst << ", F=" << F << " N";
    o.require(worst < 0.01, "uniform stress");
    o.require(rel(F, 1080.0) < 0.01, "force");
  });

  Coverage75 c40;
  criterion(8, "post-fill force control (75 %)", 300.0, [&](Outcome& o) {
    c40 = run_coverage75(40, true);
    const auto& out = c40.out;
    o.require(out.completed && out.fill_time > 0, "run completed and filled");
    double worstF = 0.0;
    for (const auto& s : out.samples)
      if (s.t >= out.fill_time + 1.0) worstF = std::max(worstF, rel(s.F, 4.4e6));
    const auto& last = out.samples.back();
    double worstP = 0.0;
    for (double p : last.sensors) worstP = std::max(worstP, rel(p, 122e5));
    o.note << "fill=" << out.fill_time << " s, switch=" << out.switch_time << " s, max|F/4400kN-1| after fill+1s="
           << worstF << ", max|p/122bar-1| at t=" << last.t << " s: " << worstP;
    o.require(worstF <= 0.05, "force band");
    o.require(worstP <= 0.02, "sensor pressures");
  });

  criterion(9, "pressure monotone towards the front", 0.0, [&](Outcome& o) {
    o.require(c40.rows > 0, "run available");
    o.note << c40.nonmonotone_rows << "/" << c40.rows << " output steps non-monotone ("
           << c40.nonmonotone_rows - c40.nonmonotone_filled << " while filling)";
    if (c40.nonmonotone_rows) o.note << ", last at t=" << c40.last_bad_t << " s";
    o.require(c40.nonmonotone_rows == 0, "monotone at every output step");
  });

  criterion(10, "orientation closures and ensemble", 120.0, [](Outcome& o) {
    using namespace orientation;
    double worst = 0.0;
    for (double strain : {0.1, 0.5, 1.0, 2.0}) {
      const auto s = evolve_planar({}, {{strain, 1.0}}, ClosureKind::quadratic);
      worst = std::max(worst, std::abs(s.Axx - std::exp(2 * strain) / (1 + std::exp(2 * strain))));
    }
    const auto iso = evolve_planar_exact({}, 100000);
    const bundles::StackOptions opt = [] {
      bundles::StackOptions s;
      s.clip = false;
      return s;
    }();
    const bundles::Vec3 ext(50e-3, 50e-3, 10e-3);
    const double vf = 1e4 * 25e-3 * opt.area / ext.prod();
    auto chains = bundles::generate_stack(ext, vf * (1 - 1e-9), 25e-3, 11, opt);
    const bundles::Box domain{bundles::Vec3::Constant(-1.0), bundles::Vec3::Constant(1.0)};
    const auto field = [](const bundles::Vec3& x, double) { return bundles::Vec3(x.x(), 0.0, -x.z()); };
    for (int k = 0; k < 100; ++k) bundles::advect(chains, field, 0.005 * k, 0.005, domain);
    const auto A = bundles::measure_orientation(chains, domain).matrix();
    const double oracle = evolve_planar_exact({{0.5, 1.0}}).state.Axx;
    o.note << "logistic dev=" << worst << ", iso Axxxx=" << iso.Axxxx << ", " << chains.size()
           << " chains Axx=" << A(0, 0) << " vs " << oracle << ", Azz=" << A(2, 2);
    o.require(worst < 1e-4, "logistic");
    o.require(std::abs(iso.Axxxx - 0.375) < 1e-4, "isotropic Axxxx");
    o.require(chains.size() == 10000, "chain count");
    o.require(std::abs(A(0, 0) - oracle) <= 0.02, "ensemble Axx");
    o.require(std::abs(A(2, 2)) < 0.01, "ensemble Azz");
  });

  criterion(11, "kd-tree and reaction balance", 30.0, [](Outcome& o) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int mismatches = 0;
    long hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Eigen::Vector3d> pts(1000);
      for (auto& p : pts) p = Eigen::Vector3d(u(rng), u(rng), u(rng));
      const bundles::KdTree tree(pts);
      for (int q = 0; q < 100; ++q) {
        const Eigen::Vector3d x(u(rng), u(rng), u(rng));
        const double r = 0.05 + 0.15 * u(rng);
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < pts.size(); ++i)
          if ((pts[i] - x).norm() < r) want.push_back(i);
        mismatches += tree.radius_query(x, r) != want;
        hits += long(want.size());
      }
    }
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto chains = bundles::generate_stack({20e-3, 20e-3, 4e-3}, 0.2, 10e-3, 100 + trial);
      bundles::BundleSettings s;
      s.workers = 1 + trial % 4;
      const bundles::Box box{bundles::Vec3::Zero(), bundles::Vec3(20e-3, 20e-3, 4e-3)};
      const double w = 10.0 * u(rng);
      const auto field = [&](const bundles::Vec3& x, double) {
        return bundles::Vec3(w * x.y() * x.z(), std::sin(300 * x.x()) * 1e-3, 0.0);
      };
      worst = std::max(worst, bundles::interaction(chains, field, 0.0, 1e4, s, box).reaction_residual);
    }
    o.note << mismatches << " mismatching queries of 10000 (" << hits << " hits), reaction residual max=" << worst;
    o.require(mismatches == 0, "kd-tree");
    o.require(worst < 1e-10, "reaction");
  });

  criterion(12, "mass conservation and grid refinement", 0.0, [&](Outcome& o) {
    o.require(!c40.out.samples.empty(), "run available");
    double drift = 0.0;
    for (const auto& s : c40.out.samples) drift = std::max(drift, std::abs(s.mass / c40.out.samples.front().mass - 1));
    const auto c80 = run_coverage75(80, false);
    const double dfill = rel(c80.out.fill_time, c40.out.fill_time);
    const double dpeak = rel(c80.out.peak_force, c40.out.peak_force);
    o.note << "mass drift=" << drift << ", fill " << c40.out.fill_time << " -> " << c80.out.fill_time
           << " s, peak " << c40.out.peak_force * 1e-3 << " -> " << c80.out.peak_force * 1e-3 << " kN";
    o.require(drift <= 0.005, "mass drift");
    o.require(c80.out.completed, "grid 80 run");
    o.require(dfill < 0.01, "fill time change");
    o.require(dpeak < 0.01, "peak force change");
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures;
}

#include "smc/cli.hpp"
#include "smc/output.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = smc::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string short_scenario(const std::string& extra_scenario = "", double t_max = 0.3) {
  return "[scenario]\nmaterials = " + (testing::source_dir() / "configs/upph_gf.cfg").string() +
         "\nL_max_mm = 800\nW_mm = 450\nX0_mm = 600\nh0_mm = 18\nT0_C = 25\nTM_C = 145\n"
         "sensors_mm = 32, 146, 709\ngrid_n = 20\n" +
         extra_scenario +
         "[press]\nprofile_gap_mm = 10, 0\nprofile_velocity_mm_per_s = -1, -1\nF_max_kN = 4400\n"
         "[solver]\ncontrol_dt_s = 0.01\noutput_dt_s = 0.05\nhold_s = 0\nt_max_s = " +
         smc::output::format_number(t_max) + "\n";
}

double value_after(const std::string& text, const std::string& key) {
  const auto p = text.find(key);
  REQUIRE(p != std::string::npos);
  return std::stod(text.substr(p + key.size()));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help documents the configuration keys") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  for (const char* key : {"X0_mm", "F_max_kN", "control_dt_s", "D1_kPas", "lambda_MNs_per_m3", "volume_fraction",
                          "simulate", "fit-thermal", "fit-viscosity", "fit-friction", "bundles", "validate"})
    CHECK_MESSAGE(r.out.find(key) != std::string::npos, key);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("validate accepts the shipped configurations") {
  for (const char* f : {"configs/coverage75.cfg", "configs/coverage25.cfg", "configs/upph_gf.cfg"}) {
    const auto r = run({"validate", (testing::source_dir() / f).string()});
    CHECK_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find(": ok") != std::string::npos);
  }
}

TEST_CASE("invalid scenarios exit 1 and name the key") {
  const auto dir = testing::scratch_dir("cli_bad");
  std::string text = short_scenario();
  text.replace(text.find("X0_mm = 600"), 11, "X0_mm = 900");
  testing::write_file(dir / "bad.cfg", text);
  for (const char* cmd : {"simulate", "validate"}) {
    const auto r = cmd == std::string("simulate")
                       ? run({"simulate", "--scenario", (dir / "bad.cfg").string(), "--out", (dir / "o").string()})
                       : run({"validate", (dir / "bad.cfg").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("X0_mm") != std::string::npos);
    CHECK(r.err.find("bad.cfg") != std::string::npos);
  }
  testing::write_file(dir / "unit.cfg", "[scenario]\nX0_bar = 3\n");
  CHECK(run({"validate", (dir / "unit.cfg").string()}).code == 1);
  CHECK(run({"simulate", "--scenario", (dir / "nope.cfg").string()}).code == 1);
}

TEST_CASE("simulate writes tables, plots and a manifest") {
  const auto dir = testing::scratch_dir("cli_sim");
  testing::write_file(dir / "s.cfg", short_scenario());
  const auto r = run({"simulate", "--scenario", (dir / "s.cfg").string(), "--out", (dir / "o").string(), "--plot"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"force.csv", "sensors.csv", "orientation.csv", "force.svg", "sensors.svg", "orientation.svg"})
    CHECK_MESSAGE(fs::exists(dir / "o" / f), f);
  const auto manifest = testing::read_file(dir / "o/MANIFEST");
  CHECK(manifest.rfind("status: ok\n", 0) == 0);
  CHECK(manifest.find("force.csv\n") != std::string::npos);
  const auto force = smc::output::read_csv(dir / "o/force.csv");
  CHECK(force.rows.size() == 7);
  CHECK(std::abs(value_after(r.out, "mass_drift: ")) < 1e-9);
  CHECK(value_after(r.out, "fill_time_s: ") < 0.0);
}

TEST_CASE("SMC_OUT_DIR sets the default output directory") {
  const auto dir = testing::scratch_dir("cli_env");
  testing::write_file(dir / "s.cfg", short_scenario("", 0.1));
  ::setenv("SMC_OUT_DIR", (dir / "env_out").string().c_str(), 1);
  const auto r = run({"simulate", "--scenario", (dir / "s.cfg").string()});
  ::unsetenv("SMC_OUT_DIR");
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir / "env_out/MANIFEST"));
}

TEST_CASE("fit-viscosity recovers a synthetic data set") {
  const auto dir = testing::scratch_dir("cli_visc");
  // independent evaluation of the temperature-shifted power-law fluid
  const double D1 = 150e3, gamma0 = 0.1, n = 0.35, Tstar = 40.73, a1 = 8.0, a2 = 110.0;
  std::string csv = "T_C,gammadot_1_per_s,eta_Pa_s\n";
  for (double T : {25.0, 40.0, 60.0})
    for (double g : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      const double eta0 = D1 * std::exp(-a1 * (T - Tstar) / (a2 + T - Tstar));
      const double eta = eta0 / (1 + std::pow(g / gamma0, 1 - n));
      csv += smc::output::format_number(T) + "," + smc::output::format_number(g) + "," +
             smc::output::format_number(eta) + "\n";
    }
  testing::write_file(dir / "v.csv", csv);
  const auto r = run({"fit-viscosity", "--data", (dir / "v.csv").string(), "--out", (dir / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(value_after(r.out, "D1_kPas = ") == doctest::Approx(150.0).epsilon(0.01));
  CHECK(value_after(r.out, "\nn = ") == doctest::Approx(0.35).epsilon(0.01));
  CHECK(value_after(r.out, "alpha1 = ") == doctest::Approx(8.0).epsilon(0.02));
  CHECK(fs::exists(dir / "o/viscosity.cfg"));
  testing::write_file(dir / "w.csv", "T_C,gammadot_1_per_s\n25,1\n");
  const auto bad = run({"fit-viscosity", "--data", (dir / "w.csv").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("eta_Pa_s") != std::string::npos);
}

TEST_CASE("fit-friction recovers a synthetic power law") {
  const auto dir = testing::scratch_dir("cli_fric");
  const double lambda = 2e5, m = 0.4, h = 5e-3, x1 = 0.1, x2 = 0.2;
  std::string csv = "t_s,h_mm,hdot_mm_per_s,x100mm_bar,x200mm_bar\n";
  for (int i = 0; i < 20; ++i) {
    const double hdot = -(0.01 + 0.01 * i) * 1e-3;
    const double v = -(hdot / h) * 0.5 * (x1 + x2);
    const double tau = lambda * std::pow(v / 1e-3, m);
    const double p2 = 10e5, p1 = p2 + 2 * tau * (x2 - x1) / h;
    csv += smc::output::format_number(0.1 * i) + "," + smc::output::format_number(h * 1e3) + "," +
           smc::output::format_number(hdot * 1e3) + "," + smc::output::format_number(p1 * 1e-5) + "," +
           smc::output::format_number(p2 * 1e-5) + "\n";
  }
  testing::write_file(dir / "f.csv", csv);
  const auto r = run({"fit-friction", "--data", (dir / "f.csv").string(), "--out", (dir / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(value_after(r.out, "samples: ") == 20);
  CHECK(value_after(r.out, "lambda_MNs_per_m3 = ") == doctest::Approx(200.0).epsilon(1e-6));
  CHECK(value_after(r.out, "\nm = ") == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(fs::exists(dir / "o/friction.cfg"));
  CHECK(run({"fit-friction"}).code == 1);
}

TEST_CASE("fit-thermal rejects columns without a depth") {
  const auto dir = testing::scratch_dir("cli_thermal");
  testing::write_file(dir / "t.csv", "time_s,top\n0,24\n10,30\n");
  const auto r = run({"fit-thermal", "--data", (dir / "t.csv").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("'top'") != std::string::npos);
}

TEST_CASE("bundles run reports orientation and reaction balance") {
  const auto dir = testing::scratch_dir("cli_bundles");
  testing::write_file(dir / "s.cfg",
                      short_scenario("", 0.2) +
                          "[bundles]\nstack_x_mm = 20\nstack_y_mm = 20\nstack_z_mm = 4.5\nstack_offset_mm = 290\n"
                          "volume_fraction = 0.1\nbundle_length_mm = 10\nseed = 3\nworkers = 2\n");
  const auto r = run({"bundles", "--scenario", (dir / "s.cfg").string(), "--out", (dir / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(value_after(r.out, "reaction_residual: ") < 1e-10);
  CHECK(value_after(r.out, "final_Azz: ") < 0.01);
  for (const char* f : {"bundles_initial.csv", "bundles_final.csv", "bundle_orientation.csv", "body_force.csv"})
    CHECK_MESSAGE(fs::exists(dir / "o" / f), f);
  testing::write_file(dir / "big.cfg", short_scenario() + "[bundles]\nstack_offset_mm = 580\n");
  const auto bad = run({"bundles", "--scenario", (dir / "big.cfg").string(), "--out", (dir / "o2").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("stack") != std::string::npos);
}

}

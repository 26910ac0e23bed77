#include "smc/config.hpp"
#include "smc/material.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace smc::material;

namespace {

// Rheometer fit parameters and compaction table as printed.
double eta_reference(double gd, double T) {
  const double D1 = 72e3, g0 = 0.1, n = 0.385, Ts = 40.73, a1 = 7.94, a2 = 105.96;
  const double eta0 = D1 * std::exp(-a1 * (T - Ts) / (a2 + T - Ts));
  return eta0 / (1.0 + std::pow(gd / g0, 1.0 - n));
}

const double kTable[][2] = {
    {-0.0000, 0.0},  {-0.0770, 6.3},  {-0.1098, 12.6}, {-0.1325, 18.9}, {-0.1496, 25.3},
    {-0.1638, 31.6}, {-0.1749, 37.9}, {-0.1840, 44.2}, {-0.1923, 50.5}, {-0.1982, 56.8},
    {-0.2029, 63.2}, {-0.2073, 69.5}, {-0.2116, 75.8}, {-0.2167, 82.1}, {-0.2219, 88.4},
    {-0.2270, 94.7}, {-0.2317, 101.1}, {-0.2349, 107.4}, {-0.2378, 113.7}, {-0.2407, 120.0},
};

}  // namespace

TEST_SUITE("material") {

TEST_CASE("viscosity closed form") {
  const ViscosityModel m;
  CHECK(viscosity(m, 0.0, 40.73) == doctest::Approx(72e3).epsilon(1e-12));
  CHECK(viscosity(m, 0.1, 40.73) == doctest::Approx(36e3).epsilon(1e-12));
  for (double T : {20.0, 35.0, 60.0, 80.0})
    for (double gd : {0.01, 0.5, 5.0, 50.0})
      CHECK(viscosity(m, gd, T) == doctest::Approx(eta_reference(gd, T)).epsilon(1e-12));
}

TEST_CASE("viscosity against the printed fit curves") {
  const ViscosityModel m;
  CHECK(testing::rel_err(viscosity(m, 50.0, 80.0), 0.179e3) < 0.02);
  CHECK(testing::rel_err(viscosity(m, 0.5, 20.0), 135.4e3) < 0.02);
}

TEST_CASE("viscosity is non-increasing in shear rate and temperature") {
  const ViscosityModel m;
  for (double T = 20.0; T <= 80.0; T += 2.5) {
    double prev = viscosity(m, 0.0, T);
    for (double gd = 1e-3; gd < 1e3; gd *= 1.3) {
      const double eta = viscosity(m, gd, T);
      CHECK(eta <= prev);
      prev = eta;
    }
  }
  for (double gd : {0.0, 0.1, 10.0}) {
    double prev = viscosity(m, gd, 20.0);
    for (double T = 20.5; T <= 80.0; T += 0.5) {
      const double eta = viscosity(m, gd, T);
      CHECK(eta <= prev);
      prev = eta;
    }
  }
}

TEST_CASE("temperatures outside the fit range are clamped and counted") {
  const ViscosityModel m;
  reset_viscosity_clamp_count();
  CHECK(viscosity(m, 1.0, 145.0) == viscosity(m, 1.0, 80.0));
  CHECK(viscosity(m, 1.0, 0.0) == viscosity(m, 1.0, 20.0));
  CHECK(viscosity_clamp_count() == 2);
  reset_viscosity_clamp_count();
  CHECK(viscosity_clamp_count() == 0);
}

TEST_CASE("viscosity domain errors") {
  ViscosityModel m;
  m.alpha2 = 10.0;
  m.Tstar = 40.0;
  CHECK_THROWS_AS(viscosity(m, 1.0, 25.0), smc::DomainError);
  CHECK_THROWS_AS(m.validate(), smc::DomainError);
  ViscosityModel bad_n;
  bad_n.n = 1.0;
  CHECK_THROWS_AS(bad_n.validate(), smc::DomainError);
}

TEST_CASE("EOS reproduces every table knot, bar interpretation") {
  const auto eos = EquationOfState::upph_gf();
  REQUIRE(eos.knots().size() == std::size(kTable));
  for (const auto& row : kTable) CHECK(eos_pressure(eos, row[0]) == row[1] * 1e5);
  CHECK(eos_pressure(eos, -0.1098) == doctest::Approx(12.6e5));
  CHECK(eos_pressure(eos, -0.0385) == doctest::Approx(3.15e5).epsilon(1e-12));
  CHECK(eos_pressure(eos, 0.05) == 0.0);
}

TEST_CASE("EOS extrapolates with the final slope") {
  const auto eos = EquationOfState::upph_gf();
  const double slope = (120.0 - 113.7) * 1e5 / (0.2407 - 0.2378);
  CHECK(eos.extrapolation_slope() == doctest::Approx(slope));
  CHECK(eos_pressure(eos, -0.2507) == doctest::Approx(120e5 + slope * 0.01));
}

TEST_CASE("EOS is continuous and monotone in |E|") {
  const auto eos = EquationOfState::upph_gf();
  double prev = 0.0;
  for (double E = 0.0; E > -0.3; E -= 1e-4) {
    const double p = eos_pressure(eos, E);
    CHECK(p >= prev);
    CHECK(p - prev < 1e-4 * 2.2e9);  // bounded by the steepest segment
    prev = p;
  }
  // continuity at each knot
  for (const auto& row : kTable) {
    CHECK(std::abs(eos_pressure(eos, row[0] + 1e-12) - row[1] * 1e5) < 1e-2);
    CHECK(std::abs(eos_pressure(eos, row[0] - 1e-12) - row[1] * 1e5) < 1e-2);
  }
}

TEST_CASE("EOS from density") {
  const auto eos = EquationOfState::upph_gf();
  CHECK(eos_pressure_from_density(eos, 1480.0, 1480.0) == 0.0);
  CHECK(eos_pressure_from_density(eos, 1400.0, 1480.0) == 0.0);
  CHECK(eos_pressure_from_density(eos, 1480.0 * std::exp(0.1098), 1480.0) ==
        doctest::Approx(12.6e5).epsilon(1e-9));
}

TEST_CASE("EOS invariants are enforced") {
  using K = EquationOfState::Knot;
  CHECK_THROWS_AS(EquationOfState({{-0.1, 0.0}, {-0.2, 1.0}}), smc::DomainError);
  CHECK_THROWS_AS(EquationOfState({{0.0, 0.0}, {-0.2, 1.0}, {-0.1, 2.0}}), smc::DomainError);
  CHECK_THROWS_AS(EquationOfState({{0.0, 0.0}, {-0.2, 1.0}, {-0.3, 1.0}}), smc::DomainError);
  CHECK_THROWS_AS(EquationOfState(std::vector<K>{{0.0, 0.0}}), smc::DomainError);
  const auto scaled = EquationOfState::upph_gf().scaled(1e6);
  CHECK(eos_pressure(scaled, -0.0770) == doctest::Approx(6.3e5 * 1e6));
}

TEST_CASE("EOS table file") {
  const auto dir = testing::scratch_dir("eos");
  testing::write_file(dir / "t.csv", "strain,pressure_bar\n0,0\n-0.1,10\n");
  const auto eos = EquationOfState::load_csv(dir / "t.csv");
  CHECK(eos_pressure(eos, -0.05) == doctest::Approx(5e5));
  const auto shipped = EquationOfState::load_csv(testing::source_dir() / "configs/upph_gf_eos.csv");
  REQUIRE(shipped.knots().size() == std::size(kTable));
  for (std::size_t i = 0; i < std::size(kTable); ++i)
    CHECK(shipped.knots()[i].pressure == doctest::Approx(kTable[i][1] * 1e5));
  testing::write_file(dir / "bad.csv", "strain,pressure_bar\n0,0\n-0.1,abc\n");
  CHECK_THROWS_WITH_AS(EquationOfState::load_csv(dir / "bad.csv"), doctest::Contains("bad.csv:3"),
                       smc::ConfigError);
}

TEST_CASE("friction power law") {
  const FrictionModel f;
  CHECK(friction_stress(f, 1e-3) == doctest::Approx(-3.0e3));
  CHECK(friction_stress(f, 4e-3) == doctest::Approx(-3000.0 * std::pow(4.0, 0.6)));
  CHECK(friction_stress(f, 4e-3) == doctest::Approx(-6.89e3).epsilon(1e-3));
  CHECK(friction_stress(f, 0.0) == 0.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng);
    CHECK(friction_stress(f, v) == -friction_stress(f, -v));
    CHECK(friction_stress(f, v) * v <= 0.0);
  }
}

TEST_CASE("equivalent shear rate") {
  using M = Eigen::Matrix3d;
  CHECK(equivalent_shear_rate(M::Zero()) == 0.0);
  M shear = M::Zero();
  shear(0, 1) = shear(1, 0) = 0.35;
  CHECK(equivalent_shear_rate(shear) == doctest::Approx(0.7));
  CHECK(equivalent_shear_rate(M(Eigen::Vector3d(0.1, 0.0, -0.1).asDiagonal())) ==
        doctest::Approx(0.2));
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    M D = M::NullaryExpr([&](Eigen::Index, Eigen::Index) { return g(rng); });
    D = 0.5 * (D + D.transpose()).eval();
    const double s = g(rng);
    CHECK(equivalent_shear_rate(D + s * M::Identity()) ==
          doctest::Approx(equivalent_shear_rate(D)).epsilon(1e-12));
  }
}

TEST_CASE("material set from config") {
  const auto m = MaterialSet::load(testing::source_dir() / "configs/upph_gf.cfg");
  CHECK(m.viscosity.D1 == doctest::Approx(72e3));
  CHECK(m.friction.lambda == doctest::Approx(3e6));
  CHECK(m.friction.v0 == doctest::Approx(1e-3));
  CHECK(m.thermal.k_gap == doctest::Approx(403.0));
  CHECK(m.suspension.r_p == doctest::Approx(25e-3 / std::sqrt(4 * 0.03e-6 / M_PI)));
  CHECK(eos_pressure(m.eos, -0.2407) == doctest::Approx(120e5));
  const auto bad = smc::Config::parse("[friction]\nm = 1.5\n", "mat.cfg");
  CHECK_THROWS_WITH_AS(MaterialSet::from_config(bad), doctest::Contains("mat.cfg"), smc::ConfigError);
  const auto bad_f = smc::Config::parse("[suspension]\nf = 1.2\n", "mat.cfg");
  CHECK_THROWS_AS(MaterialSet::from_config(bad_f), smc::ConfigError);
}

}

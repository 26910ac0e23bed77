#include "smc/material.hpp"

#include "smc/config.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace smc::material {

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};

constexpr double kBar = 1e5;

// Averaged rising flank of the compaction trials: (Hencky strain, pressure
// in bar).
constexpr std::pair<double, double> kUpphGfTable[] = {
    {-0.0000, 0.0},   {-0.0770, 6.3},   {-0.1098, 12.6},  {-0.1325, 18.9},  {-0.1496, 25.3},
    {-0.1638, 31.6},  {-0.1749, 37.9},  {-0.1840, 44.2},  {-0.1923, 50.5},  {-0.1982, 56.8},
    {-0.2029, 63.2},  {-0.2073, 69.5},  {-0.2116, 75.8},  {-0.2167, 82.1},  {-0.2219, 88.4},
    {-0.2270, 94.7},  {-0.2317, 101.1}, {-0.2349, 107.4}, {-0.2378, 113.7}, {-0.2407, 120.0},
};

}  // namespace

void ViscosityModel::validate() const {
  if (!(D1 > 0)) throw DomainError("viscosity: D1 must be positive");
  if (!(gamma0 > 0)) throw DomainError("viscosity: gamma0 must be positive");
  if (!(n > 0 && n < 1)) throw DomainError("viscosity: n must lie in (0, 1)");
  if (!(T_min <= T_max)) throw DomainError("viscosity: T_min must not exceed T_max");
  if (!(alpha2 + (T_min - Tstar) > 0))
    throw DomainError("viscosity: alpha2 + (T - Tstar) must stay positive over [T_min, T_max]");
}

EquationOfState::EquationOfState(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw DomainError("eos: at least two knots required");
  if (knots_.front().strain != 0.0 || knots_.front().pressure != 0.0)
    throw DomainError("eos: first knot must be (0, 0)");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].strain < knots_[i - 1].strain))
      throw DomainError("eos: strain must be strictly decreasing (row " + std::to_string(i) + ")");
    if (!(knots_[i].pressure > knots_[i - 1].pressure))
      throw DomainError("eos: pressure must be strictly increasing (row " + std::to_string(i) +
                        ")");
  }
  const auto& a = knots_[knots_.size() - 2];
  const auto& b = knots_.back();
  extrapolation_slope_ = (b.pressure - a.pressure) / (a.strain - b.strain);
}

EquationOfState EquationOfState::upph_gf() {
  std::vector<Knot> knots;
  for (const auto& [e, p] : kUpphGfTable) knots.push_back({e, p * kBar});
  return EquationOfState(std::move(knots));
}

EquationOfState EquationOfState::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open equation-of-state table");
  std::string line;
  std::vector<Knot> knots;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'strain,pressure_bar'");
    try {
      knots.push_back({std::stod(a), std::stod(b) * kBar});
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  try {
    return EquationOfState(std::move(knots));
  } catch (const DomainError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

EquationOfState EquationOfState::scaled(double factor) const {
  if (!(factor > 0)) throw DomainError("eos: scale factor must be positive");
  std::vector<Knot> k = knots_;
  for (auto& knot : k) knot.pressure *= factor;
  return EquationOfState(std::move(k));
}

double EquationOfState::pressure(double strain) const {
  if (strain >= 0.0) return 0.0;
  const auto& last = knots_.back();
  if (strain <= last.strain) return last.pressure + extrapolation_slope_ * (last.strain - strain);
  // knots are sorted by decreasing strain
  auto it = std::lower_bound(knots_.begin(), knots_.end(), strain,
                             [](const Knot& k, double e) { return k.strain > e; });
  const Knot& b = *it;
  const Knot& a = *(it - 1);
  if (b.strain == strain) return b.pressure;
  const double w = (a.strain - strain) / (a.strain - b.strain);
  return a.pressure + w * (b.pressure - a.pressure);
}

double EquationOfState::slope(double strain) const {
  if (strain >= 0.0) return 0.0;
  const auto& last = knots_.back();
  if (strain <= last.strain) return -extrapolation_slope_;
  auto it = std::lower_bound(knots_.begin(), knots_.end(), strain,
                             [](const Knot& k, double e) { return k.strain > e; });
  const Knot& b = *it;
  const Knot& a = *(it - 1);
  return (b.pressure - a.pressure) / (b.strain - a.strain);
}

void FrictionModel::validate() const {
  if (!(lambda >= 0)) throw DomainError("friction: lambda must be non-negative");
  if (!(m > 0 && m <= 1)) throw DomainError("friction: m must lie in (0, 1]");
  if (!(v0 > 0)) throw DomainError("friction: v0 must be positive");
}

void ThermalProps::validate() const {
  if (!(kappa > 0 && k_gap > 0 && cp > 0 && rho0 > 0))
    throw DomainError("thermal: kappa, k_gap, cp and rho0 must be positive");
}

double bundle_aspect_ratio(double length, double area) {
  return length / std::sqrt(4.0 * area / std::numbers::pi);
}

void SuspensionParams::validate() const {
  if (!(f > 0 && f < 1)) throw DomainError("suspension: f must lie in (0, 1)");
  const double bracket = std::log(1.0 / f) + std::log(std::log(1.0 / f)) + C;
  if (!(std::log(1.0 / f) > 0) || !(bracket > 0))
    throw DomainError("suspension: ln(1/f) + ln ln(1/f) + C must be positive");
  if (!(r_p > 1)) throw DomainError("suspension: r_p must exceed 1");
  if (!(xi >= 0 && xi <= 1)) throw DomainError("suspension: xi must lie in [0, 1]");
}

void MaterialSet::validate() const {
  viscosity.validate();
  friction.validate();
  thermal.validate();
  suspension.validate();
}

MaterialSet MaterialSet::from_config(const Config& cfg) {
  MaterialSet m;
  using D = Dimension;
  if (cfg.has_section("viscosity")) {
    auto& v = m.viscosity;
    v.D1 = cfg.quantity_or("viscosity", "D1", D::viscosity, v.D1);
    v.gamma0 = cfg.quantity_or("viscosity", "gamma0", D::rate, v.gamma0);
    v.n = cfg.quantity_or("viscosity", "n", D::none, v.n);
    v.Tstar = cfg.quantity_or("viscosity", "Tstar", D::temperature, v.Tstar);
    v.alpha1 = cfg.quantity_or("viscosity", "alpha1", D::none, v.alpha1);
    v.alpha2 = cfg.quantity_or("viscosity", "alpha2", D::temperature, v.alpha2);
    v.T_min = cfg.quantity_or("viscosity", "T_min", D::temperature, v.T_min);
    v.T_max = cfg.quantity_or("viscosity", "T_max", D::temperature, v.T_max);
  }
  if (cfg.has_section("eos")) {
    if (cfg.has("eos", "table")) {
      std::filesystem::path p = cfg.text("eos", "table");
      if (p.is_relative()) p = cfg.base_dir() / p;
      m.eos = EquationOfState::load_csv(p);
    }
    const double scale = cfg.quantity_or("eos", "scale", D::none, 1.0);
    if (scale != 1.0) m.eos = m.eos.scaled(scale);
  }
  if (cfg.has_section("friction")) {
    auto& f = m.friction;
    f.lambda = cfg.quantity_or("friction", "lambda", D::friction_coefficient, f.lambda);
    f.m = cfg.quantity_or("friction", "m", D::none, f.m);
    f.v0 = cfg.quantity_or("friction", "v0", D::velocity, f.v0);
  }
  if (cfg.has_section("thermal")) {
    auto& t = m.thermal;
    t.kappa = cfg.quantity_or("thermal", "kappa", D::conductivity, t.kappa);
    t.k_gap = cfg.quantity_or("thermal", "k_gap", D::conductance, t.k_gap);
    t.cp = cfg.quantity_or("thermal", "cp", D::specific_heat, t.cp);
    t.rho0 = cfg.quantity_or("thermal", "rho0", D::density, t.rho0);
  }
  if (cfg.has_section("suspension")) {
    auto& s = m.suspension;
    s.f = cfg.quantity_or("suspension", "f", D::none, s.f);
    if (cfg.has("suspension", "r_p")) {
      s.r_p = cfg.quantity("suspension", "r_p", D::none);
    } else if (cfg.has("suspension", "bundle_length") || cfg.has("suspension", "bundle_area")) {
      s.r_p = bundle_aspect_ratio(cfg.quantity_or("suspension", "bundle_length", D::length, 25e-3),
                                  cfg.quantity_or("suspension", "bundle_area", D::area, 0.03e-6));
    }
    s.C = cfg.quantity_or("suspension", "C", D::none, s.C);
    s.xi = cfg.quantity_or("suspension", "xi", D::none, s.xi);
    s.fiber_stress = cfg.flag_or("suspension", "fiber_stress", s.fiber_stress);
  }
  try {
    m.validate();
  } catch (const DomainError& e) {
    throw ConfigError(cfg.origin() + ": " + e.what());
  }
  return m;
}

MaterialSet MaterialSet::load(const std::filesystem::path& path) {
  return from_config(Config::load(path));
}

double viscosity(const ViscosityModel& model, double gammadot, double T) {
  double Tc = T;
  if (T < model.T_min || T > model.T_max) {
    Tc = std::clamp(T, model.T_min, model.T_max);
    g_clamp_count.fetch_add(1, std::memory_order_relaxed);
  }
  const double dT = Tc - model.Tstar;
  const double denom = model.alpha2 + dT;
  if (!(denom > 0)) throw DomainError("viscosity: alpha2 + (T - Tstar) <= 0 at T = " + std::to_string(T));
  const double eta0 = model.D1 * std::exp(-model.alpha1 * dT / denom);
  if (gammadot <= 0.0) return eta0;
  return eta0 / (1.0 + std::pow(gammadot / model.gamma0, 1.0 - model.n));
}

std::uint64_t viscosity_clamp_count() { return g_clamp_count.load(std::memory_order_relaxed); }
void reset_viscosity_clamp_count() { g_clamp_count.store(0, std::memory_order_relaxed); }

double eos_pressure(const EquationOfState& eos, double strain) { return eos.pressure(strain); }

double eos_pressure_from_density(const EquationOfState& eos, double rho, double rho0) {
  if (rho <= rho0) return 0.0;
  return eos.pressure(-std::log(rho / rho0));
}

double friction_stress(const FrictionModel& model, double v) {
  const double a = std::abs(v);
  if (a < 1e-12 || model.lambda == 0.0) return 0.0;
  return -model.lambda * std::pow(a / model.v0, model.m - 1.0) * v;
}

double equivalent_shear_rate(const Eigen::Matrix3d& D) {
  const Eigen::Matrix3d dev = D - (D.trace() / 3.0) * Eigen::Matrix3d::Identity();
  return std::sqrt(2.0 * dev.cwiseProduct(dev).sum());
}

}  // namespace smc::material

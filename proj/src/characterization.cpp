#include "smc/characterization.hpp"

#include "smc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>
#include <numeric>
#include <set>

namespace smc::characterization {

namespace {

// Thomas algorithm; a = sub, b = diag, c = super. Overwrites d with x.
void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& d) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

}  // namespace

double HeatField::at(double depth) const {
  if (depth <= z.front()) return T.front();
  if (depth >= z.back()) return T.back();
  auto it = std::upper_bound(z.begin(), z.end(), depth);
  const std::size_t j = std::size_t(it - z.begin());
  const double w = (depth - z[j - 1]) / (z[j] - z[j - 1]);
  return (1 - w) * T[j - 1] + w * T[j];
}

std::vector<HeatField> solve_heat_1d(const material::ThermalProps& props, double H, double T0,
                                     double TM, double t_end, const std::vector<double>& output_times,
                                     const HeatOptions& options) {
  props.validate();
  if (options.nz < 10) throw std::invalid_argument("solve_heat_1d: invalid grid, nz must be >= 10");
  if (!(t_end > 0)) throw std::invalid_argument("solve_heat_1d: t_end must be positive");
  if (!(H > 0)) throw std::invalid_argument("solve_heat_1d: H must be positive");
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    if (output_times[i] < 0 || output_times[i] > t_end)
      throw std::invalid_argument("solve_heat_1d: output time outside [0, t_end]");
    if (i > 0 && output_times[i] < output_times[i - 1])
      throw std::invalid_argument("solve_heat_1d: output times must be non-decreasing");
  }

  const int n = options.nz;
  const double dz = H / (n - 1);
  std::vector<double> z(n), T(n, T0), w(n, dz);
  for (int i = 0; i < n; ++i) z[i] = i * dz;
  w.front() = w.back() = 0.5 * dz;  // half control volumes at the boundaries

  const double rc = props.rho0 * props.cp;
  const double g = props.kappa / dz;
  auto advance = [&](double dt) {
    std::vector<double> a(n, 0.0), b(n), c(n, 0.0), d(n);
    for (int i = 0; i < n; ++i) {
      const double cap = rc * w[i] / dt;
      b[i] = cap;
      d[i] = cap * T[i];
      if (i > 0) {
        a[i] = -g;
        b[i] += g;
      }
      if (i < n - 1) {
        c[i] = -g;
        b[i] += g;
      }
    }
    b[0] += props.k_gap;
    d[0] += props.k_gap * TM;
    solve_tridiagonal(a, b, c, d);
    T = d;
  };

  std::vector<HeatField> out;
  out.reserve(output_times.size());
  double t = 0.0;
  for (double target : output_times) {
    while (t < target) {
      const double remaining = target - t;
      const int steps = int(std::ceil(remaining / options.max_dt - 1e-9));
      const double dt = remaining / std::max(steps, 1);
      advance(dt);
      t = (steps <= 1) ? target : t + dt;
    }
    out.push_back(HeatField{z, T, target});
  }
  return out;
}

ThermalFit fit_thermal(const std::vector<SensorSeries>& measured, const ThermalFitSetup& setup) {
  std::set<double> depths;
  std::set<double> times;
  for (const auto& s : measured) {
    depths.insert(s.depth);
    if (s.times.size() != s.temps.size())
      throw FitError("fit_thermal: time and temperature columns differ in length");
    times.insert(s.times.begin(), s.times.end());
  }
  if (depths.size() < 2) throw FitError("fit_thermal: at least two sensors at distinct depths required");
  const std::vector<double> out_times(times.begin(), times.end());
  const double t_end = out_times.back();
  if (!(t_end > 0)) throw FitError("fit_thermal: measurement times must extend beyond t = 0");

  auto objective = [&](const std::vector<double>& logp) {
    material::ThermalProps props;
    props.kappa = std::exp(logp[0]);
    props.k_gap = std::exp(logp[1]);
    props.cp = setup.cp;
    props.rho0 = setup.rho;
    const auto fields = solve_heat_1d(props, setup.H, setup.T0, setup.TM, t_end, out_times, setup.heat);
    double err = 0.0;
    for (const auto& s : measured) {
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        const auto idx = std::lower_bound(out_times.begin(), out_times.end(), s.times[i]) - out_times.begin();
        const double e = fields[std::size_t(idx)].at(s.depth) - s.temps[i];
        err += e * e;
      }
    }
    return err;
  };

  optimize::NelderMeadOptions opts;
  opts.x_floor = 1e-3;  // log-parameters; absolute 1e-9 in log is a relative 1e-9
  const auto r = optimize::nelder_mead(
      objective, {std::log(setup.kappa_guess), std::log(setup.k_gap_guess)}, opts);
  ThermalFit fit;
  fit.kappa = std::exp(r.x[0]);
  fit.k_gap = std::exp(r.x[1]);
  fit.residual = r.value;
  fit.iterations = r.iterations;
  fit.converged = r.converged;
  return fit;
}

double average_temperature(const material::ThermalProps& props, double T0, double TM, double h0,
                           double h, double t, int n_terms) {
  if (n_terms < 1) throw std::invalid_argument("average_temperature: n_terms must be positive");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double c = pi2 * props.kappa / (h0 * h * props.rho0 * props.cp);
  double sum = 0.0;
  for (int q = 1; q <= n_terms; ++q) {
    const double num = std::cos(q * std::numbers::pi) - 1.0;  // -2 for odd q, 0 for even q
    if (num == 0.0) continue;
    sum += num / (double(q) * q) * std::exp(-double(q) * q * c * t);
  }
  // Remainder over odd q > n_terms of f(q) = 2/q^2 exp(-b q^2): Euler-Maclaurin
  // with spacing 2, the integral in closed form and three derivative terms.
  const double a = (n_terms % 2 == 0) ? n_terms + 1.0 : n_terms + 2.0;
  const double b = c * t;
  const double e = std::exp(-b * a * a);
  const double x = b * a * a;
  double integral = 2.0 * e / a;
  if (b > 0) integral -= 2.0 * std::sqrt(std::numbers::pi * b) * std::erfc(a * std::sqrt(b));
  const double f0 = 2.0 * e / (a * a);
  const double f1 = -4.0 * e * (x + 1) / std::pow(a, 3);
  const double f3 = -8.0 * e * (2 * x * x * x + 3 * x * x + 6 * x + 6) / std::pow(a, 5);
  const double f5 =
      -16.0 * e * (4 * std::pow(x, 5) + 15 * x * x * x + 45 * x * x + 90 * x + 90) / std::pow(a, 7);
  sum -= 0.5 * integral + 0.5 * f0 - f1 / 6.0 + f3 / 90.0 - f5 / 945.0;
  return TM + (TM - T0) * (4.0 / pi2) * sum;
}

ViscosityFit fit_viscosity(const std::vector<ViscosityPoint>& data, const material::ViscosityModel& guess) {
  std::set<double> temps;
  for (const auto& p : data) {
    if (!(p.eta > 0)) throw FitError("fit_viscosity: measured viscosities must be positive");
    temps.insert(p.T);
  }
  if (temps.size() < 2) throw FitError("fit_viscosity: at least two temperatures required");
  for (double T : temps) {
    const auto count = std::count_if(data.begin(), data.end(), [T](const auto& p) { return p.T == T; });
    if (count < 4) throw FitError("fit_viscosity: at least four shear rates per temperature required");
  }

  material::ViscosityModel base = guess;
  base.T_min = *temps.begin();
  base.T_max = *temps.rbegin();

  // parameters: ln D1, n, ln alpha1, ln(alpha2 - (Tstar - T_min))
  const double shift_floor = base.Tstar - base.T_min;
  auto unpack = [&](const std::vector<double>& x) {
    material::ViscosityModel m = base;
    m.D1 = std::exp(x[0]);
    m.n = x[1];
    m.alpha1 = std::exp(x[2]);
    m.alpha2 = shift_floor + std::exp(x[3]);
    return m;
  };
  auto objective = [&](const std::vector<double>& x) {
    if (!(x[1] > 0 && x[1] < 1)) return 1e300;
    const auto m = unpack(x);
    double err = 0.0;
    for (const auto& p : data) {
      const double r = (material::viscosity(m, p.gammadot, p.T) - p.eta) / p.eta;
      err += r * r;
    }
    return err;
  };

  if (!(guess.alpha2 > shift_floor))
    throw FitError("fit_viscosity: guess must satisfy alpha2 + (T - Tstar) > 0 over the data range");
  std::vector<double> x = {std::log(guess.D1), guess.n, std::log(guess.alpha1),
                           std::log(guess.alpha2 - shift_floor)};
  optimize::NelderMeadOptions opts;
  opts.x_floor = 1e-3;
  optimize::NelderMeadResult r;
  int total = 0;
  // Restarting from the best vertex rebuilds a fresh simplex; a collapsed
  // simplex in the curved WLF valley otherwise stalls early.
  for (int restart = 0; restart < 8; ++restart) {
    r = optimize::nelder_mead(objective, x, opts);
    total += r.iterations;
    const bool moved = std::inner_product(r.x.begin(), r.x.end(), x.begin(), 0.0, std::plus<>(),
                                          [](double a, double b) { return std::abs(a - b); }) > 1e-9;
    x = r.x;
    if (r.converged && !moved) break;
  }
  ViscosityFit fit;
  fit.model = unpack(x);
  fit.model.T_min = guess.T_min;
  fit.model.T_max = guess.T_max;
  fit.residual = r.value;
  fit.iterations = total;
  fit.converged = r.converged;
  return fit;
}

std::vector<FrictionSample> extract_friction(const SensorTrace& up, const SensorTrace& down,
                                             const std::vector<double>& gap,
                                             const std::vector<double>& gap_rate, double threshold) {
  if (!(down.x > up.x)) throw std::invalid_argument("extract_friction: sensor pair must satisfy x_s < x_s+1");
  const std::size_t n = up.times.size();
  if (down.times.size() != n || up.pressures.size() != n || down.pressures.size() != n ||
      gap.size() != n || gap_rate.size() != n)
    throw std::invalid_argument("extract_friction: traces must share a time base");
  for (std::size_t i = 0; i < n; ++i) {
    if (up.times[i] != down.times[i])
      throw std::invalid_argument("extract_friction: traces must share a time base");
  }
  const double dx = down.x - up.x;
  const double x_mid = up.x + 0.5 * dx;
  std::vector<FrictionSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = up.pressures[i] - down.pressures[i];
    if (!(dp > threshold)) continue;
    FrictionSample s;
    s.t = up.times[i];
    s.stress = gap[i] * (down.pressures[i] - up.pressures[i]) / (2.0 * dx);
    s.slip_velocity = -(gap_rate[i] / gap[i]) * x_mid;
    out.push_back(s);
  }
  return out;
}

FrictionFit fit_friction(const std::vector<FrictionSample>& samples, double v0) {
  if (samples.size() < 3) throw FitError("fit_friction: at least three samples required");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double xmin = 1e300, xmax = -1e300;
  for (const auto& s : samples) {
    if (s.slip_velocity == 0.0 || s.stress == 0.0)
      throw FitError("fit_friction: zero slip velocity or stress cannot enter a log-log fit");
    const double x = std::log(std::abs(s.slip_velocity) / v0);
    const double y = std::log(std::abs(s.stress));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  const double n = double(samples.size());
  const double den = n * sxx - sx * sx;
  if (!(xmax - xmin > 1e-12) || !(std::abs(den) > 0))
    throw FitError("fit_friction: degenerate data, all slip speeds are equal");
  FrictionFit fit;
  fit.m = (n * sxy - sx * sy) / den;
  const double intercept = (sy - fit.m * sx) / n;
  fit.lambda = std::exp(intercept) / v0;
  return fit;
}

}  // namespace smc::characterization

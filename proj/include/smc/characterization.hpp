#pragma once

// Forward and inverse material characterization:
//  - transverse heat conduction in a stack on a heated mold, and the fit of
//    conductivity and gap conductance to thermocouple data,
//  - through-thickness average temperature between two closing hot plates,
//  - viscosity model fit to rheometer data,
//  - friction extraction from press-rheometer pressure sensor pairs.

#include "smc/material.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smc::characterization {

struct HeatField {
  std::vector<double> z;  // m, strictly increasing, z[0] = 0 at the mold
  std::vector<double> T;  // C
  double t = 0.0;         // s

  /// Linear interpolation in z.
  double at(double depth) const;
};

struct HeatOptions {
  int nz = 111;
  /// Upper bound for the implicit step; output times are always hit exactly.
  double max_dt = 0.5;
};

/// rho cp dT/dt = kappa d2T/dz2 on [0, H], Robin influx k (TM - T) at z = 0,
/// insulated at z = H, uniform initial T0. Backward Euler in time, vertex
/// centred finite volumes in space. Returns one field per output time (in the
/// order given; times must be non-decreasing and within [0, t_end]).
std::vector<HeatField> solve_heat_1d(const material::ThermalProps& props, double H, double T0,
                                     double TM, double t_end, const std::vector<double>& output_times,
                                     const HeatOptions& options = {});

struct SensorSeries {
  double depth = 0.0;         // m above the heated mold surface
  std::vector<double> times;  // s
  std::vector<double> temps;  // C
};

struct ThermalFit {
  double kappa = 0.0;
  double k_gap = 0.0;
  double residual = 0.0;  // summed squared temperature error, C^2
  int iterations = 0;
  bool converged = false;
};

struct ThermalFitSetup {
  double H = 11e-3;
  double T0 = 24.0;
  double TM = 145.0;
  double cp = 1530.0;
  double rho = 1480.0;
  double kappa_guess = 0.2;
  double k_gap_guess = 300.0;
  HeatOptions heat;
};

/// Least-squares fit of (kappa, k_gap) by simplex descent on log-parameters.
ThermalFit fit_thermal(const std::vector<SensorSeries>& measured, const ThermalFitSetup& setup);

/// Through-thickness average temperature between two closing isothermal
/// plates,
///
///   Tbar = TM + (TM - T0) (4/pi^2) sum_q (cos(q pi) - 1)/q^2 exp(-q^2 pi^2 kappa t / (h0 h rho cp)).
///
/// The remainder after `n_terms` is added from the integral of the tail, so
/// Tbar(0) = T0 holds to well below 0.1 C even for short series.
double average_temperature(const material::ThermalProps& props, double T0, double TM, double h0,
                           double h, double t, int n_terms = 200);

struct ViscosityPoint {
  double T = 0.0;         // C
  double gammadot = 0.0;  // 1/s
  double eta = 0.0;       // Pa s
};

struct ViscosityFit {
  material::ViscosityModel model;
  double residual = 0.0;  // sum of squared relative errors
  int iterations = 0;
  bool converged = false;
};

/// Fits D1, n, alpha1 and alpha2 with gamma0 and Tstar held at the guess
/// values. Tstar is held because the temperature shift is invariant under a
/// change of reference temperature: (D1, Tstar, alpha1, alpha2) and
/// (D1', Tstar', alpha1', alpha2') with Tstar - alpha2 = Tstar' - alpha2',
/// alpha1 alpha2 = alpha1' alpha2' and ln D1 - alpha1 = ln D1' - alpha1'
/// describe the same material.
ViscosityFit fit_viscosity(const std::vector<ViscosityPoint>& data,
                           const material::ViscosityModel& guess);

struct SensorTrace {
  double x = 0.0;                 // m, along the flow direction
  std::vector<double> times;      // s
  std::vector<double> pressures;  // Pa
};

struct FrictionSample {
  double t = 0.0;
  double slip_velocity = 0.0;  // m/s, positive in the flow direction
  double stress = 0.0;         // Pa, negative (opposes the flow)
};

/// Force balance between two sensors. For every sample with
/// p_s - p_{s+1} > threshold:
///   tau = h (p_{s+1} - p_s) / (2 (x_{s+1} - x_s)),
///   v_s = -(hdot/h) (x_s + (x_{s+1} - x_s)/2).
std::vector<FrictionSample> extract_friction(const SensorTrace& upstream, const SensorTrace& downstream,
                                             const std::vector<double>& gap,
                                             const std::vector<double>& gap_rate,
                                             double threshold = 5e5);

struct FrictionFit {
  double lambda = 0.0;
  double m = 0.0;
};

/// Log-log regression of |tau| on |v/v0|: slope m, intercept ln(lambda v0).
FrictionFit fit_friction(const std::vector<FrictionSample>& samples, double v0);

/// Raised when a fit is not identifiable from the given data.
class FitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace smc::characterization

#pragma once

// Material models shared by all solvers: shear- and temperature-dependent
// paste viscosity, tabulated compaction equation of state, hydrodynamic mold
// friction, transverse thermal properties and suspension parameters.
//
// All quantities are SI (Pa, Pa s, m, s) except temperatures, which are in
// degrees Celsius throughout the library.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

namespace smc {

class Config;

/// Raised when a model is evaluated outside its mathematical domain or
/// constructed with parameters that violate its invariants.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace material {

/// Cross-WLF-like paste viscosity
///
///   eta  = eta0 / (1 + (gammadot / gamma0)^(1 - n))
///   eta0 = D1 * exp(-alpha1 (T - Tstar) / (alpha2 + T - Tstar))
///
/// The fit data cover [T_min, T_max]; temperatures outside that range are
/// evaluated at the nearest bound and counted (see viscosity_clamp_count).
struct ViscosityModel {
  double D1 = 72e3;       // Pa s
  double gamma0 = 0.1;    // 1/s
  double n = 0.385;       // -
  double Tstar = 40.73;   // C
  double alpha1 = 7.94;   // -
  double alpha2 = 105.96; // C
  double T_min = 20.0;    // C
  double T_max = 80.0;    // C

  /// Throws DomainError if an invariant is violated.
  void validate() const;
};

/// Tabulated compaction behaviour p(E), E = ln(h/h0) <= 0.
///
/// Knots are stored in SI (Pa). Between knots the pressure is interpolated
/// linearly; beyond the last knot the final segment slope is continued.
/// Tension (E > 0) yields zero pressure.
class EquationOfState {
 public:
  struct Knot {
    double strain;    // Hencky strain, <= 0
    double pressure;  // Pa
  };

  EquationOfState() : EquationOfState(upph_gf()) {}
  explicit EquationOfState(std::vector<Knot> knots);

  /// The averaged rising flank of the UPPH-GF compaction trials. The pressure
  /// column is read in bar.
  static EquationOfState upph_gf();
  /// Two columns (strain, pressure in bar) with a header row.
  static EquationOfState load_csv(const std::filesystem::path& path);
  /// Copy with every pressure multiplied by `factor`. Large factors give a
  /// near-incompressible material.
  EquationOfState scaled(double factor) const;

  double pressure(double strain) const;
  /// dp/dE (<= 0) for E < 0, using the segment that contains E.
  double slope(double strain) const;
  const std::vector<Knot>& knots() const { return knots_; }
  /// Slope used below the final knot, Pa per unit strain (magnitude).
  double extrapolation_slope() const { return extrapolation_slope_; }

 private:
  std::vector<Knot> knots_;
  double extrapolation_slope_ = 0.0;
};

/// Hydrodynamic power-law friction  tau = -lambda (|v|/v0)^(m-1) v.
struct FrictionModel {
  double lambda = 3.0e6;  // N s / m^3
  double m = 0.6;         // -
  double v0 = 1e-3;       // m/s

  void validate() const;
};

struct ThermalProps {
  double kappa = 0.163;  // W/(m C)
  double k_gap = 403.0;  // W/(m^2 C)
  double cp = 1530.0;    // J/(kg C)
  double rho0 = 1480.0;  // kg/m^3

  void validate() const;
};

/// Equivalent-circle aspect ratio of a bundle: length / diameter of the
/// circle with the bundle's cross-section area.
double bundle_aspect_ratio(double length, double area);

struct SuspensionParams {
  double f = 0.23;                               // fiber volume fraction
  double r_p = bundle_aspect_ratio(25e-3, 0.03e-6);  // ~128
  double C = 0.1585;
  double xi = 1.0;
  /// When false the fiber contribution eta2 is forced to zero (Newtonian,
  /// isotropic matrix).
  bool fiber_stress = true;

  void validate() const;
};

struct MaterialSet {
  ViscosityModel viscosity;
  EquationOfState eos;
  FrictionModel friction;
  ThermalProps thermal;
  SuspensionParams suspension;

  /// UPPH-GF SMC in B-staged state.
  static MaterialSet upph_gf() { return MaterialSet{}; }
  /// Reads [viscosity], [eos], [friction], [thermal] and [suspension]
  /// sections. Missing sections keep the UPPH-GF defaults.
  static MaterialSet from_config(const Config& cfg);
  static MaterialSet load(const std::filesystem::path& path);
  void validate() const;
};

double viscosity(const ViscosityModel& model, double gammadot, double T);
/// Number of viscosity evaluations whose temperature was clamped to the
/// declared valid range (process-wide, thread-safe).
std::uint64_t viscosity_clamp_count();
void reset_viscosity_clamp_count();

double eos_pressure(const EquationOfState& eos, double strain);
/// p(rho) with E = -ln(rho/rho0); zero for rho <= rho0.
double eos_pressure_from_density(const EquationOfState& eos, double rho, double rho0);

/// Shear stress on the charge surface (Pa), opposing the slip velocity.
double friction_stress(const FrictionModel& model, double slip_velocity);

/// sqrt(2 D':D') of a symmetric strain-rate tensor.
double equivalent_shear_rate(const Eigen::Matrix3d& D);

}  // namespace material
}  // namespace smc

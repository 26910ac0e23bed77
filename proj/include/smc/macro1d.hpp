#pragma once

// One-dimensional macroscale model of the press rheometer.
//
// The charge occupies x in [0, X(t)] of a tool of length L_max and width W,
// aligned with the closed end at x = 0. Fields are thickness averages on the
// stretched coordinate x* = x / X(t) in [0, 1]:
//
//   rho'/rho = -(1/X) dv/dx* - hdot/h
//   rho v'   = (1/X) d/dx* (-p(rho) + Vxxxx Dxx + Vxxzz Dzz) + 2 tau(v) / h
//   A'       = planar Jeffery rates with Dxx = (1/X) dv/dx*
//
// where ' is the material derivative, tau the mold friction on both faces and
// Dzz = hdot/h. v = 0 at x* = 0; at x* = 1 the front is traction free until
// the tool is filled, after which v = 0.
//
// Discretization: vertex-centred finite volumes on a uniform x* grid. Mass is
// carried as q = h X rho per node so that the discrete total mass telescopes
// exactly. The stiff mass/momentum system is advanced with backward Euler and
// Newton's method (front position X included as an unknown), with local error
// control by step doubling. Orientation is advanced afterwards with RK4 on the
// converged velocity field, with first-order upwinding of the mesh-relative
// transport term.

#include "smc/config.hpp"
#include "smc/material.hpp"
#include "smc/orientation.hpp"

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smc::macro1d {

struct ProfilePoint {
  double gap = 0.0;       // m
  double velocity = 0.0;  // m/s, negative when closing
};

/// Press-profile follower with latching switch-over to PI force control.
class PressController {
 public:
  PressController() : PressController({{0.010, -1e-3}, {0.0, -1e-3}}, 4.4e6) {}
  PressController(std::vector<ProfilePoint> profile, double F_max, double Pp = 0.5, double Pi = 0.5);

  /// Velocity for the next interval of length dt given the current force F
  /// and gap. Before the first F >= F_max the profile is interpolated at the
  /// gap; afterwards
  ///   hdot_{l+1} = hdot_l + Pp eps_l + Pi sum_i (eps_i / 2) dt,
  ///   eps_i = (F_max - F_i) / F_max * hdot_ref.
  double velocity(double F, double dt, double gap);

  /// Linear interpolation of the profile, clamped beyond its end points.
  double profile_velocity(double gap) const;

  bool switched() const { return switched_; }
  double last_velocity() const { return last_; }
  double integral() const { return integral_; }
  double hdot_ref() const { return profile_.back().velocity; }
  double F_max() const { return F_max_; }

 private:
  std::vector<ProfilePoint> profile_;
  double F_max_;
  double Pp_;
  double Pi_;
  double integral_ = 0.0;
  double last_ = 0.0;
  bool has_last_ = false;
  bool switched_ = false;
};

struct Scenario {
  double L_max = 0.8;   // m
  double W = 0.45;      // m
  double X0 = 0.6;      // m
  double h0 = 0.018;    // m
  double rho0 = 1480.0; // kg/m^3
  double T0 = 25.0;     // C
  double TM = 145.0;    // C
  std::vector<double> sensors = {0.032, 0.146, 0.248, 0.450, 0.552, 0.604, 0.709};
  material::MaterialSet materials;
  orientation::ClosureKind closure = orientation::ClosureKind::ibof;
  int grid_n = 40;

  std::vector<ProfilePoint> profile = {{0.010, -1e-3}, {0.0, -1e-3}};
  double F_max = 4.4e6;
  double Pp = 0.5;
  double Pi = 0.5;

  double control_dt = 0.01;  // press controller period, s
  double output_dt = 0.05;   // sampling period of SimulationOutput, s
  double hold_time = 2.0;    // simulated time after fill, s
  double t_max = 60.0;       // s
  double rtol = 1e-6;
  double atol_v = 1e-9;      // m/s
  /// When set, the average temperature is not computed and this value is used.
  bool fixed_temperature = false;
  double T_fixed = 25.0;
  int temperature_terms = 200;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  PressController make_controller() const { return PressController(profile, F_max, Pp, Pi); }

  /// [scenario], [press] and [solver] sections; materials come from the file
  /// named by [scenario] materials (relative to the scenario file) and may be
  /// overridden by material sections in the scenario file itself.
  static Scenario from_config(const Config& cfg);
  static Scenario load(const std::filesystem::path& path);
};

struct MacroState {
  double t = 0.0;
  double X = 0.0;      // front position, m
  double h = 0.0;      // gap, m
  double hdot = 0.0;   // m/s
  double Tbar = 0.0;   // average temperature used for the last step, C
  bool filled = false;
  double substep_hint = 0.0;  // proposed next sub-step size, s (0: none yet)
  /// Time derivatives (q_i = h X rho_i and v_i interleaved, then X) over the
  /// last accepted sub-step of length solver_rate_dt; predictor history.
  std::vector<double> solver_rate;
  double solver_rate_dt = 0.0;
  std::vector<double> rho;  // kg/m^3
  std::vector<double> v;    // m/s
  std::vector<orientation::PlanarState> A;

  int n() const { return int(rho.size()); }
  double xstar(int i) const { return double(i) / (n() - 1); }
};

MacroState initial_state(const Scenario& scenario);

struct FieldRates {
  // partial time derivatives at fixed x*
  std::vector<double> rho;
  std::vector<double> v;
  std::vector<orientation::PlanarRates> A;
};

/// Semi-discrete right-hand side at fixed x* for the current fields, with the
/// front speed taken as v(1) before filling and 0 after. Boundary nodes whose
/// velocity is prescribed get zero velocity rate.
FieldRates assemble_rates(const MacroState& state, const Scenario& scenario, double Tbar);

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepStats {
  int substeps = 0;
  int rejected = 0;
  int newton_iterations = 0;
};

/// Advances the state by dt: queries the controller with the current force,
/// holds the returned press velocity over the interval and integrates the
/// fields with adaptive sub-steps. Latches `filled` when the front reaches
/// L_max (X is clamped to L_max).
MacroState step(const MacroState& state, const Scenario& scenario, PressController& controller,
                double dt, StepStats* stats = nullptr);

/// sigma_zz at x* (linear interpolation between nodes), Pa; compressive < 0.
double sigma_zz(const MacroState& state, const Scenario& scenario, double xstar);
/// sigma_zz at every node.
std::vector<double> sigma_zz_nodes(const MacroState& state, const Scenario& scenario);
/// W X int_0^1 max(-sigma_zz, 0) dx*, trapezoid rule on the grid, N.
double total_force(const MacroState& state, const Scenario& scenario);
/// Gauge pressure -sigma_zz (>= 0) per sensor, zero for sensors beyond the
/// front, Pa.
std::vector<double> sensor_pressures(const MacroState& state, const Scenario& scenario);
/// W h X int_0^1 rho dx*, trapezoid rule, kg.
double total_mass(const MacroState& state, const Scenario& scenario);
/// Orientation at x* by linear interpolation.
orientation::PlanarState orientation_at(const MacroState& state, double xstar);

struct OutputSample {
  double t = 0.0;
  double h = 0.0;
  double hdot = 0.0;
  double F = 0.0;
  double X = 0.0;
  double Axx_mid = 0.0;
  double Ayy_mid = 0.0;
  double mass = 0.0;
  double Tbar = 0.0;
  bool filled = false;
  bool switched = false;
  std::vector<double> sensors;  // Pa
};

struct SimulationOutput {
  std::vector<double> sensor_x;
  std::vector<OutputSample> samples;
  double fill_time = -1.0;    // s, negative if the tool was not filled
  double switch_time = -1.0;  // s, negative if force control never engaged
  double peak_force = 0.0;    // N
  bool completed = false;
  std::string error;          // set when the run stopped on a step failure
};

/// Callback invoked after every controller step; used to couple other
/// solvers (e.g. bundle advection) to the macroscale kinematics.
using StepObserver = std::function<void(const MacroState& before, const MacroState& after)>;

/// Runs until fill plus hold_time, or t_max. Step failures are reported via
/// SimulationOutput::error with the samples recorded so far.
SimulationOutput run_scenario(const Scenario& scenario, const StepObserver& observer = {});

}  // namespace smc::macro1d

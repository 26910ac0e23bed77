#include "smc/macro1d.hpp"

#include "smc/characterization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smc::macro1d {

namespace {

using orientation::PlanarRates;
using orientation::PlanarState;

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// Shear rate measure sqrt(2 D':D') of D = diag(Dxx, 0, Dzz).
double shear_rate(double Dxx, double Dzz) {
  const double m = (Dxx + Dzz) / 3.0;
  const double a = Dxx - m, b = -m, c = Dzz - m;
  return std::sqrt(2.0 * (a * a + b * b + c * c));
}

// Quantities frozen over one sub-step.
struct Frozen {
  const Scenario* sc = nullptr;
  int n = 0;
  double dx = 0.0;    // x* spacing
  double Tbar = 0.0;
  double hdot = 0.0;
  // eta2/eta (Axxxx - Axx/3) per face, from the orientation at the start of
  // the sub-step
  std::vector<double> aniso;
};

Frozen freeze(const Scenario& sc, const std::vector<PlanarState>& A, double Tbar, double hdot) {
  Frozen fz;
  fz.sc = &sc;
  fz.n = int(A.size());
  fz.dx = 1.0 / (fz.n - 1);
  fz.Tbar = Tbar;
  fz.hdot = hdot;
  const double ratio = orientation::eta2_ratio(sc.materials.suspension);
  fz.aniso.assign(fz.n - 1, 0.0);
  if (ratio != 0.0) {
    for (int f = 0; f < fz.n - 1; ++f) {
      PlanarState a{0.5 * (A[f].Axx + A[f + 1].Axx), 0.5 * (A[f].Ayy + A[f + 1].Ayy),
                    0.5 * (A[f].Axy + A[f + 1].Axy)};
      const double Axxxx = orientation::closure_component(a.matrix(), sc.closure, 0, 0, 0, 0);
      fz.aniso[f] = ratio * (Axxxx - a.Axx / 3.0);
    }
  }
  return fz;
}

double pressure(const Scenario& sc, double rho) {
  return material::eos_pressure_from_density(sc.materials.eos, rho, sc.rho0);
}

// sigma_xx on the faces and the mass flux through them.
struct FaceTerms {
  std::vector<double> sigma;  // Pa
  std::vector<double> flux;   // rho * (v - x* Xdot), kg/m^2/s
};

void face_terms(const Frozen& fz, const double* rho, const double* v, double X, double Xdot,
                double h, FaceTerms& out) {
  const Scenario& sc = *fz.sc;
  const int n = fz.n;
  out.sigma.resize(n - 1);
  out.flux.resize(n - 1);
  const double Dzz = fz.hdot / h;
  double p_left = pressure(sc, rho[0]);
  for (int f = 0; f < n - 1; ++f) {
    const double p_right = pressure(sc, rho[f + 1]);
    const double Dxx = (v[f + 1] - v[f]) / (X * fz.dx);
    const double eta = material::viscosity(sc.materials.viscosity, shear_rate(Dxx, Dzz), fz.Tbar);
    const double Vxxxx = eta * (4.0 / 3.0 + fz.aniso[f]);
    const double Vxxzz = -2.0 / 3.0 * eta;
    out.sigma[f] = -0.5 * (p_left + p_right) + Vxxxx * Dxx + Vxxzz * Dzz;
    const double xf = (f + 0.5) * fz.dx;
    out.flux[f] = 0.5 * (rho[f] + rho[f + 1]) * (0.5 * (v[f] + v[f + 1]) - xf * Xdot);
    p_left = p_right;
  }
}

// Frictional body force of both mold faces, N/m^3.
double friction_force(const Scenario& sc, double v, double h) {
  return 2.0 * material::friction_stress(sc.materials.friction, v) / h;
}

double node_width(int i, int n, double dx) { return (i == 0 || i == n - 1) ? 0.5 * dx : dx; }

// Dxx at nodes: central differences, one-sided at the ends.
std::vector<double> node_strain_rate(const std::vector<double>& v, double X) {
  const int n = int(v.size());
  const double dx = 1.0 / (n - 1);
  std::vector<double> D(n);
  for (int i = 0; i < n; ++i) {
    if (i == 0) D[i] = (v[1] - v[0]) / (X * dx);
    else if (i == n - 1) D[i] = (v[n - 1] - v[n - 2]) / (X * dx);
    else D[i] = (v[i + 1] - v[i - 1]) / (2.0 * X * dx);
  }
  return D;
}

// Orientation rates at fixed x*: Jeffery source minus upwinded transport.
std::vector<PlanarRates> orientation_rates(const std::vector<PlanarState>& A, const std::vector<double>& Dxx,
                                           const std::vector<double>& grid_speed,
                                           orientation::ClosureKind kind) {
  const int n = int(A.size());
  const double dx = 1.0 / (n - 1);
  std::vector<PlanarRates> r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = orientation::planar_rates(A[i], Dxx[i], kind);
    const double u = grid_speed[i];
    int j = -1;
    if (u > 0 && i > 0) j = i - 1;
    if (u < 0 && i < n - 1) j = i + 1;
    if (j < 0) continue;
    const double s = u / dx * (j < i ? 1.0 : -1.0);
    r[i].dAxx -= s * (A[i].Axx - A[j].Axx);
    r[i].dAyy -= s * (A[i].Ayy - A[j].Ayy);
    r[i].dAxy -= s * (A[i].Axy - A[j].Axy);
  }
  return r;
}

// RK4 for the orientation fields with frozen kinematics over tau.
void advance_orientation(std::vector<PlanarState>& A, const std::vector<double>& v, double X, double Xdot,
                         double tau, orientation::ClosureKind kind) {
  const int n = int(A.size());
  const double dx = 1.0 / (n - 1);
  const auto Dxx = node_strain_rate(v, X);
  std::vector<double> speed(n);
  double limit = 0.0;
  for (int i = 0; i < n; ++i) {
    speed[i] = (v[i] - i * dx * Xdot) / X;
    limit = std::max({limit, std::abs(speed[i]) * tau / (0.5 * dx), std::abs(Dxx[i]) * tau / 0.05});
  }
  const int m = std::max(1, int(std::ceil(limit)));
  const double h = tau / m;
  auto add = [n](const std::vector<PlanarState>& a, const std::vector<PlanarRates>& r, double s) {
    std::vector<PlanarState> out(a);
    for (int i = 0; i < n; ++i) {
      out[i].Axx += s * r[i].dAxx;
      out[i].Ayy += s * r[i].dAyy;
      out[i].Axy += s * r[i].dAxy;
    }
    return out;
  };
  for (int k = 0; k < m; ++k) {
    const auto k1 = orientation_rates(A, Dxx, speed, kind);
    const auto k2 = orientation_rates(add(A, k1, 0.5 * h), Dxx, speed, kind);
    const auto k3 = orientation_rates(add(A, k2, 0.5 * h), Dxx, speed, kind);
    const auto k4 = orientation_rates(add(A, k3, h), Dxx, speed, kind);
    for (int i = 0; i < n; ++i) {
      A[i].Axx += h / 6.0 * (k1[i].dAxx + 2 * k2[i].dAxx + 2 * k3[i].dAxx + k4[i].dAxx);
      A[i].Ayy += h / 6.0 * (k1[i].dAyy + 2 * k2[i].dAyy + 2 * k3[i].dAyy + k4[i].dAyy);
      A[i].Axy += h / 6.0 * (k1[i].dAxy + 2 * k2[i].dAxy + 2 * k3[i].dAxy + k4[i].dAxy);
      A[i].renormalize();
    }
  }
}

// Solver state for one backward-Euler sub-step.
struct Fields {
  std::vector<double> q;  // h X rho
  std::vector<double> v;
  std::vector<PlanarState> A;
  double X = 0.0;
  double h = 0.0;
  bool filled = false;
};

class BackwardEuler {
 public:
  BackwardEuler(const Scenario& sc, double Tbar, double hdot) : sc_(sc), Tbar_(Tbar), hdot_(hdot) {}

  // Returns false if Newton fails to converge. `guess` (optional) seeds the
  // iteration; the Jacobian is reused while the iteration contracts.
  bool solve(const Fields& in, double tau, Fields& out, int& iterations, const Fields* guess = nullptr) {
    n_ = int(in.q.size());
    fz_ = freeze(sc_, in.A, Tbar_, hdot_);
    in_ = &in;
    tau_ = tau;
    h_new_ = in.h + hdot_ * tau;
    if (!(h_new_ > 0)) return false;
    filled_ = in.filled;

    const int m = 2 * n_ + 1;
    Eigen::VectorXd y(m), R(m), Rp(m), dy(m);
    const Fields& start = guess ? *guess : in;
    for (int i = 0; i < n_; ++i) {
      y[2 * i] = start.q[i];
      y[2 * i + 1] = start.v[i];
    }
    if (filled_) y[2 * n_] = sc_.L_max;
    else if (guess) y[2 * n_] = guess->X;
    else y[2 * n_] = in.X + tau * in.v[n_ - 1];
    if (!filled_) y[2 * n_] = std::min(y[2 * n_], sc_.L_max * 1.05);

    double vscale = std::abs(hdot_) * in.X / in.h;
    for (double vi : in.v) vscale = std::max(vscale, std::abs(vi));
    vscale = std::max(vscale, 1e-6);

    Eigen::MatrixXd J(m, m);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    bool fresh = false;
    double last_norm = INFINITY;
    for (int it = 0; it < 40; ++it) {
      residual(y, R);
      if (it == 0) {
        jacobian(y, R, vscale, J, Rp);
        lu.compute(J);
        fresh = true;
      }
      dy = -lu.solve(R);
      if (!dy.allFinite()) return false;
      const double norm = step_norm(y, dy, vscale);
      if (!fresh && norm > 0.5 * last_norm) {
        // the chord iteration stalls: refresh the Jacobian
        jacobian(y, R, vscale, J, Rp);
        lu.compute(J);
        fresh = true;
        dy = -lu.solve(R);
        if (!dy.allFinite()) return false;
      } else {
        fresh = false;
      }
      last_norm = step_norm(y, dy, vscale);
      // keep densities and the front position positive
      double lambda = 1.0;
      for (int i = 0; i < n_; ++i) {
        if (y[2 * i] + lambda * dy[2 * i] <= 0.2 * y[2 * i])
          lambda = std::min(lambda, 0.8 * y[2 * i] / std::abs(dy[2 * i]));
      }
      if (y[2 * n_] + lambda * dy[2 * n_] <= 0.5 * y[2 * n_])
        lambda = std::min(lambda, 0.5 * y[2 * n_] / std::abs(dy[2 * n_]));
      y += lambda * dy;
      ++iterations;

      if (lambda == 1.0 && last_norm <= 1.0) {
        out.q.resize(n_);
        out.v.resize(n_);
        for (int i = 0; i < n_; ++i) {
          out.q[i] = y[2 * i];
          out.v[i] = y[2 * i + 1];
        }
        out.v[0] = 0.0;
        if (filled_) out.v[n_ - 1] = 0.0;
        out.X = y[2 * n_];
        out.h = h_new_;
        out.filled = filled_;
        out.A = in.A;
        return true;
      }
    }
    return false;
  }

 private:
  // Newton update measured against the convergence tolerances (<= 1: converged).
  double step_norm(const Eigen::VectorXd& y, const Eigen::VectorXd& dy, double vscale) const {
    double r = 0.0;
    const double vtol = std::max(1e-6 * vscale, sc_.atol_v);
    for (int i = 0; i < n_; ++i) {
      r = std::max(r, std::abs(dy[2 * i]) / (1e-2 * sc_.rtol * y[2 * i]));
      r = std::max(r, std::abs(dy[2 * i + 1]) / vtol);
    }
    return std::max(r, std::abs(dy[2 * n_]) / (1e-2 * sc_.rtol * y[2 * n_]));
  }

  void residual(const Eigen::VectorXd& y, Eigen::VectorXd& R) {
    const int n = n_;
    const double X = y[2 * n];
    const double Xdot = (X - in_->X) / tau_;
    const double h = h_new_;
    rho_.resize(n);
    v_.resize(n);
    for (int i = 0; i < n; ++i) {
      rho_[i] = y[2 * i] / (h * X);
      v_[i] = y[2 * i + 1];
    }
    face_terms(fz_, rho_.data(), v_.data(), X, Xdot, h, faces_);
    const double dx = fz_.dx;
    for (int i = 0; i < n; ++i) {
      const double fl = i > 0 ? faces_.flux[i - 1] : 0.0;
      const double fr = i < n - 1 ? faces_.flux[i] : 0.0;
      const double w = node_width(i, n, dx);
      R[2 * i] = y[2 * i] - in_->q[i] + tau_ * h * (fr - fl) / w;

      const bool fixed = i == 0 || (i == n - 1 && filled_);
      if (fixed) {
        R[2 * i + 1] = v_[i];
        continue;
      }
      const double sl = faces_.sigma[i - 1];
      const double sr = i < n - 1 ? faces_.sigma[i] : 0.0;  // traction-free front
      const double dvdx = i < n - 1 ? (v_[i + 1] - v_[i - 1]) / (2.0 * dx) : (v_[i] - v_[i - 1]) / dx;
      const double u = v_[i] - i * dx * Xdot;
      const double inertia = rho_[i] * ((v_[i] - in_->v[i]) / tau_ + u * dvdx / X);
      R[2 * i + 1] = inertia - (sr - sl) / (X * w) - friction_force(sc_, v_[i], h);
    }
    R[2 * n] = filled_ ? X - sc_.L_max : X - in_->X - tau_ * v_[n - 1];
  }

  // Forward-difference Jacobian. Rows of node i depend on nodes i-1..i+1 and
  // on X, so node unknowns are perturbed in three interleaved colours.
  void jacobian(Eigen::VectorXd y, const Eigen::VectorXd& R0, double vscale, Eigen::MatrixXd& J,
                Eigen::VectorXd& Rp) {
    const int n = n_;
    J.setZero();
    std::vector<double> delta(2 * n);
    for (int comp = 0; comp < 2; ++comp) {
      for (int color = 0; color < 3; ++color) {
        Eigen::VectorXd yp = y;
        bool any = false;
        for (int j = color; j < n; j += 3) {
          const int c = 2 * j + comp;
          delta[c] = comp == 0 ? 1e-7 * y[c] : 1e-7 * vscale;
          yp[c] += delta[c];
          any = true;
        }
        if (!any) continue;
        residual(yp, Rp);
        for (int j = color; j < n; j += 3) {
          const int c = 2 * j + comp;
          for (int i = std::max(0, j - 1); i <= std::min(n - 1, j + 1); ++i) {
            J(2 * i, c) = (Rp[2 * i] - R0[2 * i]) / delta[c];
            J(2 * i + 1, c) = (Rp[2 * i + 1] - R0[2 * i + 1]) / delta[c];
          }
          if (j == n - 1) J(2 * n, c) = (Rp[2 * n] - R0[2 * n]) / delta[c];
        }
      }
    }
    Eigen::VectorXd yp = y;
    const double dX = 1e-9 * y[2 * n];
    yp[2 * n] += dX;
    residual(yp, Rp);
    J.col(2 * n) = (Rp - R0) / dX;
  }

  const Scenario& sc_;
  double Tbar_;
  double hdot_;
  int n_ = 0;
  Frozen fz_;
  const Fields* in_ = nullptr;
  double tau_ = 0.0;
  double h_new_ = 0.0;
  bool filled_ = false;
  std::vector<double> rho_, v_;
  FaceTerms faces_;
};

Fields to_fields(const MacroState& s) {
  Fields f;
  f.q.resize(s.rho.size());
  for (std::size_t i = 0; i < s.rho.size(); ++i) f.q[i] = s.h * s.X * s.rho[i];
  f.v = s.v;
  f.A = s.A;
  f.X = s.X;
  f.h = s.h;
  f.filled = s.filled;
  return f;
}

double temperature(const Scenario& sc, double h, double t) {
  if (sc.fixed_temperature) return sc.T_fixed;
  return characterization::average_temperature(sc.materials.thermal, sc.T0, sc.TM, sc.h0, h, t,
                                                sc.temperature_terms);
}

}  // namespace

// ---------------------------------------------------------------------------
// Press controller

PressController::PressController(std::vector<ProfilePoint> profile, double F_max, double Pp, double Pi)
    : profile_(std::move(profile)), F_max_(F_max), Pp_(Pp), Pi_(Pi) {
  if (profile_.empty()) throw std::invalid_argument("press profile must not be empty");
  for (std::size_t i = 1; i < profile_.size(); ++i)
    if (!(profile_[i].gap < profile_[i - 1].gap))
      throw std::invalid_argument("press profile gaps must be strictly decreasing");
  if (!(F_max > 0)) throw std::invalid_argument("F_max must be positive");
}

double PressController::profile_velocity(double gap) const {
  if (gap >= profile_.front().gap) return profile_.front().velocity;
  if (gap <= profile_.back().gap) return profile_.back().velocity;
  for (std::size_t i = 1; i < profile_.size(); ++i) {
    if (gap >= profile_[i].gap) {
      const auto& a = profile_[i - 1];
      const auto& b = profile_[i];
      const double w = (a.gap - gap) / (a.gap - b.gap);
      return a.velocity + w * (b.velocity - a.velocity);
    }
  }
  return profile_.back().velocity;
}

double PressController::velocity(double F, double dt, double gap) {
  if (!(dt > 0)) throw std::invalid_argument("controller: dt must be positive");
  if (!switched_ && F < F_max_) {
    last_ = profile_velocity(gap);
    has_last_ = true;
    return last_;
  }
  if (!switched_) {
    switched_ = true;
    if (!has_last_) last_ = profile_velocity(gap);
  }
  const double eps = (F_max_ - F) / F_max_ * hdot_ref();
  integral_ += 0.5 * eps * dt;
  last_ = last_ + Pp_ * eps + Pi_ * integral_;
  has_last_ = true;
  return last_;
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
  auto bad = [](const std::string& key, const std::string& what) {
    throw ConfigError("[scenario] " + key + ": " + what);
  };
  if (!(L_max > 0)) bad("L_max_mm", "tool length must be positive");
  if (!(W > 0)) bad("W_mm", "tool width must be positive");
  if (!(X0 > 0)) bad("X0_mm", "initial charge length must be positive (got " + fmt(X0 * 1e3) + " mm)");
  if (X0 > L_max)
    bad("X0_mm", "initial charge length " + fmt(X0 * 1e3) + " mm exceeds tool length L_max = " +
                     fmt(L_max * 1e3) + " mm");
  if (!(h0 > 0)) bad("h0_mm", "initial gap must be positive");
  if (!(rho0 > 0)) bad("rho0_kg_per_m3", "density must be positive");
  for (double s : sensors)
    if (s < 0 || s > L_max) bad("sensors_mm", "sensor at " + fmt(s * 1e3) + " mm lies outside the tool");
  if (grid_n < 3) bad("grid_n", "need at least 3 grid points");
  if (profile.empty()) throw ConfigError("[press] profile_gap_mm: profile must not be empty");
  for (std::size_t i = 1; i < profile.size(); ++i)
    if (!(profile[i].gap < profile[i - 1].gap))
      throw ConfigError("[press] profile_gap_mm: gaps must be strictly decreasing");
  if (!(F_max > 0)) throw ConfigError("[press] F_max_kN: must be positive");
  if (!(control_dt > 0)) throw ConfigError("[solver] control_dt_s: must be positive");
  if (!(output_dt > 0)) throw ConfigError("[solver] output_dt_s: must be positive");
  if (!(t_max > 0)) throw ConfigError("[solver] t_max_s: must be positive");
  if (!(hold_time >= 0)) throw ConfigError("[solver] hold_s: must be non-negative");
  if (!(rtol > 0)) throw ConfigError("[solver] rtol: must be positive");
  try {
    materials.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[materials] ") + e.what());
  }
}

Scenario Scenario::from_config(const Config& cfg) {
  using D = Dimension;
  Scenario s;
  if (!cfg.has_section("scenario")) throw ConfigError(cfg.origin() + ": missing [scenario] section");
  if (cfg.has("scenario", "materials")) {
    std::filesystem::path p = cfg.text("scenario", "materials");
    if (p.is_relative()) p = cfg.base_dir() / p;
    const Config mcfg = Config::load(p);
    s.materials = material::MaterialSet::from_config(mcfg);
  }
  // material sections in the scenario file override the referenced file
  if (cfg.has_section("viscosity") || cfg.has_section("eos") || cfg.has_section("friction") ||
      cfg.has_section("thermal") || cfg.has_section("suspension")) {
    material::MaterialSet over = material::MaterialSet::from_config(cfg);
    if (cfg.has_section("viscosity")) s.materials.viscosity = over.viscosity;
    if (cfg.has_section("eos")) s.materials.eos = over.eos;
    if (cfg.has_section("friction")) s.materials.friction = over.friction;
    if (cfg.has_section("thermal")) s.materials.thermal = over.thermal;
    if (cfg.has_section("suspension")) s.materials.suspension = over.suspension;
  }
  s.L_max = cfg.quantity_or("scenario", "L_max", D::length, s.L_max);
  s.W = cfg.quantity_or("scenario", "W", D::length, s.W);
  s.X0 = cfg.quantity("scenario", "X0", D::length);
  s.h0 = cfg.quantity("scenario", "h0", D::length);
  s.rho0 = cfg.quantity_or("scenario", "rho0", D::density, s.materials.thermal.rho0);
  s.T0 = cfg.quantity_or("scenario", "T0", D::temperature, s.T0);
  s.TM = cfg.quantity_or("scenario", "TM", D::temperature, s.TM);
  if (cfg.has("scenario", "sensors")) s.sensors = cfg.quantity_list("scenario", "sensors", D::length);
  s.grid_n = int(cfg.integer_or("scenario", "grid_n", s.grid_n));
  try {
    s.closure = orientation::closure_from_string(cfg.text_or("scenario", "closure", "ibof"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.origin() + ": [scenario] closure: " + e.what());
  }

  if (cfg.has("press", "profile_gap") || cfg.has("press", "profile_velocity")) {
    const auto gaps = cfg.quantity_list("press", "profile_gap", D::length);
    const auto vels = cfg.quantity_list("press", "profile_velocity", D::velocity);
    if (gaps.size() != vels.size())
      throw ConfigError(cfg.origin() + ": [press] profile_velocity: length differs from profile_gap");
    s.profile.clear();
    for (std::size_t i = 0; i < gaps.size(); ++i) s.profile.push_back({gaps[i], vels[i]});
  }
  s.F_max = cfg.quantity_or("press", "F_max", D::force, s.F_max);
  s.Pp = cfg.quantity_or("press", "Pp", D::none, s.Pp);
  s.Pi = cfg.quantity_or("press", "Pi", D::none, s.Pi);

  s.control_dt = cfg.quantity_or("solver", "control_dt", D::time, s.control_dt);
  s.output_dt = cfg.quantity_or("solver", "output_dt", D::time, s.output_dt);
  s.hold_time = cfg.quantity_or("solver", "hold", D::time, s.hold_time);
  s.t_max = cfg.quantity_or("solver", "t_max", D::time, s.t_max);
  s.rtol = cfg.quantity_or("solver", "rtol", D::none, s.rtol);
  s.atol_v = cfg.quantity_or("solver", "atol_v", D::velocity, s.atol_v);
  if (cfg.has("solver", "fixed_temperature")) {
    s.fixed_temperature = true;
    s.T_fixed = cfg.quantity("solver", "fixed_temperature", D::temperature);
  }
  s.temperature_terms = int(cfg.integer_or("solver", "temperature_terms", s.temperature_terms));
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.origin() + ": " + e.what());
  }
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) { return from_config(Config::load(path)); }

// ---------------------------------------------------------------------------
// State and rates

MacroState initial_state(const Scenario& sc) {
  sc.validate();
  MacroState s;
  s.X = sc.X0;
  s.h = sc.h0;
  s.hdot = 0.0;
  s.filled = sc.X0 >= sc.L_max;
  s.Tbar = temperature(sc, sc.h0, 0.0);
  s.rho.assign(sc.grid_n, sc.rho0);
  s.v.assign(sc.grid_n, 0.0);
  s.A.assign(sc.grid_n, PlanarState{});
  return s;
}

FieldRates assemble_rates(const MacroState& st, const Scenario& sc, double Tbar) {
  const int n = st.n();
  const Frozen fz = freeze(sc, st.A, Tbar, st.hdot);
  const double X = st.X;
  const double h = st.h;
  const double Xdot = st.filled ? 0.0 : st.v[n - 1];
  FaceTerms faces;
  face_terms(fz, st.rho.data(), st.v.data(), X, Xdot, h, faces);
  const double dx = fz.dx;

  FieldRates r;
  r.rho.resize(n);
  r.v.resize(n);
  for (int i = 0; i < n; ++i) {
    const double w = node_width(i, n, dx);
    const double fl = i > 0 ? faces.flux[i - 1] : 0.0;
    const double fr = i < n - 1 ? faces.flux[i] : 0.0;
    const double dq = -h * (fr - fl) / w;
    r.rho[i] = dq / (h * X) - st.rho[i] * (st.hdot / h + Xdot / X);

    const bool fixed = i == 0 || (i == n - 1 && st.filled);
    if (fixed) {
      r.v[i] = 0.0;
      continue;
    }
    const double sl = faces.sigma[i - 1];
    const double sr = i < n - 1 ? faces.sigma[i] : 0.0;
    const double accel = ((sr - sl) / (X * w) + friction_force(sc, st.v[i], h)) / st.rho[i];
    const double dvdx = i < n - 1 ? (st.v[i + 1] - st.v[i - 1]) / (2.0 * dx) : (st.v[i] - st.v[i - 1]) / dx;
    const double u = (st.v[i] - i * dx * Xdot) / X;
    r.v[i] = accel - u * dvdx;
  }
  const auto Dxx = node_strain_rate(st.v, X);
  std::vector<double> speed(n);
  for (int i = 0; i < n; ++i) speed[i] = (st.v[i] - i * dx * Xdot) / X;
  r.A = orientation_rates(st.A, Dxx, speed, sc.closure);
  return r;
}

// ---------------------------------------------------------------------------
// Time stepping

MacroState step(const MacroState& state, const Scenario& sc, PressController& controller, double dt,
                StepStats* stats) {
  if (dt == 0.0) return state;
  if (!(dt > 0)) throw std::invalid_argument("step: dt must be positive");

  const double F = total_force(state, sc);
  const double hdot = controller.velocity(F, dt, state.h);
  const double Tbar = temperature(sc, state.h, state.t);
  BackwardEuler be(sc, Tbar, hdot);

  Fields cur = to_fields(state);
  const int n = state.n();
  const double dx = 1.0 / (n - 1);
  double t = 0.0;
  double tau = state.substep_hint > 0 ? std::min(state.substep_hint, dt) : std::min(dt, 1e-3);
  StepStats local;
  const double fill_tol = 1e-7 * sc.L_max;
  std::vector<double> rate = state.solver_rate;
  if (rate.size() != std::size_t(2 * n + 1)) rate.clear();
  double rate_dt = state.solver_rate_dt;

  int guard = 0;
  while (t < dt) {
    if (++guard > 200000) throw StepFailure("step: sub-step limit exceeded at t = " + fmt(state.t + t));
    const double remaining = dt - t;
    bool last = false;
    if (tau >= remaining * (1 - 1e-12)) {
      tau = remaining;
      last = true;
    }
    if (!cur.filled) {
      // the front may not advance by more than one cell
      const double vf = std::abs(cur.v[n - 1]);
      if (vf > 0) {
        const double cap = 0.9 * cur.X * dx / vf;
        if (tau > cap) {
          tau = cap;
          last = false;
        }
      }
    }
    if (tau < 1e-14 * std::max(dt, 1.0))
      throw StepFailure("step: sub-step size underflow at t = " + fmt(state.t + t));

    Fields next;
    int iters = 0;
    double err = 0.0;
    if (!rate.empty()) {
      // backward Euler seeded by the linear predictor from the last accepted
      // rates; the corrector-predictor difference estimates the local error
      Fields pred = cur;
      for (int i = 0; i < n; ++i) {
        pred.q[i] += tau * rate[2 * i];
        if (!(pred.q[i] > 0)) pred.q[i] = cur.q[i];
        pred.v[i] += tau * rate[2 * i + 1];
      }
      pred.X += tau * rate[2 * n];
      const bool ok = be.solve(cur, tau, next, iters, &pred);
      local.newton_iterations += iters;
      if (!ok) {
        ++local.rejected;
        tau *= 0.25;
        continue;
      }
      const double c = tau / (tau + rate_dt);
      for (int i = 0; i < n; ++i)
        err = std::max(err, c * std::abs(next.q[i] - pred.q[i]) / (sc.rtol * next.q[i]));
      if (!cur.filled) err = std::max(err, c * std::abs(next.X - pred.X) / (sc.rtol * next.X));
    } else {
      // no history yet: step doubling
      Fields full, half;
      bool ok = be.solve(cur, tau, full, iters) && be.solve(cur, 0.5 * tau, half, iters);
      if (ok) ok = be.solve(half, 0.5 * tau, next, iters);
      local.newton_iterations += iters;
      if (!ok) {
        ++local.rejected;
        tau *= 0.25;
        continue;
      }
      for (int i = 0; i < n; ++i)
        err = std::max(err, std::abs(next.q[i] - full.q[i]) / (sc.rtol * next.q[i]));
      err = std::max(err, std::abs(next.X - full.X) / (sc.rtol * next.X));
    }
    if (err > 1.0) {
      ++local.rejected;
      tau *= std::max(0.2, 0.9 / std::sqrt(err));
      continue;
    }
    if (!cur.filled && next.X > sc.L_max + fill_tol) {
      // land the front on the tool end
      ++local.rejected;
      tau *= std::clamp((sc.L_max - cur.X) / (next.X - cur.X), 0.05, 0.999);
      continue;
    }
    advance_orientation(next.A, next.v, next.X, (next.X - cur.X) / tau, tau, sc.closure);
    rate.resize(2 * n + 1);
    for (int i = 0; i < n; ++i) {
      rate[2 * i] = (next.q[i] - cur.q[i]) / tau;
      rate[2 * i + 1] = (next.v[i] - cur.v[i]) / tau;
    }
    rate[2 * n] = (next.X - cur.X) / tau;
    rate_dt = tau;
    if (!cur.filled && next.X >= sc.L_max - fill_tol) {
      // the clamp changes h X rho by less than fill_tol / L_max
      next.X = sc.L_max;
      next.filled = true;
      next.v[n - 1] = 0.0;
      rate[2 * n] = 0.0;
    }
    cur = std::move(next);
    t = last ? dt : t + tau;
    ++local.substeps;
    const double grow = err > 0 ? std::min(2.0, 0.9 / std::sqrt(err)) : 2.0;
    tau *= std::max(grow, 0.2);
  }

  MacroState out = state;
  out.t = state.t + dt;
  out.X = cur.X;
  out.h = cur.h;
  out.hdot = hdot;
  out.Tbar = Tbar;
  out.filled = cur.filled;
  out.substep_hint = tau;
  out.solver_rate = std::move(rate);
  out.solver_rate_dt = rate_dt;
  for (int i = 0; i < n; ++i) out.rho[i] = cur.q[i] / (cur.h * cur.X);
  out.v = cur.v;
  out.A = cur.A;
  if (stats) {
    stats->substeps += local.substeps;
    stats->rejected += local.rejected;
    stats->newton_iterations += local.newton_iterations;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Readout

std::vector<double> sigma_zz_nodes(const MacroState& st, const Scenario& sc) {
  const int n = st.n();
  const auto Dxx = node_strain_rate(st.v, st.X);
  const double Dzz = st.hdot / st.h;
  const double ratio = orientation::eta2_ratio(sc.materials.suspension);
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) {
    const double eta = material::viscosity(sc.materials.viscosity, shear_rate(Dxx[i], Dzz), st.Tbar);
    const double Vzzxx = -2.0 / 3.0 * eta - ratio * eta * st.A[i].Axx / 3.0;
    const double Vzzzz = 4.0 / 3.0 * eta;
    s[i] = -pressure(sc, st.rho[i]) + Vzzxx * Dxx[i] + Vzzzz * Dzz;
  }
  return s;
}

double sigma_zz(const MacroState& st, const Scenario& sc, double xstar) {
  const auto s = sigma_zz_nodes(st, sc);
  const int n = st.n();
  const double pos = std::clamp(xstar, 0.0, 1.0) * (n - 1);
  const int i = std::min(int(pos), n - 2);
  const double w = pos - i;
  return (1 - w) * s[i] + w * s[i + 1];
}

double total_force(const MacroState& st, const Scenario& sc) {
  const auto s = sigma_zz_nodes(st, sc);
  const int n = st.n();
  const double dx = 1.0 / (n - 1);
  double integral = 0.0;
  for (int i = 0; i < n; ++i) integral += node_width(i, n, dx) * std::max(-s[i], 0.0);
  return sc.W * st.X * integral;
}

std::vector<double> sensor_pressures(const MacroState& st, const Scenario& sc) {
  const auto s = sigma_zz_nodes(st, sc);
  const int n = st.n();
  std::vector<double> out;
  out.reserve(sc.sensors.size());
  for (double x : sc.sensors) {
    if (x > st.X) {
      out.push_back(0.0);
      continue;
    }
    const double pos = x / st.X * (n - 1);
    const int i = std::min(int(pos), n - 2);
    const double w = pos - i;
    out.push_back(std::max(-((1 - w) * s[i] + w * s[i + 1]), 0.0));
  }
  return out;
}

double total_mass(const MacroState& st, const Scenario& sc) {
  const int n = st.n();
  const double dx = 1.0 / (n - 1);
  double integral = 0.0;
  for (int i = 0; i < n; ++i) integral += node_width(i, n, dx) * st.rho[i];
  return sc.W * st.h * st.X * integral;
}

orientation::PlanarState orientation_at(const MacroState& st, double xstar) {
  const int n = st.n();
  const double pos = std::clamp(xstar, 0.0, 1.0) * (n - 1);
  const int i = std::min(int(pos), n - 2);
  const double w = pos - i;
  return {(1 - w) * st.A[i].Axx + w * st.A[i + 1].Axx, (1 - w) * st.A[i].Ayy + w * st.A[i + 1].Ayy,
          (1 - w) * st.A[i].Axy + w * st.A[i + 1].Axy};
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

OutputSample sample(const MacroState& st, const Scenario& sc, const PressController& c) {
  OutputSample s;
  s.t = st.t;
  s.h = st.h;
  s.hdot = st.hdot;
  s.F = total_force(st, sc);
  s.X = st.X;
  // midpoint of the initial charge, followed as a material point
  const auto mid = orientation_at(st, 0.5);
  s.Axx_mid = mid.Axx;
  s.Ayy_mid = mid.Ayy;
  s.mass = total_mass(st, sc);
  s.Tbar = st.Tbar;
  s.filled = st.filled;
  s.switched = c.switched();
  s.sensors = sensor_pressures(st, sc);
  return s;
}

}  // namespace

SimulationOutput run_scenario(const Scenario& sc, const StepObserver& observer) {
  sc.validate();
  SimulationOutput out;
  out.sensor_x = sc.sensors;
  PressController controller = sc.make_controller();
  MacroState st = initial_state(sc);
  if (st.filled) out.fill_time = 0.0;
  out.samples.push_back(sample(st, sc, controller));
  out.peak_force = out.samples.back().F;

  double next_output = sc.output_dt;
  const double eps = 1e-9 * sc.control_dt;
  try {
    while (st.t < sc.t_max - eps) {
      if (out.fill_time >= 0 && st.t >= out.fill_time + sc.hold_time - eps) break;
      const double dt = std::min(sc.control_dt, sc.t_max - st.t);
      const bool was_switched = controller.switched();
      MacroState next = step(st, sc, controller, dt);
      if (!was_switched && controller.switched()) out.switch_time = st.t;
      if (observer) observer(st, next);
      st = std::move(next);
      if (st.filled && out.fill_time < 0) out.fill_time = st.t;
      const double F = total_force(st, sc);
      out.peak_force = std::max(out.peak_force, F);
      if (st.t >= next_output - eps) {
        out.samples.push_back(sample(st, sc, controller));
        while (next_output <= st.t + eps) next_output += sc.output_dt;
      }
    }
    if (out.samples.back().t < st.t) out.samples.push_back(sample(st, sc, controller));
    out.completed = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace smc::macro1d

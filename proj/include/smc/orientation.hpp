#pragma once

// Fiber orientation tensor algebra: closures of the fourth-order moment,
// Jeffery's equation (full tensor and reduced planar plug-flow form), the
// anisotropic viscosity components of a semi-dilute rod suspension, and a
// closure-free reference that evolves a discretized planar distribution as
// material lines.
//
// Diffusion models (Folgar-Tucker, RSC, ARD) are deliberately absent: for
// planar SMC flows the plain Jeffery model describes the bundle kinematics
// better than an isotropic rotary diffusion term.

#include "smc/material.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace smc::orientation {

using Matrix3 = Eigen::Matrix3d;

/// Fourth-order tensor, row-major index (i, j, k, l).
class Tensor4 {
 public:
  Tensor4() { data_.fill(0.0); }
  double& operator()(int i, int j, int k, int l) { return data_[((i * 3 + j) * 3 + k) * 3 + l]; }
  double operator()(int i, int j, int k, int l) const { return data_[((i * 3 + j) * 3 + k) * 3 + l]; }

  /// T_ijkl B_kl
  Matrix3 contract(const Matrix3& B) const;
  /// T_ijkk
  Matrix3 trace_last() const;

 private:
  std::array<double, 81> data_;
};

enum class ClosureKind { quadratic, linear, hybrid, ibof };

ClosureKind closure_from_string(const std::string& name);
const char* to_string(ClosureKind kind);

/// Second-order orientation tensor with validated invariants: symmetric,
/// unit trace, eigenvalues in [0, 1].
class OrientationTensor2 {
 public:
  explicit OrientationTensor2(const Matrix3& A);
  const Matrix3& matrix() const { return A_; }

  static OrientationTensor2 isotropic3d();
  static OrientationTensor2 planar_isotropic();
  static OrientationTensor2 aligned(const Eigen::Vector3d& direction);

 private:
  Matrix3 A_;
};

/// In-plane components of a planar orientation state; Axz = Ayz = Azz = 0.
struct PlanarState {
  double Axx = 0.5;
  double Ayy = 0.5;
  double Axy = 0.0;

  Matrix3 matrix() const;
  /// Rescales Axx and Ayy so that Axx + Ayy = 1.
  void renormalize();
};

Tensor4 closure_fourth(const Matrix3& A, ClosureKind kind);
inline Tensor4 closure_fourth(const OrientationTensor2& A, ClosureKind kind) {
  return closure_fourth(A.matrix(), kind);
}
/// Single component of closure_fourth.
double closure_component(const Matrix3& A, ClosureKind kind, int i, int j, int k, int l);

/// dA/dt = W A - A W + xi (D A + A D - 2 AA:D), W the vorticity tensor
Matrix3 jeffery_rate(const Matrix3& A, ClosureKind kind, const Matrix3& D, const Matrix3& W,
                     double xi);

struct PlanarRates {
  double dAxx = 0.0;
  double dAyy = 0.0;
  double dAxy = 0.0;
};

/// Plug-flow elongation along x with Dyy = 0 and no shear:
///   dAxx = 2 (Axx - Axxxx) Dxx
///   dAyy = -2 Ayyxx Dxx
///   dAxy = (Axy - 2 Axyxx) Dxx
PlanarRates planar_rates(const PlanarState& s, double Dxx, ClosureKind kind);

/// Piecewise-constant strain-rate history: (duration s, Dxx 1/s) pairs.
using RateHistory = std::vector<std::pair<double, double>>;

/// Integrates planar_rates with classical RK4 (trace renormalized after every
/// step). `steps_per_unit_strain` controls the step size.
PlanarState evolve_planar(PlanarState s, const RateHistory& history, ClosureKind kind,
                          int steps_per_unit_strain = 200);

struct PlanarMoments {
  PlanarState state;
  double Axxxx = 0.0;
  double Ayyxx = 0.0;
  double Axyxx = 0.0;
};

/// Closure-free reference: `directions` equally weighted unit vectors spread
/// uniformly over [0, pi) are stretched as material lines by the affine
/// deformation of the history (exact Jeffery kinematics for xi = 1) and the
/// moment tensors are taken directly.
PlanarMoments evolve_planar_exact(const RateHistory& history, int directions = 100000);

struct ViscosityComponents {
  double Vxxxx = 0.0;
  double Vzzxx = 0.0;
  double Vzzzz = 0.0;
  double Vxxzz = 0.0;
};

/// eta2 / eta = 4 f r_p^2 / (3 [ln(1/f) + ln ln(1/f) + C]); zero when the
/// fiber contribution is disabled.
double eta2_ratio(const material::SuspensionParams& params);

ViscosityComponents viscosity_components(double eta, const material::SuspensionParams& params,
                                         const PlanarState& s, ClosureKind kind);

}  // namespace smc::orientation

#include "smc/orientation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smc::orientation {

namespace {

double delta(int i, int j) { return i == j ? 1.0 : 0.0; }

// Invariant-based optimal fitting closure of Chung and Kwon, J. Rheol. 46(1)
// (2002) 169-194, Table of fitted coefficients for beta_3, beta_4 and
// beta_6. Each row lists C_0 ... C_20 for the polynomial
//   beta = C0 + C1 II + C2 II^2 + C3 III + C4 III^2 + C5 II III + C6 II^2 III
//        + C7 II III^2 + C8 II^3 + C9 III^3 + C10 II^3 III + C11 II^2 III^2
//        + C12 II III^3 + C13 II^4 + C14 III^4 + C15 II^4 III + C16 II^3 III^2
//        + C17 II^2 III^3 + C18 II III^4 + C19 II^5 + C20 III^5
constexpr double kIbof[3][21] = {
    {0.24940908165786e2, -0.435101153160329e3, 0.372389335663877e4, 0.703443657916476e4,
     0.823995187366106e6, -0.133931929894245e6, 0.880683515327916e6, -0.991630690741981e7,
     -0.159392396237307e5, 0.800970026849796e7, -0.237010458689252e7, 0.379010599355267e8,
     -0.337010820273821e8, 0.322219416256417e5, -0.257258805870567e9, 0.214419090344474e7,
     -0.449275591851490e8, -0.213133920223355e8, 0.157076702372204e10, -0.232153488525298e5,
     -0.395769398304473e10},
    {-0.497217790110754e0, 0.234980797511405e2, -0.391044251397838e3, 0.153965820593506e3,
     0.152772950743819e6, -0.213755248785646e4, -0.400138947092812e4, -0.185949305922308e7,
     0.296004865275814e4, 0.247717810054366e7, 0.101013983339062e6, 0.732341494213578e7,
     -0.147919027644202e8, -0.104092072189767e5, -0.635149929624336e8, -0.247435106210237e6,
     -0.902980378929272e7, 0.724969796807399e7, 0.487093452892595e9, 0.138088690964946e5,
     -0.160162178614234e10},
    {0.234146291570999e2, -0.412048043372534e3, 0.319553200392089e4, 0.573259594331015e4,
     -0.485212803064813e5, -0.605006113515592e5, -0.477173740017567e5, 0.599066486689836e7,
     -0.110656935176569e5, -0.460543580680696e8, 0.203042960322874e7, -0.556606156734835e8,
     0.567424911007837e9, 0.128967058686204e5, -0.152752854956514e10, -0.499321746092534e7,
     0.132124828143333e9, -0.162359994620983e10, 0.792526849882218e10, 0.466767581292985e4,
     -0.128050778279459e11},
};

double ibof_beta(const double (&c)[21], double I2, double I3) {
  const double I2_2 = I2 * I2, I2_3 = I2_2 * I2, I2_4 = I2_3 * I2, I2_5 = I2_4 * I2;
  const double I3_2 = I3 * I3, I3_3 = I3_2 * I3, I3_4 = I3_3 * I3, I3_5 = I3_4 * I3;
  return c[0] + c[1] * I2 + c[2] * I2_2 + c[3] * I3 + c[4] * I3_2 + c[5] * I2 * I3 +
         c[6] * I2_2 * I3 + c[7] * I2 * I3_2 + c[8] * I2_3 + c[9] * I3_3 + c[10] * I2_3 * I3 +
         c[11] * I2_2 * I3_2 + c[12] * I2 * I3_3 + c[13] * I2_4 + c[14] * I3_4 +
         c[15] * I2_4 * I3 + c[16] * I2_3 * I3_2 + c[17] * I2_2 * I3_3 + c[18] * I2 * I3_4 +
         c[19] * I2_5 + c[20] * I3_5;
}

// Fully symmetric part of X_ij Y_kl.
double sym(const Matrix3& X, const Matrix3& Y, int i, int j, int k, int l) {
  return (X(i, j) * Y(k, l) + X(i, k) * Y(j, l) + X(i, l) * Y(j, k) + X(k, l) * Y(i, j) +
          X(j, l) * Y(i, k) + X(j, k) * Y(i, l)) /
         6.0;
}

double linear_component(const Matrix3& A, int i, int j, int k, int l) {
  const double dd = delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
  const double ad = A(i, j) * delta(k, l) + A(i, k) * delta(j, l) + A(i, l) * delta(j, k) +
                    A(k, l) * delta(i, j) + A(j, l) * delta(i, k) + A(j, k) * delta(i, l);
  return -dd / 35.0 + ad / 7.0;
}

// Closure of one orientation state; components evaluated on demand.
class Closure {
 public:
  Closure(const Matrix3& A, ClosureKind kind) : A_(A), kind_(kind) {
    if (kind == ClosureKind::hybrid) f_ = 1.0 - 27.0 * A.determinant();
    if (kind == ClosureKind::ibof) init_ibof();
  }

  double operator()(int i, int j, int k, int l) const {
    switch (kind_) {
      case ClosureKind::quadratic: return A_(i, j) * A_(k, l);
      case ClosureKind::linear: return linear_component(A_, i, j, k, l);
      case ClosureKind::hybrid:
        return (1.0 - f_) * linear_component(A_, i, j, k, l) + f_ * A_(i, j) * A_(k, l);
      case ClosureKind::ibof: {
        const Matrix3 I = Matrix3::Identity();
        return b_[0] * sym(I, I, i, j, k, l) + b_[1] * sym(I, A_, i, j, k, l) +
               b_[2] * sym(A_, A_, i, j, k, l) + b_[3] * sym(I, A2_, i, j, k, l) +
               b_[4] * sym(A_, A2_, i, j, k, l) + b_[5] * sym(A2_, A2_, i, j, k, l);
      }
    }
    throw std::invalid_argument("unsupported closure kind");
  }

  bool fully_symmetric() const { return kind_ == ClosureKind::linear || kind_ == ClosureKind::ibof; }

 private:
  void init_ibof() {
    const Matrix3& A = A_;
    A2_ = A * A;
    const double I2 = 0.5 * (A.trace() * A.trace() - A2_.trace());
    const double I3 = A.determinant();
    const double b3 = ibof_beta(kIbof[0], I2, I3);
    const double b4 = ibof_beta(kIbof[1], I2, I3);
    const double b6 = ibof_beta(kIbof[2], I2, I3);
    const double b1 =
        3.0 / 5.0 *
        (-1.0 / 7.0 + b3 / 5.0 * (1.0 / 7.0 + 4.0 / 7.0 * I2 + 8.0 / 3.0 * I3) -
         b4 * (1.0 / 5.0 - 8.0 / 15.0 * I2 - 14.0 / 15.0 * I3) -
         b6 * (1.0 / 35.0 - 24.0 / 105.0 * I3 - 4.0 / 35.0 * I2 + 16.0 / 15.0 * I2 * I3 +
               8.0 / 35.0 * I2 * I2));
    const double b2 = 6.0 / 7.0 *
                      (1.0 - b3 / 5.0 * (1.0 + 4.0 * I2) + 7.0 / 5.0 * b4 * (1.0 / 6.0 - I2) -
                       b6 * (-1.0 / 5.0 + 2.0 / 3.0 * I3 + 4.0 / 5.0 * I2 - 8.0 / 5.0 * I2 * I2));
    const double b5 = -4.0 / 5.0 * b3 - 7.0 / 5.0 * b4 - 6.0 / 5.0 * b6 * (1.0 - 4.0 / 3.0 * I2);
    b_ = {b1, b2, b3, b4, b5, b6};
  }

  Matrix3 A_;
  Matrix3 A2_;
  ClosureKind kind_;
  double f_ = 0.0;
  std::array<double, 6> b_{};
};

}  // namespace

Matrix3 Tensor4::contract(const Matrix3& B) const {
  Matrix3 out = Matrix3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) out(i, j) += (*this)(i, j, k, l) * B(k, l);
  return out;
}

Matrix3 Tensor4::trace_last() const { return contract(Matrix3::Identity()); }

ClosureKind closure_from_string(const std::string& name) {
  if (name == "quadratic") return ClosureKind::quadratic;
  if (name == "linear") return ClosureKind::linear;
  if (name == "hybrid") return ClosureKind::hybrid;
  if (name == "ibof" || name == "IBOF") return ClosureKind::ibof;
  throw std::invalid_argument("unsupported closure '" + name +
                              "' (expected quadratic, linear, hybrid or ibof)");
}

const char* to_string(ClosureKind kind) {
  switch (kind) {
    case ClosureKind::quadratic: return "quadratic";
    case ClosureKind::linear: return "linear";
    case ClosureKind::hybrid: return "hybrid";
    case ClosureKind::ibof: return "ibof";
  }
  return "?";
}

OrientationTensor2::OrientationTensor2(const Matrix3& A) : A_(A) {
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("orientation tensor must be symmetric");
  if (std::abs(A.trace() - 1.0) > 1e-9) throw DomainError("orientation tensor must have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(A, Eigen::EigenvaluesOnly);
  const auto ev = eig.eigenvalues();
  if (ev.minCoeff() < -1e-9 || ev.maxCoeff() > 1.0 + 1e-9)
    throw DomainError("orientation tensor eigenvalues must lie in [0, 1]");
}

OrientationTensor2 OrientationTensor2::isotropic3d() {
  return OrientationTensor2(Matrix3::Identity() / 3.0);
}

OrientationTensor2 OrientationTensor2::planar_isotropic() {
  return OrientationTensor2(PlanarState{}.matrix());
}

OrientationTensor2 OrientationTensor2::aligned(const Eigen::Vector3d& direction) {
  const Eigen::Vector3d p = direction.normalized();
  return OrientationTensor2(p * p.transpose());
}

Matrix3 PlanarState::matrix() const {
  Matrix3 A = Matrix3::Zero();
  A(0, 0) = Axx;
  A(1, 1) = Ayy;
  A(0, 1) = A(1, 0) = Axy;
  return A;
}

void PlanarState::renormalize() {
  const double tr = Axx + Ayy;
  if (tr > 0) {
    Axx /= tr;
    Ayy /= tr;
    Axy /= tr;
  }
}

Tensor4 closure_fourth(const Matrix3& A, ClosureKind kind) {
  const Closure c(A, kind);
  Tensor4 T;
  if (c.fully_symmetric()) {
    // evaluate the 15 distinct components and scatter
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        for (int k = j; k < 3; ++k)
          for (int l = k; l < 3; ++l) {
            const double v = c(i, j, k, l);
            std::array<int, 4> idx{i, j, k, l};
            do {
              T(idx[0], idx[1], idx[2], idx[3]) = v;
            } while (std::next_permutation(idx.begin(), idx.end()));
          }
    return T;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) T(i, j, k, l) = c(i, j, k, l);
  return T;
}

double closure_component(const Matrix3& A, ClosureKind kind, int i, int j, int k, int l) {
  return Closure(A, kind)(i, j, k, l);
}

Matrix3 jeffery_rate(const Matrix3& A, ClosureKind kind, const Matrix3& D, const Matrix3& W, double xi) {
  const Tensor4 AA = closure_fourth(A, kind);
  return W * A - A * W + xi * (D * A + A * D - 2.0 * AA.contract(D));
}

PlanarRates planar_rates(const PlanarState& s, double Dxx, ClosureKind kind) {
  if (Dxx == 0.0) return {};
  const Closure AA(s.matrix(), kind);
  PlanarRates r;
  r.dAxx = 2.0 * (s.Axx - AA(0, 0, 0, 0)) * Dxx;
  r.dAyy = -2.0 * AA(1, 1, 0, 0) * Dxx;
  r.dAxy = (s.Axy - 2.0 * AA(0, 1, 0, 0)) * Dxx;
  return r;
}

PlanarState evolve_planar(PlanarState s, const RateHistory& history, ClosureKind kind,
                          int steps_per_unit_strain) {
  auto add = [](const PlanarState& a, const PlanarRates& r, double h) {
    return PlanarState{a.Axx + h * r.dAxx, a.Ayy + h * r.dAyy, a.Axy + h * r.dAxy};
  };
  for (const auto& [duration, Dxx] : history) {
    if (duration <= 0 || Dxx == 0.0) continue;
    const int steps = std::max(1, int(std::ceil(std::abs(Dxx) * duration * steps_per_unit_strain)));
    const double h = duration / steps;
    for (int i = 0; i < steps; ++i) {
      const auto k1 = planar_rates(s, Dxx, kind);
      const auto k2 = planar_rates(add(s, k1, 0.5 * h), Dxx, kind);
      const auto k3 = planar_rates(add(s, k2, 0.5 * h), Dxx, kind);
      const auto k4 = planar_rates(add(s, k3, h), Dxx, kind);
      s.Axx += h / 6.0 * (k1.dAxx + 2 * k2.dAxx + 2 * k3.dAxx + k4.dAxx);
      s.Ayy += h / 6.0 * (k1.dAyy + 2 * k2.dAyy + 2 * k3.dAyy + k4.dAyy);
      s.Axy += h / 6.0 * (k1.dAxy + 2 * k2.dAxy + 2 * k3.dAxy + k4.dAxy);
      s.renormalize();
    }
  }
  return s;
}

PlanarMoments evolve_planar_exact(const RateHistory& history, int directions) {
  if (directions < 1) throw std::invalid_argument("evolve_planar_exact: need at least one direction");
  // Under plug flow with Dyy = 0 and no rotation the deformation gradient
  // restricted to the plane is diag(exp(strain), 1).
  double strain = 0.0;
  for (const auto& [duration, Dxx] : history) strain += duration * Dxx;
  const double stretch = std::exp(strain);
  PlanarMoments m;
  double axx = 0, ayy = 0, axy = 0, axxxx = 0, ayyxx = 0, axyxx = 0;
  for (int k = 0; k < directions; ++k) {
    const double theta = (k + 0.5) * std::numbers::pi / directions;
    double px = stretch * std::cos(theta);
    double py = std::sin(theta);
    const double norm = std::hypot(px, py);
    px /= norm;
    py /= norm;
    axx += px * px;
    ayy += py * py;
    axy += px * py;
    axxxx += px * px * px * px;
    ayyxx += py * py * px * px;
    axyxx += px * py * px * px;
  }
  const double n = directions;
  m.state = {axx / n, ayy / n, axy / n};
  m.Axxxx = axxxx / n;
  m.Ayyxx = ayyxx / n;
  m.Axyxx = axyxx / n;
  return m;
}

double eta2_ratio(const material::SuspensionParams& p) {
  if (!p.fiber_stress) return 0.0;
  const double inv = std::log(1.0 / p.f);
  const double bracket = inv + std::log(inv) + p.C;
  if (!(inv > 0) || !(bracket > 0))
    throw DomainError("viscosity_components: ln(1/f) + ln ln(1/f) + C must be positive");
  return 4.0 * p.f * p.r_p * p.r_p / (3.0 * bracket);
}

ViscosityComponents viscosity_components(double eta, const material::SuspensionParams& params,
                                         const PlanarState& s, ClosureKind kind) {
  const double eta2 = eta2_ratio(params) * eta;
  const double Axxxx = eta2 != 0.0 ? closure_component(s.matrix(), kind, 0, 0, 0, 0) : 0.0;
  ViscosityComponents v;
  v.Vxxxx = 4.0 / 3.0 * eta + eta2 * (Axxxx - s.Axx / 3.0);
  v.Vzzxx = -2.0 / 3.0 * eta - eta2 * s.Axx / 3.0;
  v.Vzzzz = 4.0 / 3.0 * eta;
  v.Vxxzz = -2.0 / 3.0 * eta;
  return v;
}

}  // namespace smc::orientation

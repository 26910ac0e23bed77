#pragma once

// Mesoscale direct-bundle kinematics. Bundles are chains of straight
// segments; the matrix is represented by a cell lattice carrying velocity and
// a reaction body force. Node motion is prescribed by a velocity field (the
// macroscale plug flow), so the hydrodynamic and contact forces are
// diagnostics and do not feed back into the kinematics.

#include "smc/kdtree.hpp"
#include "smc/orientation.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smc {
class Config;
}

namespace smc::bundles {

using Vec3 = Eigen::Vector3d;

class BundleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 extent() const { return hi - lo; }
  double volume() const { return extent().prod(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Vec3 clamp(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
};

struct BundleChain {
  std::vector<Vec3> nodes;
  /// Segment lengths at generation; orientation averages are weighted with
  /// these (the chains stretch under prescribed kinematics, real bundles do
  /// not).
  std::vector<double> reference_lengths;
  double area = 0.03e-6;       // m^2
  double rest_length = 2.5e-3; // m
  double E = 72e9;             // Pa, metadata only

  int segments() const { return int(nodes.size()) - 1; }
  double radius() const;
  double length() const;
  double reference_length() const;
  /// Throws BundleError if the chain has fewer than two nodes, or if the
  /// reference segment lengths leave [0.5, 2] x rest_length.
  void validate() const;
};

struct StackOptions {
  double area = 0.03e-6;
  double rest_length = 2.5e-3;
  /// Drop segment parts outside the box. Truncated end segments shorter than
  /// half the rest length are removed.
  bool clip = true;
  /// Generation stops with BundleError after this many candidate bundles.
  std::size_t max_candidates = 50'000'000;
};

struct StackStats {
  std::size_t candidates = 0;
  std::size_t dropped = 0;      // candidates with no segment left after clipping
  double volume_fraction = 0.0; // sum(length * area) / box volume
};

/// Random planar-isotropic stack in [0, extent]: midpoints uniform in the box,
/// in-plane angles uniform on [0, pi). Bundles are added until the volume
/// fraction reaches vf_target. Deterministic for a given seed.
std::vector<BundleChain> generate_stack(const Vec3& extent, double vf_target, double bundle_length,
                                        std::uint64_t seed, const StackOptions& options = {},
                                        StackStats* stats = nullptr);

double volume_fraction(const std::vector<BundleChain>& chains, const Box& box);

/// Regular cell lattice over a box.
class EulerGrid {
 public:
  EulerGrid(const Box& box, int nx, int ny, int nz);

  int size() const { return nx_ * ny_ * nz_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  const Box& box() const { return box_; }
  double cell_volume() const { return cell_.prod(); }
  Vec3 cell_size() const { return cell_; }
  int index(int i, int j, int k) const { return (k * ny_ + j) * nx_ + i; }
  Vec3 center(int c) const;
  std::vector<Vec3> centers() const;
  /// True if every node lies inside the lattice box.
  bool covers(const std::vector<BundleChain>& chains) const;

  std::vector<Vec3> velocity;  // m/s
  std::vector<Vec3> force;     // N/m^3

 private:
  Box box_;
  int nx_, ny_, nz_;
  Vec3 cell_;
};

/// Normalized Gaussian weights of a set of cells around a point.
struct CellWeights {
  std::vector<std::size_t> cells;
  std::vector<double> weights;  // sum to 1 (empty if no neighbors)
};

/// w_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)) over the given cells, normalized.
CellWeights gaussian_weights(const Vec3& x, const std::vector<Vec3>& centers,
                             const std::vector<std::size_t>& cells, double sigma);

/// dv_j = sum_i (w_ij / W_j)(v_i - v_j). With no neighbors returns zero and
/// increments the diagnostic counter below.
Vec3 relative_velocity(const Vec3& v_segment, const CellWeights& weights,
                       const std::vector<Vec3>& cell_velocities);
std::uint64_t no_neighbor_count();
void reset_no_neighbor_count();

/// Drag and lift factors as piecewise-linear tables over the angle between
/// the segment axis and the relative velocity, in [0, pi/2]. A single entry
/// is a constant.
struct DragCoefficients {
  std::vector<double> angle = {0.0};  // rad
  std::vector<double> k_d = {1.0};
  std::vector<double> k_l = {0.0};

  void validate() const;
  std::pair<double, double> at(double angle_rad) const;
};

/// F = 6 pi eta R (k_d dv + k_l |dv| q) with q the normalized rejection of dv
/// from the axis (zero lift when dv is parallel to the axis).
Vec3 hydrodynamic_force(double eta, double R, const DragCoefficients& coeffs, const Vec3& dv,
                        const Vec3& axis);

/// f_i = -sum_j (w_ij / W_j) F_j / V_i, written into grid.force. Work is split
/// over `workers` threads with per-worker buffers merged in worker order.
void accumulate_body_force(const std::vector<Vec3>& forces, const std::vector<CellWeights>& weights,
                           EulerGrid& grid, int workers = 1);

/// sigma_c = -eta (d_a^2 / |sin phi|) dv_t / (max(g, g_min) A), magnitude
/// clamped to cap.
Vec3 contact_stress(double eta, double d_a, double phi, const Vec3& dv_t, double g, double A,
                    double cap = 1e6, double g_min = 1e-6);

using VelocityField = std::function<Vec3(const Vec3& x, double t)>;

/// Explicit midpoint step of every node. Nodes leaving `domain` are clamped
/// back and counted in *clamped.
void advect(std::vector<BundleChain>& chains, const VelocityField& field, double t, double dt,
            const Box& domain, std::size_t* clamped = nullptr);

/// Weighted second moment of the segments whose midpoint lies in `region`.
/// Throws BundleError if there is none.
orientation::OrientationTensor2 measure_orientation(const std::vector<BundleChain>& chains,
                                                    const Box& region);

/// Settings of a coupled bundle run; [bundles] section keys in parentheses.
struct BundleSettings {
  Vec3 stack_extent{50e-3, 50e-3, 4.5e-3};  // (stack_x_mm, stack_y_mm, stack_z_mm)
  double stack_offset = 0.0;                // x of the stack's left edge (stack_offset_mm)
  double volume_fraction = 0.23;            // (volume_fraction)
  double bundle_length = 25e-3;             // (bundle_length_mm)
  double area = 0.03e-6;                    // (bundle_area_mm2)
  double rest_length = 2.5e-3;              // (segment_length_mm)
  double search_radius = 2.5e-3;            // L (search_radius_mm)
  double sigma = 1.25e-3;                   // Gaussian width (sigma_mm), default L/2
  DragCoefficients drag;                    // (drag_angle_deg, k_d, k_l)
  double contact_cap = 1e6;                 // (contact_cap_MPa)
  double g_min = 1e-6;                      // (g_min_um)
  std::uint64_t seed = 1;                   // (seed)
  int workers = 1;                          // (workers)
  double cell_size = 2.5e-3;                // Euler lattice spacing (cell_mm)

  static BundleSettings from_config(const Config& cfg);
};

/// Segment-level diagnostics of the bundle-matrix interaction for a snapshot.
struct InteractionDiagnostics {
  std::vector<Vec3> segment_forces;  // N
  EulerGrid grid;
  double reaction_residual = 0.0;    // |sum f V + sum F| / sum |F|
  std::uint64_t isolated_segments = 0;
};

/// Fills the lattice velocity from `field`, evaluates relative velocities and
/// hydrodynamic forces for all segments (parallel over segments) and
/// accumulates the reaction body force.
InteractionDiagnostics interaction(const std::vector<BundleChain>& chains, const VelocityField& field,
                                   double t, double eta, const BundleSettings& settings,
                                   const Box& domain);

}  // namespace smc::bundles

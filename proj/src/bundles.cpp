#include "smc/bundles.hpp"

#include "smc/config.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

namespace smc::bundles {

namespace {

std::atomic<std::uint64_t> g_no_neighbors{0};

constexpr double kPi = std::numbers::pi;

// Parameter interval [t0, t1] of p + t d inside the box (Liang-Barsky).
bool clip_line(const Vec3& p, const Vec3& d, const Box& box, double& t0, double& t1) {
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (p[a] < box.lo[a] || p[a] > box.hi[a]) return false;
      continue;
    }
    double ta = (box.lo[a] - p[a]) / d[a];
    double tb = (box.hi[a] - p[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

// Splits [-half, half] into segments of the rest length and keeps the parts
// inside [t0, t1].
BundleChain make_chain(const Vec3& mid, const Vec3& dir, double length, double t0, double t1,
                       const StackOptions& opt) {
  BundleChain c;
  c.area = opt.area;
  c.rest_length = opt.rest_length;
  const int nseg = std::max(1, int(std::lround(length / opt.rest_length)));
  const double seg = length / nseg;
  std::vector<double> knots;
  for (int k = 0; k <= nseg; ++k) knots.push_back(-0.5 * length + k * seg);

  std::vector<double> kept;
  for (int k = 0; k < nseg; ++k) {
    const double a = std::max(knots[k], t0);
    const double b = std::min(knots[k + 1], t1);
    if (b - a < 0.5 * opt.rest_length) continue;
    if (kept.empty()) kept.push_back(a);
    else if (kept.back() != a) break;  // a dropped end segment cannot be interior
    kept.push_back(b);
  }
  for (double t : kept) c.nodes.push_back(mid + t * dir);
  for (std::size_t k = 1; k < kept.size(); ++k) c.reference_lengths.push_back(kept[k] - kept[k - 1]);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

double BundleChain::radius() const { return std::sqrt(area / kPi); }

double BundleChain::length() const {
  double l = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) l += (nodes[k] - nodes[k - 1]).norm();
  return l;
}

double BundleChain::reference_length() const {
  double l = 0.0;
  for (double r : reference_lengths) l += r;
  return l;
}

void BundleChain::validate() const {
  if (nodes.size() < 2) throw BundleError("bundle chain needs at least two nodes");
  if (reference_lengths.size() != nodes.size() - 1)
    throw BundleError("bundle chain: one reference length per segment required");
  for (double r : reference_lengths)
    if (r < 0.5 * rest_length * (1 - 1e-12) || r > 2.0 * rest_length * (1 + 1e-12))
      throw BundleError("bundle chain: segment length outside [0.5, 2] x rest length");
}

std::vector<BundleChain> generate_stack(const Vec3& extent, double vf_target, double bundle_length,
                                        std::uint64_t seed, const StackOptions& options,
                                        StackStats* stats) {
  if (!(extent.array() > 0).all()) throw BundleError("generate_stack: extent must be positive");
  if (!(vf_target >= 0 && vf_target < 0.5))
    throw BundleError("generate_stack: volume fraction must lie in [0, 0.5)");
  if (!(bundle_length >= 0.5 * options.rest_length))
    throw BundleError("generate_stack: bundle length below half a segment");
  if (!(options.area > 0)) throw BundleError("generate_stack: bundle area must be positive");

  const Box box{Vec3::Zero(), extent};
  const double target_volume = vf_target * box.volume();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<BundleChain> chains;
  StackStats st;
  double volume = 0.0;
  // stop at the first bundle that reaches the target (relative slack for the
  // exact bookkeeping case)
  while (volume < target_volume * (1 - 1e-12)) {
    if (st.candidates >= options.max_candidates)
      throw BundleError("generate_stack: volume fraction " + std::to_string(vf_target) +
                        " not reached after " + std::to_string(st.candidates) + " bundles");
    ++st.candidates;
    const Vec3 mid(u01(rng) * extent.x(), u01(rng) * extent.y(), u01(rng) * extent.z());
    const double phi = u01(rng) * kPi;
    const Vec3 dir(std::cos(phi), std::sin(phi), 0.0);
    double t0 = -0.5 * bundle_length, t1 = 0.5 * bundle_length;
    if (options.clip && !clip_line(mid, dir, box, t0, t1)) {
      ++st.dropped;
      continue;
    }
    BundleChain c = make_chain(mid, dir, bundle_length, t0, t1, options);
    if (options.clip)
      for (auto& q : c.nodes) q = box.clamp(q);  // rounding at the clip planes
    if (c.nodes.size() < 2) {
      ++st.dropped;
      continue;
    }
    volume += c.reference_length() * c.area;
    chains.push_back(std::move(c));
  }
  st.volume_fraction = volume / box.volume();
  if (stats) *stats = st;
  return chains;
}

double volume_fraction(const std::vector<BundleChain>& chains, const Box& box) {
  double v = 0.0;
  for (const auto& c : chains) v += c.length() * c.area;
  return v / box.volume();
}

// ---------------------------------------------------------------------------

EulerGrid::EulerGrid(const Box& box, int nx, int ny, int nz) : box_(box), nx_(nx), ny_(ny), nz_(nz) {
  if (nx < 1 || ny < 1 || nz < 1) throw BundleError("grid: need at least one cell per direction");
  if (!(box.extent().array() > 0).all()) throw BundleError("grid: box must have positive volume");
  cell_ = box.extent().cwiseQuotient(Vec3(nx, ny, nz));
  velocity.assign(size(), Vec3::Zero());
  force.assign(size(), Vec3::Zero());
}

Vec3 EulerGrid::center(int c) const {
  const int i = c % nx_;
  const int j = (c / nx_) % ny_;
  const int k = c / (nx_ * ny_);
  return box_.lo + cell_.cwiseProduct(Vec3(i + 0.5, j + 0.5, k + 0.5));
}

std::vector<Vec3> EulerGrid::centers() const {
  std::vector<Vec3> out(size());
  for (int c = 0; c < size(); ++c) out[c] = center(c);
  return out;
}

bool EulerGrid::covers(const std::vector<BundleChain>& chains) const {
  for (const auto& c : chains)
    for (const auto& p : c.nodes)
      if (!box_.contains(p)) return false;
  return true;
}

// ---------------------------------------------------------------------------

CellWeights gaussian_weights(const Vec3& x, const std::vector<Vec3>& centers,
                             const std::vector<std::size_t>& cells, double sigma) {
  CellWeights cw;
  if (cells.empty()) return cw;
  cw.cells = cells;
  cw.weights.resize(cells.size());
  double W = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    cw.weights[k] = std::exp(-(centers[cells[k]] - x).squaredNorm() / (2.0 * sigma * sigma));
    W += cw.weights[k];
  }
  if (!(W > 0)) {
    // every neighbor so far out that the weights underflow: fall back to equal weights
    std::fill(cw.weights.begin(), cw.weights.end(), 1.0 / double(cells.size()));
    return cw;
  }
  for (double& w : cw.weights) w /= W;
  return cw;
}

Vec3 relative_velocity(const Vec3& v_segment, const CellWeights& weights,
                       const std::vector<Vec3>& cell_velocities) {
  if (weights.cells.empty()) {
    g_no_neighbors.fetch_add(1, std::memory_order_relaxed);
    return Vec3::Zero();
  }
  Vec3 dv = Vec3::Zero();
  for (std::size_t k = 0; k < weights.cells.size(); ++k)
    dv += weights.weights[k] * (cell_velocities[weights.cells[k]] - v_segment);
  return dv;
}

std::uint64_t no_neighbor_count() { return g_no_neighbors.load(std::memory_order_relaxed); }
void reset_no_neighbor_count() { g_no_neighbors.store(0, std::memory_order_relaxed); }

void DragCoefficients::validate() const {
  if (angle.empty() || angle.size() != k_d.size() || angle.size() != k_l.size())
    throw BundleError("drag coefficients: angle, k_d and k_l tables must have equal non-zero length");
  for (std::size_t i = 0; i < angle.size(); ++i) {
    if (i > 0 && !(angle[i] > angle[i - 1]))
      throw BundleError("drag coefficients: angles must be strictly increasing");
    if (!(k_d[i] > 0)) throw BundleError("drag coefficients: k_d must be positive");
    if (!(k_l[i] >= 0)) throw BundleError("drag coefficients: k_l must be non-negative");
  }
}

std::pair<double, double> DragCoefficients::at(double a) const {
  if (angle.size() == 1 || a <= angle.front()) return {k_d.front(), k_l.front()};
  if (a >= angle.back()) return {k_d.back(), k_l.back()};
  const auto it = std::upper_bound(angle.begin(), angle.end(), a);
  const std::size_t i = std::size_t(it - angle.begin());
  const double w = (a - angle[i - 1]) / (angle[i] - angle[i - 1]);
  return {k_d[i - 1] + w * (k_d[i] - k_d[i - 1]), k_l[i - 1] + w * (k_l[i] - k_l[i - 1])};
}

Vec3 hydrodynamic_force(double eta, double R, const DragCoefficients& coeffs, const Vec3& dv,
                        const Vec3& axis) {
  const double speed = dv.norm();
  if (speed == 0.0) return Vec3::Zero();
  const double c = std::min(1.0, std::abs(dv.dot(axis)) / speed);
  const auto [kd, kl] = coeffs.at(std::acos(c));
  const Vec3 rejection = dv - dv.dot(axis) * axis;
  Vec3 lift = Vec3::Zero();
  if (rejection.norm() >= 1e-12 * speed) lift = kl * speed * rejection.normalized();
  return 6.0 * kPi * eta * R * (kd * dv + lift);
}

void accumulate_body_force(const std::vector<Vec3>& forces, const std::vector<CellWeights>& weights,
                           EulerGrid& grid, int workers) {
  if (forces.size() != weights.size())
    throw std::invalid_argument("accumulate_body_force: one weight set per force required");
  const std::size_t n = forces.size();
  workers = std::max(1, std::min<int>(workers, int(std::max<std::size_t>(n, 1))));
  const double V = grid.cell_volume();
  std::vector<std::vector<Vec3>> buffers(workers, std::vector<Vec3>(grid.size(), Vec3::Zero()));
  auto work = [&](int w) {
    const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
    auto& buf = buffers[w];
    for (std::size_t j = begin; j < end; ++j)
      for (std::size_t k = 0; k < weights[j].cells.size(); ++k)
        buf[weights[j].cells[k]] -= weights[j].weights[k] * forces[j];
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (int c = 0; c < grid.size(); ++c) {
    Vec3 sum = Vec3::Zero();
    for (int w = 0; w < workers; ++w) sum += buffers[w][c];
    grid.force[c] = sum / V;
  }
}

Vec3 contact_stress(double eta, double d_a, double phi, const Vec3& dv_t, double g, double A, double cap,
                    double g_min) {
  if (!(g > 0)) throw std::invalid_argument("contact_stress: gap must be positive");
  if (!(A > 0)) throw std::invalid_argument("contact_stress: area must be positive");
  if (dv_t.isZero(0.0)) return Vec3::Zero();
  const double s = std::abs(std::sin(phi));
  const double t = std::max(g, g_min);
  const double mag = eta * (d_a * d_a / s) * dv_t.norm() / (t * A);
  return -std::min(mag, cap) * dv_t.normalized();
}

void advect(std::vector<BundleChain>& chains, const VelocityField& field, double t, double dt,
            const Box& domain, std::size_t* clamped) {
  if (dt == 0.0) return;
  std::size_t count = 0;
  for (auto& c : chains) {
    for (auto& p : c.nodes) {
      const Vec3 k1 = field(p, t);
      const Vec3 mid = p + 0.5 * dt * k1;
      Vec3 next = p + dt * field(mid, t + 0.5 * dt);
      if (!domain.contains(next)) {
        next = domain.clamp(next);
        ++count;
      }
      p = next;
    }
  }
  if (clamped) *clamped += count;
}

orientation::OrientationTensor2 measure_orientation(const std::vector<BundleChain>& chains,
                                                    const Box& region) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  double total = 0.0;
  for (const auto& c : chains) {
    for (int s = 0; s < c.segments(); ++s) {
      const Vec3 d = c.nodes[s + 1] - c.nodes[s];
      const double len = d.norm();
      if (len == 0.0 || !region.contains(0.5 * (c.nodes[s] + c.nodes[s + 1]))) continue;
      const double w = std::size_t(s) < c.reference_lengths.size() ? c.reference_lengths[s] : len;
      const Vec3 p = d / len;
      A += w * p * p.transpose();
      total += w;
    }
  }
  if (!(total > 0)) throw BundleError("measure_orientation: no segment in region");
  A /= total;
  A = 0.5 * (A + A.transpose());
  A /= A.trace();
  return orientation::OrientationTensor2(A);
}

// ---------------------------------------------------------------------------

BundleSettings BundleSettings::from_config(const Config& cfg) {
  using D = Dimension;
  BundleSettings s;
  const std::string sec = "bundles";
  auto err = [&](const std::string& key, const std::string& what) {
    throw ConfigError(cfg.origin() + ": [bundles] " + key + ": " + what);
  };
  s.stack_extent.x() = cfg.quantity_or(sec, "stack_x", D::length, s.stack_extent.x());
  s.stack_extent.y() = cfg.quantity_or(sec, "stack_y", D::length, s.stack_extent.y());
  s.stack_extent.z() = cfg.quantity_or(sec, "stack_z", D::length, s.stack_extent.z());
  s.stack_offset = cfg.quantity_or(sec, "stack_offset", D::length, s.stack_offset);
  s.volume_fraction = cfg.quantity_or(sec, "volume_fraction", D::none, s.volume_fraction);
  s.bundle_length = cfg.quantity_or(sec, "bundle_length", D::length, s.bundle_length);
  s.area = cfg.quantity_or(sec, "bundle_area", D::area, s.area);
  s.rest_length = cfg.quantity_or(sec, "segment_length", D::length, s.rest_length);
  s.search_radius = cfg.quantity_or(sec, "search_radius", D::length, s.rest_length);
  s.sigma = cfg.quantity_or(sec, "sigma", D::length, 0.5 * s.search_radius);
  s.contact_cap = cfg.quantity_or(sec, "contact_cap", D::pressure, s.contact_cap);
  s.g_min = cfg.quantity_or(sec, "g_min", D::length, s.g_min);
  s.cell_size = cfg.quantity_or(sec, "cell", D::length, s.search_radius);
  s.seed = std::uint64_t(cfg.integer_or(sec, "seed", 1));
  s.workers = int(cfg.integer_or(sec, "workers", 1));
  if (cfg.has(sec, "drag_angle") || cfg.has(sec, "k_d") || cfg.has(sec, "k_l")) {
    s.drag.angle = cfg.has(sec, "drag_angle") ? cfg.quantity_list(sec, "drag_angle", D::angle)
                                              : std::vector<double>{0.0};
    s.drag.k_d = cfg.has(sec, "k_d") ? cfg.quantity_list(sec, "k_d", D::none) : std::vector<double>{1.0};
    s.drag.k_l = cfg.has(sec, "k_l") ? cfg.quantity_list(sec, "k_l", D::none) : std::vector<double>{0.0};
    auto widen = [&](std::vector<double>& v) {
      if (v.size() == 1 && s.drag.angle.size() > 1) v.assign(s.drag.angle.size(), v[0]);
    };
    widen(s.drag.k_d);
    widen(s.drag.k_l);
    try {
      s.drag.validate();
    } catch (const BundleError& e) {
      err("k_d", e.what());
    }
  }
  if (!(s.stack_extent.array() > 0).all()) err("stack_x_mm", "stack extent must be positive");
  if (!(s.volume_fraction >= 0 && s.volume_fraction < 0.5)) err("volume_fraction", "must lie in [0, 0.5)");
  if (!(s.area > 0)) err("bundle_area_mm2", "must be positive");
  if (!(s.rest_length > 0)) err("segment_length_mm", "must be positive");
  if (!(s.bundle_length >= 0.5 * s.rest_length)) err("bundle_length_mm", "shorter than half a segment");
  if (!(s.search_radius > 0)) err("search_radius_mm", "must be positive");
  if (!(s.sigma > 0)) err("sigma_mm", "must be positive");
  if (!(s.contact_cap > 0)) err("contact_cap_MPa", "must be positive");
  if (!(s.g_min > 0)) err("g_min_um", "must be positive");
  if (!(s.cell_size > 0)) err("cell_mm", "must be positive");
  if (s.workers < 1) err("workers", "must be at least 1");
  return s;
}

InteractionDiagnostics interaction(const std::vector<BundleChain>& chains, const VelocityField& field,
                                   double t, double eta, const BundleSettings& settings,
                                   const Box& domain) {
  const Vec3 ext = domain.extent();
  auto cells = [&](int a) { return std::max(1, int(std::ceil(ext[a] / settings.cell_size - 1e-9))); };
  InteractionDiagnostics out{{}, EulerGrid(domain, cells(0), cells(1), cells(2)), 0.0, 0};
  EulerGrid& grid = out.grid;
  const auto centers = grid.centers();
  for (int c = 0; c < grid.size(); ++c) grid.velocity[c] = field(centers[c], t);
  const KdTree index(centers);

  struct Segment {
    Vec3 mid, axis;
    double R;
  };
  std::vector<Segment> segs;
  for (const auto& c : chains)
    for (int s = 0; s < c.segments(); ++s) {
      const Vec3 d = c.nodes[s + 1] - c.nodes[s];
      if (d.norm() == 0.0) continue;
      segs.push_back({0.5 * (c.nodes[s] + c.nodes[s + 1]), d.normalized(), c.radius()});
    }

  const std::size_t n = segs.size();
  std::vector<CellWeights> weights(n);
  out.segment_forces.assign(n, Vec3::Zero());
  const int workers = std::max(1, settings.workers);
  std::vector<std::uint64_t> isolated(workers, 0);
  auto work = [&](int w) {
    std::vector<std::size_t> ids;
    for (std::size_t j = n * w / workers; j < n * (w + 1) / workers; ++j) {
      ids.clear();
      index.radius_query(segs[j].mid, settings.search_radius, ids);
      std::sort(ids.begin(), ids.end());
      weights[j] = gaussian_weights(segs[j].mid, centers, ids, settings.sigma);
      if (ids.empty()) ++isolated[w];
      const Vec3 dv = relative_velocity(field(segs[j].mid, t), weights[j], grid.velocity);
      out.segment_forces[j] = hydrodynamic_force(eta, segs[j].R, settings.drag, dv, segs[j].axis);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& th : threads) th.join();
  }
  for (auto c : isolated) out.isolated_segments += c;
  accumulate_body_force(out.segment_forces, weights, grid, workers);

  Vec3 reaction = Vec3::Zero(), applied = Vec3::Zero();
  double scale = 0.0;
  for (const auto& f : grid.force) reaction += f * grid.cell_volume();
  for (std::size_t j = 0; j < n; ++j)
    if (!weights[j].cells.empty()) {
      applied += out.segment_forces[j];
      scale += out.segment_forces[j].norm();
    }
  out.reaction_residual = scale > 0 ? (reaction + applied).norm() / scale : 0.0;
  return out;
}

}  // namespace smc::bundles

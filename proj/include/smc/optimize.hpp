#pragma once

#include <functional>
#include <vector>

namespace smc::optimize {

struct NelderMeadOptions {
  int max_iterations = 2000;
  /// Convergence when every simplex vertex lies within this relative distance
  /// of the best vertex, coordinate-wise.
  double x_tolerance = 1e-6;
  /// Absolute floor used in the relative test for coordinates near zero.
  double x_floor = 1e-12;
  /// Initial simplex edge, relative to each start coordinate (absolute if the
  /// coordinate is zero).
  double initial_step = 0.05;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex descent (Nelder-Mead with standard coefficients).
/// Returns the best point found; `converged` is false when the iteration cap
/// was hit first.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace smc::optimize

#include "smc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smc::optimize {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = start[i] != 0.0 ? options.initial_step * start[i] : options.initial_step;
    simplex[i + 1][i] += step;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto point = [n](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[k] = a[k] + t * (b[k] - a[k]);
    return r;
  };

  NelderMeadResult result;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const auto& best = simplex[order.front()];

    bool small = true;
    for (std::size_t v = 1; v <= n && small; ++v) {
      const auto& x = simplex[order[v]];
      for (std::size_t k = 0; k < n; ++k) {
        const double scale = std::max(std::abs(best[k]), options.x_floor);
        if (std::abs(x[k] - best[k]) > options.x_tolerance * scale) {
          small = false;
          break;
        }
      }
    }
    if (small) {
      result.converged = true;
      break;
    }

    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[order[v]][k] / double(n);

    const auto reflected = point(centroid, simplex[worst], -1.0);
    const double fr = f(reflected);
    if (fr < values[order.front()]) {
      const auto expanded = point(centroid, simplex[worst], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const auto contracted = outside ? point(centroid, reflected, 0.5) : point(centroid, simplex[worst], 0.5);
    const double fc = f(contracted);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    const std::size_t b = order.front();
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == b) continue;
      simplex[v] = point(simplex[b], simplex[v], 0.5);
      values[v] = f(simplex[v]);
    }
  }
  const auto best = std::min_element(values.begin(), values.end()) - values.begin();
  result.x = simplex[best];
  result.value = values[best];
  result.iterations = it;
  return result;
}

}  // namespace smc::optimize

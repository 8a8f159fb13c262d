#pragma once

#include <functional>
#include <vector>

namespace svshrink {

struct MinimizeOptions {
  double xtol = 1e-6;
  int max_iter = 200;
};

struct MinimizeResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Golden-section search with parabolic interpolation on [lo, hi]; the
/// endpoints are also evaluated and win when strictly better.
MinimizeResult minimize_bounded(const std::function<double(double)> &f, double lo,
                                double hi, const MinimizeOptions &opts = {});

/// Evaluates f on a uniform grid plus the given breakpoints, then refines
/// around the best `refine` candidates with minimize_bounded. Suited to
/// piecewise-smooth objectives with jumps at known locations.
MinimizeResult minimize_scan(const std::function<double(double)> &f, double lo,
                             double hi, const std::vector<double> &breakpoints,
                             int grid_points = 128, int refine = 3,
                             const MinimizeOptions &opts = {});

} // namespace svshrink

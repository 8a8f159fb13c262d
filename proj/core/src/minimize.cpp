#include "svshrink/minimize.hpp"

#include "svshrink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svshrink {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

MinimizeResult minimize_bounded(const std::function<double(double)> &f, double lo,
                                double hi, const MinimizeOptions &opts) {
  if (!(lo <= hi))
    throw ParameterError("minimize_bounded needs lo <= hi");
  MinimizeResult res;
  if (lo == hi) {
    res.x = lo;
    res.fx = f(lo);
    res.evaluations = 1;
    res.converged = true;
    return res;
  }
  const double sqrt_eps = std::sqrt(2.2e-16);
  const double golden_mean = 0.5 * (3.0 - std::sqrt(5.0));
  double a = lo, b = hi;
  double fulc = a + golden_mean * (b - a);
  double nfc = fulc, xf = fulc;
  double rat = 0.0, e = 0.0;
  double x = xf;
  double fx = f(x);
  int num = 1;
  double ffulc = fx, fnfc = fx;
  double xm = 0.5 * (a + b);
  double tol1 = sqrt_eps * std::abs(xf) + opts.xtol / 3.0;
  double tol2 = 2.0 * tol1;
  bool converged = true;

  while (std::abs(xf - xm) > (tol2 - 0.5 * (b - a))) {
    bool golden = true;
    if (std::abs(e) > tol1) {
      golden = false;
      double r = (xf - nfc) * (fx - ffulc);
      double q = (xf - fulc) * (fx - fnfc);
      double p = (xf - fulc) * q - (xf - nfc) * r;
      q = 2.0 * (q - r);
      if (q > 0.0)
        p = -p;
      q = std::abs(q);
      r = e;
      e = rat;
      if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - xf) && p < q * (b - xf)) {
        rat = p / q;
        x = xf + rat;
        if ((x - a) < tol2 || (b - x) < tol2) {
          const double si = sgn(xm - xf) + ((xm - xf) == 0.0 ? 1.0 : 0.0);
          rat = tol1 * si;
        }
      } else {
        golden = true;
      }
    }
    if (golden) {
      e = xf >= xm ? a - xf : b - xf;
      rat = golden_mean * e;
    }
    const double si = sgn(rat) + (rat == 0.0 ? 1.0 : 0.0);
    x = xf + si * std::max(std::abs(rat), tol1);
    const double fu = f(x);
    ++num;
    if (fu <= fx) {
      if (x >= xf)
        a = xf;
      else
        b = xf;
      fulc = nfc;
      ffulc = fnfc;
      nfc = xf;
      fnfc = fx;
      xf = x;
      fx = fu;
    } else {
      if (x < xf)
        a = x;
      else
        b = x;
      if (fu <= fnfc || nfc == xf) {
        fulc = nfc;
        ffulc = fnfc;
        nfc = x;
        fnfc = fu;
      } else if (fu <= ffulc || fulc == xf || fulc == nfc) {
        fulc = x;
        ffulc = fu;
      }
    }
    xm = 0.5 * (a + b);
    tol1 = sqrt_eps * std::abs(xf) + opts.xtol / 3.0;
    tol2 = 2.0 * tol1;
    if (num >= opts.max_iter) {
      converged = false;
      break;
    }
  }

  res.x = xf;
  res.fx = fx;
  for (double end : {lo, hi}) {
    const double fe = f(end);
    ++num;
    if (fe < res.fx) {
      res.x = end;
      res.fx = fe;
    }
  }
  res.evaluations = num;
  res.converged = converged;
  return res;
}

MinimizeResult minimize_scan(const std::function<double(double)> &f, double lo,
                             double hi, const std::vector<double> &breakpoints,
                             int grid_points, int refine, const MinimizeOptions &opts) {
  if (!(lo <= hi))
    throw ParameterError("minimize_scan needs lo <= hi");
  std::vector<double> xs;
  const int g = std::max(grid_points, 2);
  for (int i = 0; i < g; ++i)
    xs.push_back(lo + (hi - lo) * static_cast<double>(i) / (g - 1));
  for (double bp : breakpoints)
    if (bp >= lo && bp <= hi)
      xs.push_back(bp);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<double> fs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    fs[i] = f(xs[i]);
  int evals = static_cast<int>(xs.size());

  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t p, std::size_t q) { return fs[p] < fs[q]; });

  MinimizeResult best;
  best.x = xs[order[0]];
  best.fx = fs[order[0]];
  best.converged = true;
  const std::size_t nref = std::min<std::size_t>(static_cast<std::size_t>(std::max(refine, 0)), order.size());
  for (std::size_t c = 0; c < nref; ++c) {
    const std::size_t i = order[c];
    const double a = xs[i > 0 ? i - 1 : i];
    const double b = xs[i + 1 < xs.size() ? i + 1 : i];
    if (a == b)
      continue;
    const MinimizeResult r = minimize_bounded(f, a, b, opts);
    evals += r.evaluations;
    if (r.fx < best.fx) {
      best.x = r.x;
      best.fx = r.fx;
    }
    best.converged = best.converged && r.converged;
  }
  best.evaluations = evals;
  return best;
}

} // namespace svshrink

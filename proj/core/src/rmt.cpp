#include "svshrink/rmt.hpp"

#include "svshrink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace svshrink::rmt {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_detectable(double sigma, double c) {
  if (!(sigma > std::pow(c, 0.25)))
    throw DomainError("sigma = " + num(sigma) + " must exceed c^(1/4) = " +
                      num(std::pow(c, 0.25)));
}

} // namespace

void require_aspect(double c) {
  if (!(c > 0.0 && c <= 1.0))
    throw DomainError("aspect ratio c = " + num(c) + " must satisfy 0 < c <= 1");
}

SpikedRegime::SpikedRegime(double aspect) : c(aspect) { require_aspect(c); }
double SpikedRegime::c_minus() const { return 1.0 - std::sqrt(c); }
double SpikedRegime::c_plus() const { return 1.0 + std::sqrt(c); }
double SpikedRegime::detection_threshold() const { return std::pow(c, 0.25); }

double rho(double sigma, double c) {
  require_aspect(c);
  if (!(sigma > 0.0))
    throw DomainError("rho needs sigma > 0, got " + num(sigma));
  const double s2 = sigma * sigma;
  return std::sqrt((1.0 + s2) * (c + s2) / s2);
}

double sigma_from_rho(double y, double c) {
  require_aspect(c);
  const double edge = 1.0 + std::sqrt(c);
  if (!(y > edge))
    throw DomainError("y = " + num(y) + " must exceed the bulk edge " + num(edge));
  const double t = y * y - (c + 1.0);
  const double disc = std::max(t * t - 4.0 * c, 0.0);
  // Rationalized form of (t - sqrt(disc)) / (2c) avoids cancellation for large y.
  const double inv_s2 = 2.0 / (t + std::sqrt(disc));
  return 1.0 / std::sqrt(inv_s2);
}

double mp_cauchy(double z, double c) {
  require_aspect(c);
  const double edge2 = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  if (!(z >= edge2 * (1.0 - 1e-15)))
    throw DomainError("z = " + num(z) + " lies inside the bulk support; need z >= " + num(edge2));
  const double t = z - (c + 1.0);
  const double disc = std::max(t * t - 4.0 * c, 0.0);
  const double s = std::sqrt(disc);
  // (z - (1-c) - s) / (2cz) rewritten as 2 / (z - (1-c) + s) via the product of roots.
  const double b = z - (1.0 - c);
  return 2.0 / (b + s);
}

double mp_density(double lambda, double c) {
  require_aspect(c);
  const double lo = (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  const double hi = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  if (!(lambda > lo && lambda < hi))
    return 0.0;
  return std::sqrt((hi - lambda) * (lambda - lo)) / (2.0 * std::numbers::pi * c * lambda);
}

double shrinker_gd(double y, double c) {
  require_aspect(c);
  if (!(y >= 0.0))
    throw DomainError("shrinker_gd needs y >= 0, got " + num(y));
  if (y <= 1.0 + std::sqrt(c))
    return 0.0;
  const double t = y * y - (c + 1.0);
  return std::sqrt(std::max(t * t - 4.0 * c, 0.0)) / y;
}

double shrinker_sigma(double sigma, double c) {
  require_aspect(c);
  if (!(sigma > 0.0))
    throw DomainError("shrinker_sigma needs sigma > 0, got " + num(sigma));
  if (sigma <= std::pow(c, 0.25))
    return 0.0;
  const double s2 = sigma * sigma;
  return (s2 * s2 - c) / (sigma * std::sqrt((1.0 + s2) * (c + s2)));
}

double asymptotic_optimal_weight(double sigma, double c) {
  require_aspect(c);
  require_detectable(sigma, c);
  const double s2 = sigma * sigma;
  const double r = rho(sigma, c);
  return 1.0 - (s2 * (1.0 + c) + 2.0 * c) / (s2 * r * r);
}

double asymptotic_sure(std::span<const double> f, std::span<const double> sigmas, double c) {
  require_aspect(c);
  if (f.size() != sigmas.size())
    throw DimensionError("asymptotic_sure: f and sigmas differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    require_detectable(sigmas[k], c);
    const double s2 = sigmas[k] * sigmas[k];
    const double r = rho(sigmas[k], c);
    total += (f[k] - r) * (f[k] - r) + 2.0 * f[k] * (s2 * (1.0 + c) + 2.0 * c) / (s2 * r);
  }
  return total;
}

double asymptotic_dof(std::span<const double> f, std::span<const double> sigmas, double c) {
  require_aspect(c);
  if (f.size() != sigmas.size())
    throw DimensionError("asymptotic_dof: f and sigmas differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    require_detectable(sigmas[k], c);
    const double s2 = sigmas[k] * sigmas[k];
    total += f[k] / rho(sigmas[k], c) * (1.0 + c + 2.0 * c / s2);
  }
  return total;
}

double hard_threshold_lambda(double c) {
  require_aspect(c);
  return std::sqrt(2.0 * (c + 1.0) + 8.0 * c / ((c + 1.0) + std::sqrt(c * c + 14.0 * c + 1.0)));
}

} // namespace svshrink::rmt

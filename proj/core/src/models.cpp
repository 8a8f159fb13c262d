#include "svshrink/models.hpp"

#include "svshrink/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace svshrink {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

std::string at(Index i, Index j) {
  std::ostringstream os;
  os << " at (" << i << "," << j << ")";
  return os.str();
}

void require_mean(const NoiseModel &model, double x) {
  if (family(model) != Family::Gaussian && !(x > 0.0))
    throw DomainError("mean must be positive for the " +
                      family_name(family(model)) + " family");
}

} // namespace

Family family(const NoiseModel &model) {
  return std::visit(overloaded{[](const Gaussian &) { return Family::Gaussian; },
                               [](const Gamma &) { return Family::Gamma; },
                               [](const Poisson &) { return Family::Poisson; }},
                    model);
}

std::string family_name(Family f) {
  switch (f) {
  case Family::Gaussian:
    return "gaussian";
  case Family::Gamma:
    return "gamma";
  case Family::Poisson:
    return "poisson";
  }
  return "unknown";
}

Family parse_family(const std::string &name) {
  if (name == "gaussian")
    return Family::Gaussian;
  if (name == "gamma")
    return Family::Gamma;
  if (name == "poisson")
    return Family::Poisson;
  throw ParameterError("unknown family '" + name + "'");
}

void validate(const NoiseModel &model) {
  std::visit(overloaded{[](const Gaussian &g) {
                          if (!(g.tau > 0.0) || !std::isfinite(g.tau))
                            throw ParameterError("tau must be positive");
                        },
                        [](const Gamma &g) {
                          if (!(g.L > 0.0) || !std::isfinite(g.L))
                            throw ParameterError("L must be positive");
                        },
                        [](const Poisson &) {}},
             model);
}

double link(const NoiseModel &model, double x) {
  require_mean(model, x);
  return std::visit(overloaded{[x](const Gaussian &g) { return x / (g.tau * g.tau); },
                               [x](const Gamma &g) { return -g.L / x; },
                               [x](const Poisson &) { return std::log(x); }},
                    model);
}

double mean_from_natural(const NoiseModel &model, double theta) {
  return std::visit(overloaded{[theta](const Gaussian &g) { return g.tau * g.tau * theta; },
                               [theta](const Gamma &g) {
                                 if (!(theta < 0.0))
                                   throw DomainError("Gamma natural parameter must be negative");
                                 return -g.L / theta;
                               },
                               [theta](const Poisson &) { return std::exp(theta); }},
                    model);
}

double log_partition(const NoiseModel &model, double theta) {
  return std::visit(
      overloaded{[theta](const Gaussian &g) { return 0.5 * g.tau * g.tau * theta * theta; },
                 [theta](const Gamma &g) {
                   if (!(theta < 0.0))
                     throw DomainError("Gamma natural parameter must be negative");
                   return g.L * std::log(-g.L / theta);
                 },
                 [theta](const Poisson &) { return std::exp(theta); }},
      model);
}

double log_partition_d1(const NoiseModel &model, double theta) {
  return mean_from_natural(model, theta);
}

double log_partition_d2(const NoiseModel &model, double theta) {
  return std::visit(overloaded{[](const Gaussian &g) { return g.tau * g.tau; },
                               [theta](const Gamma &g) {
                                 if (!(theta < 0.0))
                                   throw DomainError("Gamma natural parameter must be negative");
                                 return g.L / (theta * theta);
                               },
                               [theta](const Poisson &) { return std::exp(theta); }},
                    model);
}

double variance(const NoiseModel &model, double x) {
  require_mean(model, x);
  return std::visit(overloaded{[](const Gaussian &g) { return g.tau * g.tau; },
                               [x](const Gamma &g) { return x * x / g.L; },
                               [x](const Poisson &) { return x; }},
                    model);
}

double log_density(const NoiseModel &model, double y, double x) {
  return std::visit(
      overloaded{[&](const Gaussian &g) {
                   const double r = y - x;
                   return -0.5 * std::log(2.0 * std::numbers::pi * g.tau * g.tau) -
                          r * r / (2.0 * g.tau * g.tau);
                 },
                 [&](const Gamma &g) {
                   if (!(y > 0.0) || !(x > 0.0))
                     throw DomainError("Gamma density needs positive y and x");
                   const double L = g.L;
                   return L * std::log(L) + (L - 1.0) * std::log(y) - std::lgamma(L) -
                          L * std::log(x) - L * y / x;
                 },
                 [&](const Poisson &) {
                   if (!(y >= 0.0) || std::floor(y) != y || !(x > 0.0))
                     throw DomainError("Poisson pmf needs integer y >= 0 and x > 0");
                   const double ylogx = y == 0.0 ? 0.0 : y * std::log(x);
                   return ylogx - x - std::lgamma(y + 1.0);
                 }},
      model);
}

double log_likelihood(const NoiseModel &model, const Matrix &Y, const Matrix &X) {
  if (Y.rows() != X.rows() || Y.cols() != X.cols())
    throw DimensionError("log_likelihood shape mismatch");
  double total = 0.0;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      try {
        total += log_density(model, Y(i, j), X(i, j));
      } catch (const DomainError &e) {
        throw DomainError(std::string(e.what()) + at(i, j));
      }
    }
  return total;
}

double sample_poisson(double mean, Rng &rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw DomainError("Poisson mean must be finite and nonnegative");
  if (mean == 0.0)
    return 0.0;
  if (mean < 10.0) {
    const double u = uniform01(rng);
    double p = std::exp(-mean);
    double cdf = p;
    double k = 0.0;
    while (u >= cdf) {
      k += 1.0;
      p *= mean / k;
      const double next = cdf + p;
      if (next == cdf)
        break;
      cdf = next;
    }
    return k;
  }
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    const double U = uniform01(rng) - 0.5;
    const double V = uniform01(rng);
    const double us = 0.5 - std::abs(U);
    const double k = std::floor((2.0 * a / us + b) * U + mean + 0.43);
    if (us >= 0.07 && V <= vr)
      return k;
    if (k < 0.0 || (us < 0.013 && V > us))
      continue;
    if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return k;
  }
}

Matrix sample(const NoiseModel &model, const Matrix &X, Rng &rng) {
  validate(model);
  Matrix Y(X.rows(), X.cols());
  std::visit(overloaded{[&](const Gaussian &g) {
                          std::normal_distribution<double> nd(0.0, g.tau);
                          for (Index j = 0; j < X.cols(); ++j)
                            for (Index i = 0; i < X.rows(); ++i)
                              Y(i, j) = X(i, j) + nd(rng);
                        },
                        [&](const Gamma &g) {
                          for (Index j = 0; j < X.cols(); ++j)
                            for (Index i = 0; i < X.rows(); ++i) {
                              if (!(X(i, j) > 0.0))
                                throw DomainError("Gamma mean must be positive" + at(i, j));
                              std::gamma_distribution<double> gd(g.L, X(i, j) / g.L);
                              Y(i, j) = gd(rng);
                            }
                        },
                        [&](const Poisson &) {
                          for (Index j = 0; j < X.cols(); ++j)
                            for (Index i = 0; i < X.rows(); ++i) {
                              if (!(X(i, j) >= 0.0))
                                throw DomainError("Poisson mean must be nonnegative" + at(i, j));
                              Y(i, j) = sample_poisson(X(i, j), rng);
                            }
                        }},
             model);
  return Y;
}

FamilyTerms family_terms(const NoiseModel &model, double y, bool second) {
  return std::visit(
      overloaded{[&](const Gaussian &g) {
                   const double t2 = g.tau * g.tau;
                   return FamilyTerms{-y / t2, y * y / (t2 * t2) - 1.0 / t2};
                 },
                 [&](const Gamma &g) {
                   if (!(y > 0.0))
                     throw DomainError("Gamma terms need y > 0");
                   if (second && !(g.L > 2.0))
                     throw ParameterError("second h-ratio of the Gamma family needs L > 2");
                   const double L = g.L;
                   return FamilyTerms{(L - 1.0) / y, (L - 1.0) * (L - 2.0) / (y * y)};
                 },
                 [&](const Poisson &) -> FamilyTerms {
                   throw UnsupportedFamilyError("h-ratios are defined for continuous families only");
                 }},
      model);
}

void require_support(const NoiseModel &model, const Matrix &Y) {
  require_finite(Y, "observation");
  const Family f = family(model);
  if (f == Family::Gaussian)
    return;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      const double y = Y(i, j);
      if (f == Family::Gamma && !(y > 0.0))
        throw DomainError("Gamma observations must be positive" + at(i, j));
      if (f == Family::Poisson && (!(y >= 0.0) || std::floor(y) != y))
        throw DomainError("Poisson observations must be nonnegative integers" + at(i, j));
    }
}

} // namespace svshrink

#include "svshrink/metrics.hpp"

#include "svshrink/errors.hpp"

#include <cmath>
#include <sstream>

namespace svshrink {

namespace {

void require_same_shape(const Matrix &A, const Matrix &B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw DimensionError("metric operands differ in shape");
}

[[noreturn]] void nonpositive(const char *what, Index i, Index j) {
  std::ostringstream os;
  os << what << " must be positive at (" << i << "," << j << ")";
  throw DomainError(os.str());
}

double gamma_shape(const NoiseModel &model) {
  if (const auto *g = std::get_if<Gamma>(&model))
    return g->L;
  throw UnsupportedFamilyError("metric requires the Gamma family");
}

} // namespace

std::string to_string(MetricKind k) {
  switch (k) {
  case MetricKind::NMSE:
    return "NMSE";
  case MetricKind::KLS_gamma:
    return "KLS_gamma";
  case MetricKind::KLA_poisson:
    return "KLA_poisson";
  case MetricKind::MSE_eta_gamma:
    return "MSE_eta_gamma";
  }
  return "unknown";
}

MetricKind parse_metric_kind(const std::string &name) {
  for (MetricKind k : {MetricKind::NMSE, MetricKind::KLS_gamma, MetricKind::KLA_poisson,
                       MetricKind::MSE_eta_gamma})
    if (name == to_string(k))
      return k;
  throw ParameterError("unknown metric '" + name + "'");
}

double squared_error(const Matrix &Xhat, const Matrix &X) {
  require_same_shape(Xhat, X);
  return (Xhat - X).squaredNorm();
}

double nmse(const Matrix &Xhat, const Matrix &X) {
  const double denom = X.squaredNorm();
  if (!(denom > 0.0))
    throw DomainError("NMSE undefined for a zero signal");
  return squared_error(Xhat, X) / denom;
}

double kls_gamma(const Matrix &Xhat, const Matrix &X, double L) {
  require_same_shape(Xhat, X);
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) {
      if (!(X(i, j) > 0.0))
        nonpositive("signal", i, j);
      if (!(Xhat(i, j) > 0.0))
        nonpositive("estimate", i, j);
      const double r = Xhat(i, j) / X(i, j);
      total += r - std::log(r) - 1.0;
    }
  return L * total;
}

double kla_poisson(const Matrix &Xhat, const Matrix &X) {
  require_same_shape(Xhat, X);
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) {
      const double x = X(i, j), xh = Xhat(i, j);
      if (x < 0.0)
        throw DomainError("Poisson signal must be nonnegative");
      if (x == 0.0) {
        if (xh < 0.0)
          throw DomainError("Poisson estimate must be nonnegative");
        total += xh;
        continue;
      }
      if (!(xh > 0.0))
        nonpositive("estimate", i, j);
      total += xh - x - x * std::log(xh / x);
    }
  return total;
}

double mse_eta_gamma(const Matrix &Xhat, const Matrix &X, double L) {
  require_same_shape(Xhat, X);
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) {
      if (!(X(i, j) > 0.0))
        nonpositive("signal", i, j);
      if (!(Xhat(i, j) > 0.0))
        nonpositive("estimate", i, j);
      const double d = (X(i, j) - Xhat(i, j)) / (X(i, j) * Xhat(i, j));
      total += d * d;
    }
  return L * L * total;
}

double metric(MetricKind kind, const Matrix &Xhat, const Matrix &X, const NoiseModel &model) {
  switch (kind) {
  case MetricKind::NMSE:
    return nmse(Xhat, X);
  case MetricKind::KLS_gamma:
    return kls_gamma(Xhat, X, gamma_shape(model));
  case MetricKind::KLA_poisson:
    return kla_poisson(Xhat, X);
  case MetricKind::MSE_eta_gamma:
    return mse_eta_gamma(Xhat, X, gamma_shape(model));
  }
  throw ParameterError("unknown metric");
}

} // namespace svshrink

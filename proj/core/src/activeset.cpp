#include "svshrink/activeset.hpp"

#include "svshrink/errors.hpp"
#include "svshrink/rmt.hpp"

#include <algorithm>
#include <cmath>

namespace svshrink {

namespace {

double edge(const Svd &f, double tau) {
  if (!(tau > 0.0))
    throw ParameterError("tau must be positive");
  return tau * (std::sqrt(static_cast<double>(f.cols())) +
                std::sqrt(static_cast<double>(f.rows())));
}

std::vector<std::size_t> normalized(std::vector<std::size_t> s, std::size_t k) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  for (std::size_t a : s)
    if (a >= k)
      throw ParameterError("active index out of range");
  return s;
}

double neg2_loglik(const Matrix &Y, const Matrix &Xs, const NoiseModel &model,
                   std::optional<double> epsilon) {
  if (family(model) != Family::Gaussian && epsilon)
    return -2.0 * log_likelihood(model, Y, Xs.cwiseMax(*epsilon));
  return -2.0 * log_likelihood(model, Y, Xs);
}

} // namespace

std::string to_string(ActiveSetMethod m) {
  return m == ActiveSetMethod::GaussianClosedForm ? "GaussianClosedForm" : "Greedy";
}

double aic_penalty(Index n, Index m) {
  const double a = std::sqrt(static_cast<double>(m)) + std::sqrt(static_cast<double>(n));
  return 0.5 * a * a;
}

double aic(const Matrix &Y, const Svd &f, const NoiseModel &model,
           const std::vector<std::size_t> &s, std::optional<double> epsilon) {
  const auto set = normalized(s, static_cast<std::size_t>(f.size()));
  Vector values = Vector::Zero(f.size());
  for (std::size_t a : set)
    values(static_cast<Index>(a)) = f.sigma(static_cast<Index>(a));
  const Matrix Xs = spectral_reconstruct(f, values);
  return neg2_loglik(Y, Xs, model, epsilon) +
         2.0 * static_cast<double>(set.size()) * aic_penalty(Y.rows(), Y.cols());
}

double aic(const Matrix &Y, const NoiseModel &model, const std::vector<std::size_t> &s,
           std::optional<double> epsilon) {
  return aic(Y, svd(Y), model, s, epsilon);
}

ActiveSetReport active_set_gaussian(const Svd &f, double tau) {
  ActiveSetReport r;
  r.method = ActiveSetMethod::GaussianClosedForm;
  r.penalty = aic_penalty(f.rows(), f.cols());
  const double c = edge(f, tau);
  for (Index k = 0; k < f.size(); ++k)
    if (f.sigma(k) > c)
      r.selected.push_back(static_cast<std::size_t>(k));
  // AIC of the selected set up to the additive constant nm log(2 pi tau^2).
  double resid = 0.0;
  for (Index k = static_cast<Index>(r.selected.size()); k < f.size(); ++k)
    resid += f.sigma(k) * f.sigma(k);
  r.aic_values.push_back(
      {r.selected, std::nullopt, resid / (tau * tau) + 2.0 * static_cast<double>(r.selected.size()) * r.penalty});
  return r;
}

ActiveSetReport active_set_greedy(const Matrix &Y, const Svd &f, const NoiseModel &model,
                                  std::optional<double> epsilon) {
  validate(model);
  require_support(model, Y);
  ActiveSetReport r;
  r.method = ActiveSetMethod::Greedy;
  r.penalty = aic_penalty(Y.rows(), Y.cols());
  const auto k = static_cast<std::size_t>(f.size());
  std::vector<std::size_t> full = leading_set(k);
  const Matrix Xfull = spectral_reconstruct(f, f.sigma);
  const double base = neg2_loglik(Y, Xfull, model, epsilon);
  const double full_aic = base + 2.0 * static_cast<double>(k) * r.penalty;
  r.aic_values.push_back({full, std::nullopt, full_aic});
  for (std::size_t a = 0; a < k; ++a) {
    const auto c = static_cast<Index>(a);
    const Matrix Xs = Xfull - f.sigma(c) * f.U.col(c) * f.V.col(c).transpose();
    const double value = neg2_loglik(Y, Xs, model, epsilon) +
                         2.0 * static_cast<double>(k - 1) * r.penalty;
    r.aic_values.push_back({{}, a, value});
    if (!(value <= full_aic))
      r.selected.push_back(a);
  }
  return r;
}

ActiveSetReport active_set_greedy(const Matrix &Y, const NoiseModel &model,
                                  std::optional<double> epsilon) {
  return active_set_greedy(Y, svd(Y), model, epsilon);
}

std::size_t rank_bulk(const Svd &f, double tau) {
  const double c = edge(f, tau);
  std::size_t r = 0;
  for (Index k = 0; k < f.size(); ++k)
    if (f.sigma(k) > c)
      r = static_cast<std::size_t>(k) + 1;
  return r;
}

std::size_t rank_hard_threshold(const Svd &f, double c, double scale) {
  if (!(scale > 0.0))
    throw ParameterError("scale must be positive");
  const double t = rmt::hard_threshold_lambda(c) * scale;
  std::size_t r = 0;
  for (Index k = 0; k < f.size(); ++k)
    if (f.sigma(k) > t)
      r = static_cast<std::size_t>(k) + 1;
  return r;
}

std::size_t rank_effective(const std::vector<double> &sigmas, double c) {
  rmt::require_aspect(c);
  const double t = std::pow(c, 0.25);
  std::size_t r = 0;
  for (std::size_t k = 0; k < sigmas.size(); ++k)
    if (sigmas[k] > t)
      r = k + 1;
  return r;
}

std::vector<std::size_t> leading_set(std::size_t r) {
  std::vector<std::size_t> s(r);
  for (std::size_t i = 0; i < r; ++i)
    s[i] = i;
  return s;
}

} // namespace svshrink

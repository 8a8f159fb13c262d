#pragma once

#include <span>

namespace svshrink::rmt {

/// Aspect ratio c = n/m in (0,1] with bulk edges 1 -/+ sqrt(c).
struct SpikedRegime {
  double c = 1.0;

  explicit SpikedRegime(double aspect);
  double c_minus() const;
  double c_plus() const;
  /// c^{1/4}: spikes above it separate from the bulk.
  double detection_threshold() const;
};

/// Throws DomainError unless 0 < c <= 1.
void require_aspect(double c);

/// Limit location of the empirical singular value of a spike sigma.
double rho(double sigma, double c);
/// Inverse of rho above the bulk edge.
double sigma_from_rho(double y, double c);
/// Cauchy transform of the Marchenko-Pastur law for z >= (1+sqrt(c))^2.
double mp_cauchy(double z, double c);
/// Marchenko-Pastur density of squared singular values.
double mp_density(double lambda, double c);

/// Optimal shrinker in terms of the observed singular value y.
double shrinker_gd(double y, double c);
/// Optimal shrinker in terms of the true spike sigma.
double shrinker_sigma(double sigma, double c);
/// w* with w* rho(sigma) = shrinker_sigma(sigma).
double asymptotic_optimal_weight(double sigma, double c);

/// Limit of the f-dependent SURE terms for shrunk values f_k at rho(sigma_k).
double asymptotic_sure(std::span<const double> f, std::span<const double> sigmas, double c);
/// Limit of DOF/m.
double asymptotic_dof(std::span<const double> f, std::span<const double> sigmas, double c);

/// Optimal hard threshold lambda(c) for singular values at unit noise scale.
double hard_threshold_lambda(double c);

} // namespace svshrink::rmt

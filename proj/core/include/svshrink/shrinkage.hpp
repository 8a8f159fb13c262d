#pragma once

#include "svshrink/linalg.hpp"
#include "svshrink/metrics.hpp"
#include "svshrink/minimize.hpp"
#include "svshrink/models.hpp"
#include "svshrink/risk.hpp"
#include "svshrink/spectral.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace svshrink {

/// Positivity floor applied to Gamma and Poisson estimates.
inline constexpr double kDefaultEpsilon = 1e-6;

struct PcaTruncate {
  std::size_t rank = 0;
};
struct SoftThreshold {
  double lambda = 0.0;
};
struct Weighted {
  ShrinkagePlan plan;
};
using EstimatorKind = std::variant<PcaTruncate, SoftThreshold, Weighted>;

struct EstimatorSpec {
  EstimatorKind kind = PcaTruncate{};
  NoiseModel model = Gaussian{};
  std::optional<double> clamp_floor;

  /// k is the number of singular values (min(n,m)).
  void validate(std::size_t k) const;
  SpectralEstimator estimator() const;
};

/// No floor for Gaussian, kDefaultEpsilon for Gamma and Poisson.
std::optional<double> default_clamp(const NoiseModel &model);

Matrix apply(const EstimatorSpec &spec, const Svd &f);

/// Closed-form SURE minimizer per coordinate, clipped to [0,1]; zero outside
/// the active set.
ShrinkagePlan weights_gaussian(const Svd &f, double tau, const std::vector<std::size_t> &active);

/// Closed-form SUKLS minimizer for a rank-1 Gamma estimate.
double weight1_gamma_sukls(const Matrix &Y, const Svd &f, double L, bool active = true);
/// min(1, sum Y / sum Xhat1).
double weight1_poisson_pukla(const Matrix &Y, const Svd &f, bool active = true);
/// Exact PURE minimizer for a rank-1 Poisson estimate; needs n*m <= kExactSizeLimit.
double weight1_poisson_pure_exact(const Matrix &Y, const Svd &f, bool active = true);

/// Throws UnsupportedFamilyError unless the objective matches the family:
/// Gaussian/SURE, Gamma/{GSURE,SUKLS}, Poisson/{PURE,PUKLA}.
void require_objective(const NoiseModel &model, RiskKind objective);

enum class FitMode { Exact, Approx };

struct FitOptions {
  /// Number of sequential sweeps over the coordinates.
  int passes = 1;
  /// Seed of the fixed direction used by Monte-Carlo objectives.
  std::uint64_t seed = 0;
  /// Leave-one-count-out evaluation for PURE/PUKLA (Exact) or its
  /// first-order approximation (Approx).
  FitMode mode = FitMode::Approx;
  MinimizeOptions minimize;
};

/// Coordinate-wise bounded minimization of the objective over w in [0,1]^k,
/// starting from w = e_1 and holding inactive weights at zero.
ShrinkagePlan optimize_weights_greedy(const Matrix &Y, const Svd &f, const NoiseModel &model,
                                      RiskKind objective,
                                      const std::vector<std::size_t> &active,
                                      std::optional<double> epsilon,
                                      const FitOptions &opts = {});
ShrinkagePlan optimize_weights_greedy(const Matrix &Y, const NoiseModel &model,
                                      RiskKind objective,
                                      const std::vector<std::size_t> &active,
                                      std::optional<double> epsilon,
                                      const FitOptions &opts = {});

/// Threshold in [0, s_1] minimizing the objective.
double soft_threshold_fit(const Matrix &Y, const Svd &f, const NoiseModel &model,
                          RiskKind objective, std::optional<double> epsilon,
                          const FitOptions &opts = {});
double soft_threshold_fit(const Matrix &Y, const NoiseModel &model, RiskKind objective,
                          std::optional<double> epsilon, const FitOptions &opts = {});

struct OracleWeights {
  /// Weights clipped to [0,1], all indices active.
  ShrinkagePlan plan;
  /// u_k^t X v_k / s_k.
  std::vector<double> raw;
  /// u_k^t X v_k.
  std::vector<double> oracle_sigma;
};

OracleWeights oracle_weights(const Matrix &X, const Svd &f);

/// Threshold in [0, s_1] minimizing the loss against the known X. The
/// default loss is squared error for Gaussian, KLS for Gamma and KLA for
/// Poisson.
double oracle_soft_threshold(const Matrix &X, const Matrix &Y, const NoiseModel &model,
                             std::optional<double> epsilon,
                             std::optional<MetricKind> loss = std::nullopt);

} // namespace svshrink

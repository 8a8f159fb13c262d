#pragma once

#include "svshrink/linalg.hpp"
#include "svshrink/models.hpp"
#include "svshrink/rng.hpp"
#include "svshrink/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svshrink {

enum class RiskKind { SURE, GSURE, SUKLS, PURE, PUKLA };
enum class DivergenceKind { ClosedForm, MonteCarlo, Exact };

std::string to_string(RiskKind k);
std::string to_string(DivergenceKind k);
RiskKind parse_risk_kind(const std::string &name);

struct RiskEstimate {
  double value = 0.0;
  RiskKind kind = RiskKind::SURE;
  DivergenceKind divergence_kind = DivergenceKind::ClosedForm;
  std::optional<int> samples;
  std::optional<double> std_error;
  /// Additive constant separating the estimate from the risk it targets.
  std::string offset_note;
};

struct DivergenceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// |m-n| sum f_k/s_k + sum f'_k + 2 sum_k f_k sum_{l!=k} s_k/(s_k^2 - s_l^2).
double divergence_closed_form(const Svd &f, const Vector &values, const Vector &derivs);

/// Mean of sum(delta .* J delta) over Rademacher directions; J delta by
/// central finite differences with step h.
DivergenceEstimate mc_divergence(const MatrixMap &f, const Matrix &Y, int samples, Rng &rng,
                                 double h = 1e-6);
/// Same with the exact spectral Jacobian-vector product (clamp masked).
DivergenceEstimate mc_divergence(const SpectralEstimator &f, const Matrix &Y, int samples,
                                 Rng &rng);
DivergenceEstimate mc_divergence(const SpectralEstimator &f,
                                 const SpectralEstimator::Evaluation &e, int samples, Rng &rng);

/// Weighted Jacobian-diagonal aggregate sum_ij c_ij dF_ij/dY_ij estimated by
/// sum c .* delta .* J delta averaged over Rademacher directions.
DivergenceEstimate mc_weighted_divergence(const SpectralEstimator &f,
                                          const SpectralEstimator::Evaluation &e,
                                          const Matrix &weights, int samples, Rng &rng);

/// -nm tau^2 + ||estimate - Y||^2 + 2 tau^2 div.
RiskEstimate sure_gaussian(const Matrix &Y, const Matrix &estimate, double tau,
                           double divergence,
                           DivergenceKind kind = DivergenceKind::ClosedForm);
/// Closed-form divergence for an unclamped spectral estimator.
RiskEstimate sure_gaussian(const Matrix &Y, const SpectralEstimator &f, double tau);

/// sum L^2/f^2 - 2L(L-1)/(Y f) + (L-1)(L-2)/Y^2 + 2 div_theta, where
/// div_theta = sum_ij (L/f_ij^2) dF_ij/dY_ij.
RiskEstimate gsure_gamma(const Matrix &Y, const Matrix &estimate, double div_theta, double L,
                         DivergenceKind kind = DivergenceKind::MonteCarlo,
                         std::optional<int> samples = std::nullopt,
                         std::optional<double> std_error = std::nullopt);
RiskEstimate gsure_gamma(const Matrix &Y, const SpectralEstimator &f, double L, int samples,
                         Rng &rng);

/// sum[(L-1) f/Y - L log f] - Lmn + div.
RiskEstimate sukls_gamma(const Matrix &Y, const Matrix &estimate, double L, double divergence,
                         DivergenceKind kind = DivergenceKind::ClosedForm);
/// Closed-form divergence when no entry is clamped, masked Monte Carlo otherwise.
RiskEstimate sukls_gamma(const Matrix &Y, const SpectralEstimator &f, double L, int samples,
                         Rng &rng);

/// Continuous-family GSURE from the natural-parameter estimate and its divergence.
RiskEstimate gsure_generic(const NoiseModel &model, const Matrix &Y, const Matrix &theta_hat,
                           double div_theta);
/// Continuous-family SUKLS from the mean estimate and its divergence.
RiskEstimate sukls_generic(const NoiseModel &model, const Matrix &Y, const Matrix &estimate,
                           double divergence);

struct ExactMode {};
struct ApproxMode {
  int samples = 1;
  std::uint64_t seed = 0;
};

/// Largest n*m for exact leave-one-count-out evaluation.
inline constexpr std::size_t kExactSizeLimit = 10000;

/// D_ij = f_ij(Y - e_i e_j^t) for Y_ij > 0; entries with Y_ij = 0 are left at 0.
Matrix downdated_exact(const Matrix &Y, const MatrixMap &f);

/// ||F(Y)||^2 - 2 sum Y_ij D_ij.
double pure_from_downdated(const Matrix &Y, const Matrix &estimate, const Matrix &downdated);
/// sum F_ij(Y) - sum_{Y_ij > 0} Y_ij log D_ij.
double pukla_from_downdated(const Matrix &Y, const Matrix &estimate, const Matrix &downdated);

/// SVDs of every downdated matrix Y - e_i e_j^t with Y_ij > 0, kept as
/// singular values and the products u_ki v_kj, so that the downdated value of
/// any spectral estimator is sum_k f_k(s_k) u_ki v_kj.
class DowndatedSpectra {
public:
  explicit DowndatedSpectra(const Matrix &Y);

  /// D_ij for the estimator (clamped if it has a floor); 0 where Y_ij = 0.
  Matrix apply(const SpectralEstimator &f) const;
  /// D_ij for f_k = s_k restricted to index k (unclamped).
  Matrix component(Index k) const;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> entries_; // column-major linear index
  Matrix sigma_;               // one column per entry
  Matrix products_;            // u_ki v_kj, one column per entry
};

RiskEstimate pure_poisson(const Matrix &Y, const MatrixMap &f, ExactMode);
RiskEstimate pure_poisson(const Matrix &Y, const SpectralEstimator &f, ExactMode);
RiskEstimate pure_poisson(const Matrix &Y, const SpectralEstimator &f, const ApproxMode &mode);
RiskEstimate pukla_poisson(const Matrix &Y, const MatrixMap &f, ExactMode);
RiskEstimate pukla_poisson(const Matrix &Y, const SpectralEstimator &f, ExactMode);
RiskEstimate pukla_poisson(const Matrix &Y, const SpectralEstimator &f, const ApproxMode &mode);

/// First-order downdate F(Y) - delta .* J delta for one direction; for
/// PUKLA the result is floored at the estimator's clamp (or left as is).
Matrix downdated_first_order(const Matrix &estimate, const Matrix &delta, const Matrix &jvp);

} // namespace svshrink

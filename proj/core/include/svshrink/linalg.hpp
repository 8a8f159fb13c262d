#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace svshrink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thin SVD Y = U diag(sigma) V^t with descending sigma.
/// Sign convention: the largest-magnitude entry of each column of U is
/// positive (lowest row index on ties); V columns are flipped jointly.
struct Svd {
  Vector sigma;
  Matrix U;
  Matrix V;

  Index rows() const { return U.rows(); }
  Index cols() const { return V.rows(); }
  Index size() const { return sigma.size(); }
};

/// Active set, per-index weights and optional positivity floor.
/// Indices are zero-based; weights has one entry per singular value and is
/// zero outside the active set.
struct ShrinkagePlan {
  std::vector<std::size_t> active;
  std::vector<double> weights;
  std::optional<double> clamp_floor;

  /// All indices active with unit weight.
  static ShrinkagePlan identity(std::size_t k);
  /// No active index.
  static ShrinkagePlan empty(std::size_t k);

  /// Throws ParameterError / DimensionError when invariants fail.
  void validate(std::size_t k) const;
  bool is_active(std::size_t k) const;
};

/// Relative tolerance on |s_k^2 - s_l^2| / s_1^2 below which the spectral
/// derivative formulas are considered singular.
inline constexpr double kDegeneracyTolerance = 1e-12;

Svd svd(const Matrix &Y);
Vector singular_values(const Matrix &Y);

/// Throws DomainError naming the first non-finite entry.
void require_finite(const Matrix &Y, const char *what = "matrix");

/// sum_k f_k u_k v_k^t, optionally clamped entrywise at `floor`.
Matrix spectral_reconstruct(const Svd &f, const Vector &values,
                            std::optional<double> floor = std::nullopt);

Matrix reconstruct(const Svd &f, const ShrinkagePlan &plan);

/// Spectral values f_k = w_k sigma_k for a plan (zero outside the active set).
Vector plan_values(const Svd &f, const ShrinkagePlan &plan);
/// Derivatives f'_k = w_k for a plan.
Vector plan_derivatives(const Svd &f, const ShrinkagePlan &plan);

/// Throws DegeneracyError if any pair (k,l) with f_k or f_l nonzero has
/// |s_k^2 - s_l^2| < kDegeneracyTolerance * s_1^2.
void check_distinct(const Vector &sigma, const Vector &values);

/// Jacobian-vector product of the spectral map Y -> sum_k f_k(s_k) u_k v_k^t
/// in direction delta.
Matrix directional_derivative(const Svd &f, const Vector &values,
                              const Vector &derivs, const Matrix &delta);

/// Directional derivative with the direction fixed, so repeated evaluation
/// for different spectral functions reuses the projections of delta.
class DirectionalDerivative {
public:
  DirectionalDerivative(const Svd &f, const Matrix &delta);

  Matrix operator()(const Vector &values, const Vector &derivs) const;
  const Matrix &delta() const { return delta_; }

private:
  const Svd *svd_;
  Matrix delta_;
  Matrix core_;   // U^t delta V
  Matrix left_;   // (I - U U^t) delta V
  Matrix right_;  // U^t delta (I - V V^t)
};

/// Zero out entries of `jvp` where the unclamped estimate is below `floor`.
void apply_clamp_mask(const Matrix &unclamped, double floor, Matrix &jvp);

} // namespace svshrink

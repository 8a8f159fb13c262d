#pragma once

#include "svshrink/linalg.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace svshrink {

/// Generic matrix-to-matrix estimator.
using MatrixMap = std::function<Matrix(const Matrix &)>;

/// Spectral estimator Y -> sum_k f_k(s_k) u_k v_k^t, optionally clamped
/// entrywise at a positive floor.
class SpectralEstimator {
public:
  /// Fills values f_k(s_k) and derivatives f'_k(s_k) from the singular values.
  using Rule = std::function<void(const Vector &sigma, Vector &values, Vector &derivs)>;

  explicit SpectralEstimator(Rule rule, std::optional<double> clamp_floor = std::nullopt);

  static SpectralEstimator identity();
  /// f_k = w_k s_k; indices beyond w.size() get weight 0.
  static SpectralEstimator weighted(std::vector<double> weights,
                                    std::optional<double> clamp_floor = std::nullopt);
  /// f_k = (s_k - lambda)_+.
  static SpectralEstimator soft_threshold(double lambda,
                                          std::optional<double> clamp_floor = std::nullopt);
  /// f_k = s_k for k < rank, 0 otherwise.
  static SpectralEstimator truncate(std::size_t rank,
                                    std::optional<double> clamp_floor = std::nullopt);

  struct Evaluation {
    Svd svd;
    Vector values;
    Vector derivs;
    Matrix unclamped;
    Matrix estimate;
    /// True when at least one entry sits on the clamp floor.
    bool clamped = false;
  };

  Evaluation evaluate(const Matrix &Y) const;
  Evaluation evaluate(Svd svd) const;
  Matrix apply(const Matrix &Y) const;
  /// Jacobian-vector product, with the clamp treated as identity above the
  /// floor and constant below.
  Matrix jvp(const Evaluation &e, const Matrix &delta) const;
  Matrix jvp(const Evaluation &e, const DirectionalDerivative &dd) const;

  /// Applies the rule to a singular-value vector.
  void spectrum(const Vector &sigma, Vector &values, Vector &derivs) const;

  std::optional<double> clamp_floor() const { return clamp_; }
  MatrixMap as_map() const;

private:
  Rule rule_;
  std::optional<double> clamp_;
};

} // namespace svshrink

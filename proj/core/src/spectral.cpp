#include "svshrink/spectral.hpp"

#include "svshrink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace svshrink {

SpectralEstimator::SpectralEstimator(Rule rule, std::optional<double> clamp_floor)
    : rule_(std::move(rule)), clamp_(clamp_floor) {
  if (clamp_ && !(*clamp_ > 0.0))
    throw ParameterError("clamp floor must be positive");
}

SpectralEstimator SpectralEstimator::identity() {
  return SpectralEstimator([](const Vector &s, Vector &v, Vector &d) {
    v = s;
    d = Vector::Ones(s.size());
  });
}

SpectralEstimator SpectralEstimator::weighted(std::vector<double> weights,
                                              std::optional<double> clamp_floor) {
  for (double w : weights)
    if (!std::isfinite(w))
      throw ParameterError("weights must be finite");
  return SpectralEstimator(
      [w = std::move(weights)](const Vector &s, Vector &v, Vector &d) {
        v = Vector::Zero(s.size());
        d = Vector::Zero(s.size());
        const Index k = std::min<Index>(s.size(), static_cast<Index>(w.size()));
        for (Index i = 0; i < k; ++i) {
          v(i) = w[static_cast<std::size_t>(i)] * s(i);
          d(i) = w[static_cast<std::size_t>(i)];
        }
      },
      clamp_floor);
}

SpectralEstimator SpectralEstimator::soft_threshold(double lambda,
                                                    std::optional<double> clamp_floor) {
  if (!(lambda >= 0.0))
    throw ParameterError("soft threshold must be nonnegative");
  return SpectralEstimator(
      [lambda](const Vector &s, Vector &v, Vector &d) {
        v.resize(s.size());
        d.resize(s.size());
        for (Index i = 0; i < s.size(); ++i) {
          const bool on = s(i) > lambda;
          v(i) = on ? s(i) - lambda : 0.0;
          d(i) = on ? 1.0 : 0.0;
        }
      },
      clamp_floor);
}

SpectralEstimator SpectralEstimator::truncate(std::size_t rank,
                                              std::optional<double> clamp_floor) {
  return SpectralEstimator(
      [rank](const Vector &s, Vector &v, Vector &d) {
        v = Vector::Zero(s.size());
        d = Vector::Zero(s.size());
        const Index r = std::min<Index>(s.size(), static_cast<Index>(rank));
        v.head(r) = s.head(r);
        d.head(r).setOnes();
      },
      clamp_floor);
}

SpectralEstimator::Evaluation SpectralEstimator::evaluate(const Matrix &Y) const {
  return evaluate(svd(Y));
}

SpectralEstimator::Evaluation SpectralEstimator::evaluate(Svd f) const {
  Evaluation e;
  e.svd = std::move(f);
  spectrum(e.svd.sigma, e.values, e.derivs);
  e.unclamped = spectral_reconstruct(e.svd, e.values);
  if (clamp_) {
    e.estimate = e.unclamped.cwiseMax(*clamp_);
    e.clamped = (e.unclamped.array() < *clamp_).any();
  } else {
    e.estimate = e.unclamped;
  }
  return e;
}

void SpectralEstimator::spectrum(const Vector &sigma, Vector &values, Vector &derivs) const {
  rule_(sigma, values, derivs);
  if (values.size() != sigma.size() || derivs.size() != sigma.size())
    throw DimensionError("spectral rule returned the wrong number of values");
}

Matrix SpectralEstimator::apply(const Matrix &Y) const { return evaluate(Y).estimate; }

Matrix SpectralEstimator::jvp(const Evaluation &e, const Matrix &delta) const {
  return jvp(e, DirectionalDerivative(e.svd, delta));
}

Matrix SpectralEstimator::jvp(const Evaluation &e, const DirectionalDerivative &dd) const {
  Matrix out = dd(e.values, e.derivs);
  if (clamp_)
    apply_clamp_mask(e.unclamped, *clamp_, out);
  return out;
}

MatrixMap SpectralEstimator::as_map() const {
  return [self = *this](const Matrix &Y) { return self.apply(Y); };
}

} // namespace svshrink

#include "svshrink/linalg.hpp"

#include "svshrink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svshrink {

ShrinkagePlan ShrinkagePlan::identity(std::size_t k) {
  ShrinkagePlan p;
  p.active.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    p.active[i] = i;
  p.weights.assign(k, 1.0);
  return p;
}

ShrinkagePlan ShrinkagePlan::empty(std::size_t k) {
  ShrinkagePlan p;
  p.weights.assign(k, 0.0);
  return p;
}

bool ShrinkagePlan::is_active(std::size_t k) const {
  return std::binary_search(active.begin(), active.end(), k);
}

void ShrinkagePlan::validate(std::size_t k) const {
  if (weights.size() != k) {
    std::ostringstream os;
    os << "plan has " << weights.size() << " weights, expected " << k;
    throw DimensionError(os.str());
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i] >= k)
      throw ParameterError("active index out of range");
    if (i > 0 && active[i] <= active[i - 1])
      throw ParameterError("active set must be strictly increasing");
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double w = weights[i];
    if (!(w >= 0.0 && w <= 1.0))
      throw ParameterError("weight outside [0,1] at index " + std::to_string(i));
    if (w != 0.0 && !is_active(i))
      throw ParameterError("nonzero weight outside active set at index " +
                           std::to_string(i));
  }
  if (clamp_floor && !(*clamp_floor > 0.0))
    throw ParameterError("clamp floor must be positive");
}

void require_finite(const Matrix &Y, const char *what) {
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i)
      if (!std::isfinite(Y(i, j))) {
        std::ostringstream os;
        os << what << " has non-finite entry at (" << i << "," << j << ")";
        throw DomainError(os.str());
      }
}

namespace {

void fix_signs(Matrix &U, Matrix &V) {
  for (Index k = 0; k < U.cols(); ++k) {
    Index best = 0;
    double mag = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, k));
      if (a > mag) {
        mag = a;
        best = i;
      }
    }
    if (U(best, k) < 0.0) {
      U.col(k) *= -1.0;
      V.col(k) *= -1.0;
    }
  }
}

} // namespace

Svd svd(const Matrix &Y) {
  if (Y.rows() == 0 || Y.cols() == 0)
    throw DimensionError("svd of an empty matrix");
  require_finite(Y, "svd input");
  Eigen::BDCSVD<Matrix> dec(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
    throw NumericalError("SVD did not converge");
  Svd out{dec.singularValues(), dec.matrixU(), dec.matrixV()};
  for (Index k = 0; k < out.sigma.size(); ++k)
    out.sigma(k) = std::max(out.sigma(k), 0.0);
  fix_signs(out.U, out.V);
  return out;
}

Vector singular_values(const Matrix &Y) {
  if (Y.rows() == 0 || Y.cols() == 0)
    throw DimensionError("svd of an empty matrix");
  require_finite(Y, "svd input");
  Eigen::BDCSVD<Matrix> dec(Y);
  if (dec.info() != Eigen::Success)
    throw NumericalError("SVD did not converge");
  Vector s = dec.singularValues();
  for (Index k = 0; k < s.size(); ++k)
    s(k) = std::max(s(k), 0.0);
  return s;
}

Matrix spectral_reconstruct(const Svd &f, const Vector &values,
                            std::optional<double> floor) {
  if (values.size() != f.size())
    throw DimensionError("spectral values do not match the factorization");
  Index r = values.size();
  while (r > 0 && values(r - 1) == 0.0)
    --r;
  Matrix out = Matrix::Zero(f.rows(), f.cols());
  if (r > 0)
    out.noalias() = f.U.leftCols(r) * values.head(r).asDiagonal() *
                    f.V.leftCols(r).transpose();
  if (floor)
    out = out.cwiseMax(*floor);
  return out;
}

Vector plan_values(const Svd &f, const ShrinkagePlan &plan) {
  plan.validate(static_cast<std::size_t>(f.size()));
  Vector v(f.size());
  for (Index k = 0; k < f.size(); ++k)
    v(k) = plan.weights[static_cast<std::size_t>(k)] * f.sigma(k);
  return v;
}

Vector plan_derivatives(const Svd &f, const ShrinkagePlan &plan) {
  plan.validate(static_cast<std::size_t>(f.size()));
  Vector v(f.size());
  for (Index k = 0; k < f.size(); ++k)
    v(k) = plan.weights[static_cast<std::size_t>(k)];
  return v;
}

Matrix reconstruct(const Svd &f, const ShrinkagePlan &plan) {
  return spectral_reconstruct(f, plan_values(f, plan), plan.clamp_floor);
}

void check_distinct(const Vector &sigma, const Vector &values) {
  const Index k = sigma.size();
  if (k == 0)
    return;
  const double scale = kDegeneracyTolerance * sigma(0) * sigma(0);
  for (Index a = 0; a < k; ++a) {
    for (Index b = a + 1; b < k; ++b) {
      if (values(a) == 0.0 && values(b) == 0.0)
        continue;
      const double gap = std::abs(sigma(a) * sigma(a) - sigma(b) * sigma(b));
      if (gap < scale || gap == 0.0) {
        std::ostringstream os;
        os << "near-equal singular values at indices " << a << " and " << b
           << " (" << sigma(a) << ", " << sigma(b) << ")";
        throw DegeneracyError(static_cast<std::size_t>(a),
                              static_cast<std::size_t>(b), os.str());
      }
    }
  }
}

namespace {

Vector ratio_over_sigma(const Vector &sigma, const Vector &values) {
  Vector g(sigma.size());
  for (Index k = 0; k < sigma.size(); ++k) {
    if (values(k) == 0.0)
      g(k) = 0.0;
    else if (sigma(k) == 0.0)
      throw DomainError("nonzero spectral value at a zero singular value");
    else
      g(k) = values(k) / sigma(k);
  }
  return g;
}

} // namespace

DirectionalDerivative::DirectionalDerivative(const Svd &f, const Matrix &delta)
    : svd_(&f), delta_(delta) {
  if (delta.rows() != f.rows() || delta.cols() != f.cols())
    throw DimensionError("direction shape does not match the factorization");
  const Matrix dV = delta * f.V;
  core_.noalias() = f.U.transpose() * dV;
  left_ = dV;
  left_.noalias() -= f.U * core_;
  right_.noalias() = f.U.transpose() * delta;
  right_.noalias() -= core_ * f.V.transpose();
}

Matrix DirectionalDerivative::operator()(const Vector &values,
                                         const Vector &derivs) const {
  const Svd &f = *svd_;
  const Index k = f.size();
  if (values.size() != k || derivs.size() != k)
    throw DimensionError("spectral values do not match the factorization");
  check_distinct(f.sigma, values);
  const Vector g = ratio_over_sigma(f.sigma, values);

  Matrix M = Matrix::Zero(k, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < k; ++i) {
      if (i == j) {
        M(i, i) = core_(i, i) * derivs(i);
        continue;
      }
      const double fi = values(i), fj = values(j);
      if (fi == 0.0 && fj == 0.0)
        continue;
      const double si = f.sigma(i), sj = f.sigma(j);
      const double sym = 0.5 * (core_(i, j) + core_(j, i));
      const double skew = 0.5 * (core_(i, j) - core_(j, i));
      const double s = (fi - fj) / (si - sj);
      const double a = (si + sj) > 0.0 ? (fi + fj) / (si + sj) : 0.0;
      M(i, j) = sym * s + skew * a;
    }
  }

  Matrix inner = M * f.V.transpose();
  inner.noalias() += g.asDiagonal() * right_;
  Matrix out = f.U * inner;
  out.noalias() += left_ * g.asDiagonal() * f.V.transpose();
  return out;
}

Matrix directional_derivative(const Svd &f, const Vector &values,
                              const Vector &derivs, const Matrix &delta) {
  return DirectionalDerivative(f, delta)(values, derivs);
}

void apply_clamp_mask(const Matrix &unclamped, double floor, Matrix &jvp) {
  if (unclamped.rows() != jvp.rows() || unclamped.cols() != jvp.cols())
    throw DimensionError("mask shape mismatch");
  for (Index j = 0; j < jvp.cols(); ++j)
    for (Index i = 0; i < jvp.rows(); ++i)
      if (unclamped(i, j) < floor)
        jvp(i, j) = 0.0;
}

} // namespace svshrink

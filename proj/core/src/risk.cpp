#include "svshrink/risk.hpp"

#include "svshrink/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svshrink {

namespace {

const char *kNoteSure = "estimates MSE(X_hat, X) = E||X_hat - X||_F^2";
const char *kNoteGsure = "estimates E||eta(X_hat) - eta(X)||_F^2 (natural-parameter MSE)";
const char *kNoteSukls = "estimates MKLS - sum_ij A(theta_ij)";
const char *kNoteSuklsGamma = "estimates MKLS - L sum_ij log X_ij";
const char *kNotePure = "estimates MSE - ||X||_F^2";
const char *kNotePukla = "estimates MKLA + sum_ij (X_ij - X_ij log X_ij)";

void require_same_shape(const Matrix &A, const Matrix &B, const char *what) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw DimensionError(std::string(what) + ": shape mismatch");
}

void require_gamma_inputs(const Matrix &Y, const Matrix &F, double L) {
  if (!(L > 2.0))
    throw ParameterError("Gamma risk estimates need L > 2");
  require_same_shape(Y, F, "Gamma risk");
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      if (!(Y(i, j) > 0.0)) {
        std::ostringstream os;
        os << "Gamma observation must be positive at (" << i << "," << j << ")";
        throw DomainError(os.str());
      }
      if (!(F(i, j) > 0.0)) {
        std::ostringstream os;
        os << "estimate must be positive at (" << i << "," << j << ")";
        throw DomainError(os.str());
      }
    }
}

DivergenceEstimate summarize(const std::vector<double> &draws) {
  DivergenceEstimate d;
  d.samples = static_cast<int>(draws.size());
  double mean = 0.0;
  for (double v : draws)
    mean += v;
  mean /= static_cast<double>(draws.size());
  d.value = mean;
  if (draws.size() > 1) {
    double ss = 0.0;
    for (double v : draws)
      ss += (v - mean) * (v - mean);
    d.std_error = std::sqrt(ss / static_cast<double>(draws.size() - 1) /
                            static_cast<double>(draws.size()));
  }
  return d;
}

void require_samples(int samples) {
  if (samples < 1)
    throw ParameterError("Monte-Carlo sample count must be at least 1");
}

void require_exact_size(const Matrix &Y) {
  const auto nm = static_cast<std::size_t>(Y.rows() * Y.cols());
  if (nm > kExactSizeLimit)
    throw CapacityError("exact leave-one-count-out evaluation limited to n*m <= " +
                        std::to_string(kExactSizeLimit) + ", got " + std::to_string(nm));
}

} // namespace

std::string to_string(RiskKind k) {
  switch (k) {
  case RiskKind::SURE:
    return "SURE";
  case RiskKind::GSURE:
    return "GSURE";
  case RiskKind::SUKLS:
    return "SUKLS";
  case RiskKind::PURE:
    return "PURE";
  case RiskKind::PUKLA:
    return "PUKLA";
  }
  return "unknown";
}

std::string to_string(DivergenceKind k) {
  switch (k) {
  case DivergenceKind::ClosedForm:
    return "ClosedForm";
  case DivergenceKind::MonteCarlo:
    return "MonteCarlo";
  case DivergenceKind::Exact:
    return "Exact";
  }
  return "unknown";
}

RiskKind parse_risk_kind(const std::string &name) {
  for (RiskKind k : {RiskKind::SURE, RiskKind::GSURE, RiskKind::SUKLS, RiskKind::PURE,
                     RiskKind::PUKLA}) {
    std::string s = to_string(k);
    std::string lower;
    for (char c : s)
      lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (name == s || name == lower)
      return k;
  }
  throw ParameterError("unknown risk estimator '" + name + "'");
}

double divergence_closed_form(const Svd &f, const Vector &values, const Vector &derivs) {
  const Index k = f.size();
  if (values.size() != k || derivs.size() != k)
    throw DimensionError("spectral values do not match the factorization");
  check_distinct(f.sigma, values);
  const double gap = std::abs(static_cast<double>(f.rows() - f.cols()));
  double total = 0.0;
  for (Index a = 0; a < k; ++a) {
    total += derivs(a);
    const double fa = values(a);
    if (fa == 0.0)
      continue;
    const double sa = f.sigma(a);
    if (sa == 0.0)
      throw DomainError("nonzero spectral value at a zero singular value");
    double pair = 0.0;
    for (Index b = 0; b < k; ++b) {
      if (b == a)
        continue;
      const double sb = f.sigma(b);
      pair += sa / (sa * sa - sb * sb);
    }
    total += gap * fa / sa + 2.0 * fa * pair;
  }
  return total;
}

DivergenceEstimate mc_divergence(const MatrixMap &f, const Matrix &Y, int samples, Rng &rng,
                                 double h) {
  require_samples(samples);
  const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
  const double step = h * scale;
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const Matrix d = rademacher(Y.rows(), Y.cols(), rng);
    const Matrix jd = (f(Y + step * d) - f(Y - step * d)) / (2.0 * step);
    draws.push_back(d.cwiseProduct(jd).sum());
  }
  return summarize(draws);
}

DivergenceEstimate mc_divergence(const SpectralEstimator &f,
                                 const SpectralEstimator::Evaluation &e, int samples, Rng &rng) {
  require_samples(samples);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const Matrix d = rademacher(e.svd.rows(), e.svd.cols(), rng);
    draws.push_back(d.cwiseProduct(f.jvp(e, d)).sum());
  }
  return summarize(draws);
}

DivergenceEstimate mc_divergence(const SpectralEstimator &f, const Matrix &Y, int samples,
                                 Rng &rng) {
  return mc_divergence(f, f.evaluate(Y), samples, rng);
}

DivergenceEstimate mc_weighted_divergence(const SpectralEstimator &f,
                                          const SpectralEstimator::Evaluation &e,
                                          const Matrix &weights, int samples, Rng &rng) {
  require_samples(samples);
  require_same_shape(weights, e.estimate, "weighted divergence");
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const Matrix d = rademacher(e.svd.rows(), e.svd.cols(), rng);
    draws.push_back(weights.cwiseProduct(d).cwiseProduct(f.jvp(e, d)).sum());
  }
  return summarize(draws);
}

RiskEstimate sure_gaussian(const Matrix &Y, const Matrix &estimate, double tau,
                           double divergence, DivergenceKind kind) {
  if (!(tau > 0.0))
    throw ParameterError("tau must be positive");
  require_same_shape(Y, estimate, "sure_gaussian");
  const double nm = static_cast<double>(Y.rows() * Y.cols());
  const double t2 = tau * tau;
  RiskEstimate r;
  r.kind = RiskKind::SURE;
  r.divergence_kind = kind;
  r.value = -nm * t2 + (estimate - Y).squaredNorm() + 2.0 * t2 * divergence;
  r.offset_note = kNoteSure;
  return r;
}

RiskEstimate sure_gaussian(const Matrix &Y, const SpectralEstimator &f, double tau) {
  if (f.clamp_floor())
    throw ParameterError("closed-form SURE needs an unclamped estimator");
  const auto e = f.evaluate(Y);
  return sure_gaussian(Y, e.estimate, tau, divergence_closed_form(e.svd, e.values, e.derivs));
}

RiskEstimate gsure_gamma(const Matrix &Y, const Matrix &estimate, double div_theta, double L,
                         DivergenceKind kind, std::optional<int> samples,
                         std::optional<double> std_error) {
  require_gamma_inputs(Y, estimate, L);
  double total = 0.0;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      const double y = Y(i, j), x = estimate(i, j);
      total += L * L / (x * x) - 2.0 * L * (L - 1.0) / (y * x) + (L - 1.0) * (L - 2.0) / (y * y);
    }
  RiskEstimate r;
  r.kind = RiskKind::GSURE;
  r.divergence_kind = kind;
  r.value = total + 2.0 * div_theta;
  r.samples = samples;
  if (std_error)
    r.std_error = 2.0 * *std_error;
  r.offset_note = kNoteGsure;
  return r;
}

RiskEstimate gsure_gamma(const Matrix &Y, const SpectralEstimator &f, double L, int samples,
                         Rng &rng) {
  const auto e = f.evaluate(Y);
  require_gamma_inputs(Y, e.estimate, L);
  const Matrix c = (L / e.estimate.array().square()).matrix();
  const DivergenceEstimate d = mc_weighted_divergence(f, e, c, samples, rng);
  return gsure_gamma(Y, e.estimate, d.value, L, DivergenceKind::MonteCarlo, d.samples,
                     d.std_error);
}

RiskEstimate sukls_gamma(const Matrix &Y, const Matrix &estimate, double L, double divergence,
                         DivergenceKind kind) {
  require_gamma_inputs(Y, estimate, L);
  double total = 0.0;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      const double x = estimate(i, j);
      total += (L - 1.0) * x / Y(i, j) - L * std::log(x);
    }
  RiskEstimate r;
  r.kind = RiskKind::SUKLS;
  r.divergence_kind = kind;
  r.value = total - L * static_cast<double>(Y.rows() * Y.cols()) + divergence;
  r.offset_note = kNoteSuklsGamma;
  return r;
}

RiskEstimate sukls_gamma(const Matrix &Y, const SpectralEstimator &f, double L, int samples,
                         Rng &rng) {
  const auto e = f.evaluate(Y);
  if (!e.clamped)
    return sukls_gamma(Y, e.estimate, L, divergence_closed_form(e.svd, e.values, e.derivs));
  const DivergenceEstimate d = mc_divergence(f, e, samples, rng);
  RiskEstimate r = sukls_gamma(Y, e.estimate, L, d.value, DivergenceKind::MonteCarlo);
  r.samples = d.samples;
  r.std_error = d.std_error;
  return r;
}

RiskEstimate gsure_generic(const NoiseModel &model, const Matrix &Y, const Matrix &theta_hat,
                           double div_theta) {
  require_same_shape(Y, theta_hat, "gsure_generic");
  double total = theta_hat.squaredNorm() + 2.0 * div_theta;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      const FamilyTerms t = family_terms(model, Y(i, j), true);
      total += 2.0 * t.h_ratio1 * theta_hat(i, j) + t.h_ratio2;
    }
  RiskEstimate r;
  r.kind = RiskKind::GSURE;
  r.divergence_kind = DivergenceKind::ClosedForm;
  r.value = total;
  r.offset_note = kNoteGsure;
  return r;
}

RiskEstimate sukls_generic(const NoiseModel &model, const Matrix &Y, const Matrix &estimate,
                           double divergence) {
  require_same_shape(Y, estimate, "sukls_generic");
  double total = divergence;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      const double theta = link(model, estimate(i, j));
      const FamilyTerms t = family_terms(model, Y(i, j), false);
      total += (theta + t.h_ratio1) * log_partition_d1(model, theta) - log_partition(model, theta);
    }
  RiskEstimate r;
  r.kind = RiskKind::SUKLS;
  r.divergence_kind = DivergenceKind::ClosedForm;
  r.value = total;
  r.offset_note = kNoteSukls;
  return r;
}

Matrix downdated_exact(const Matrix &Y, const MatrixMap &f) {
  require_exact_size(Y);
  Matrix D = Matrix::Zero(Y.rows(), Y.cols());
  Matrix work = Y;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      if (Y(i, j) <= 0.0)
        continue;
      work(i, j) = Y(i, j) - 1.0;
      D(i, j) = f(work)(i, j);
      work(i, j) = Y(i, j);
    }
  return D;
}

double pure_from_downdated(const Matrix &Y, const Matrix &estimate, const Matrix &downdated) {
  require_same_shape(Y, estimate, "PURE");
  require_same_shape(Y, downdated, "PURE");
  double cross = 0.0;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i)
      if (Y(i, j) != 0.0)
        cross += Y(i, j) * downdated(i, j);
  return estimate.squaredNorm() - 2.0 * cross;
}

double pukla_from_downdated(const Matrix &Y, const Matrix &estimate, const Matrix &downdated) {
  require_same_shape(Y, estimate, "PUKLA");
  require_same_shape(Y, downdated, "PUKLA");
  double total = estimate.sum();
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      if (Y(i, j) == 0.0)
        continue;
      const double d = downdated(i, j);
      if (!(d > 0.0)) {
        std::ostringstream os;
        os << "PUKLA needs a positive downdated estimate at (" << i << "," << j << ")";
        throw DomainError(os.str());
      }
      total -= Y(i, j) * std::log(d);
    }
  return total;
}

DowndatedSpectra::DowndatedSpectra(const Matrix &Y) : rows_(Y.rows()), cols_(Y.cols()) {
  require_exact_size(Y);
  const Index k = std::min(rows_, cols_);
  for (Index j = 0; j < cols_; ++j)
    for (Index i = 0; i < rows_; ++i)
      if (Y(i, j) > 0.0)
        entries_.push_back(i + j * rows_);
  const auto count = static_cast<Index>(entries_.size());
  sigma_.resize(k, count);
  products_.resize(k, count);
  Matrix work = Y;
  for (Index e = 0; e < count; ++e) {
    const Index i = entries_[static_cast<std::size_t>(e)] % rows_;
    const Index j = entries_[static_cast<std::size_t>(e)] / rows_;
    work(i, j) = Y(i, j) - 1.0;
    const Svd f = svd(work);
    work(i, j) = Y(i, j);
    sigma_.col(e) = f.sigma;
    products_.col(e) = f.U.row(i).transpose().cwiseProduct(f.V.row(j).transpose());
  }
}

Matrix DowndatedSpectra::apply(const SpectralEstimator &f) const {
  Matrix D = Matrix::Zero(rows_, cols_);
  Vector values, derivs;
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    const auto c = static_cast<Index>(e);
    f.spectrum(sigma_.col(c), values, derivs);
    double d = values.dot(products_.col(c));
    if (f.clamp_floor())
      d = std::max(d, *f.clamp_floor());
    D(entries_[e] % rows_, entries_[e] / rows_) = d;
  }
  return D;
}

Matrix DowndatedSpectra::component(Index k) const {
  Matrix D = Matrix::Zero(rows_, cols_);
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    const auto c = static_cast<Index>(e);
    D(entries_[e] % rows_, entries_[e] / rows_) = sigma_(k, c) * products_(k, c);
  }
  return D;
}

Matrix downdated_first_order(const Matrix &estimate, const Matrix &delta, const Matrix &jvp) {
  return estimate - delta.cwiseProduct(jvp);
}

namespace {

RiskEstimate poisson_result(RiskKind kind, double value, DivergenceKind dk) {
  RiskEstimate r;
  r.kind = kind;
  r.value = value;
  r.divergence_kind = dk;
  r.offset_note = kind == RiskKind::PURE ? kNotePure : kNotePukla;
  return r;
}

RiskEstimate poisson_approx(RiskKind kind, const Matrix &Y, const SpectralEstimator &f,
                            const ApproxMode &mode) {
  require_samples(mode.samples);
  require_support(Poisson{}, Y);
  Rng rng(mode.seed);
  const auto e = f.evaluate(Y);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(mode.samples));
  for (int s = 0; s < mode.samples; ++s) {
    const Matrix d = rademacher(Y.rows(), Y.cols(), rng);
    Matrix D = downdated_first_order(e.estimate, d, f.jvp(e, d));
    if (kind == RiskKind::PURE) {
      draws.push_back(pure_from_downdated(Y, e.estimate, D));
    } else {
      if (f.clamp_floor())
        D = D.cwiseMax(*f.clamp_floor());
      draws.push_back(pukla_from_downdated(Y, e.estimate, D));
    }
  }
  const DivergenceEstimate sum = summarize(draws);
  RiskEstimate r = poisson_result(kind, sum.value, DivergenceKind::MonteCarlo);
  r.samples = sum.samples;
  r.std_error = sum.std_error;
  return r;
}

} // namespace

RiskEstimate pure_poisson(const Matrix &Y, const MatrixMap &f, ExactMode) {
  require_support(Poisson{}, Y);
  const Matrix D = downdated_exact(Y, f);
  return poisson_result(RiskKind::PURE, pure_from_downdated(Y, f(Y), D), DivergenceKind::Exact);
}

RiskEstimate pure_poisson(const Matrix &Y, const SpectralEstimator &f, ExactMode) {
  require_support(Poisson{}, Y);
  const DowndatedSpectra spectra(Y);
  return poisson_result(RiskKind::PURE, pure_from_downdated(Y, f.apply(Y), spectra.apply(f)),
                        DivergenceKind::Exact);
}

RiskEstimate pure_poisson(const Matrix &Y, const SpectralEstimator &f, const ApproxMode &mode) {
  return poisson_approx(RiskKind::PURE, Y, f, mode);
}

RiskEstimate pukla_poisson(const Matrix &Y, const MatrixMap &f, ExactMode) {
  require_support(Poisson{}, Y);
  const Matrix D = downdated_exact(Y, f);
  return poisson_result(RiskKind::PUKLA, pukla_from_downdated(Y, f(Y), D),
                        DivergenceKind::Exact);
}

RiskEstimate pukla_poisson(const Matrix &Y, const SpectralEstimator &f, ExactMode) {
  require_support(Poisson{}, Y);
  const DowndatedSpectra spectra(Y);
  return poisson_result(RiskKind::PUKLA, pukla_from_downdated(Y, f.apply(Y), spectra.apply(f)),
                        DivergenceKind::Exact);
}

RiskEstimate pukla_poisson(const Matrix &Y, const SpectralEstimator &f, const ApproxMode &mode) {
  return poisson_approx(RiskKind::PUKLA, Y, f, mode);
}

} // namespace svshrink

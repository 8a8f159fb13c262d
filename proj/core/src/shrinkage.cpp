#include "svshrink/shrinkage.hpp"

#include "svshrink/errors.hpp"
#include "svshrink/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace svshrink {

namespace {

double gamma_shape(const NoiseModel &model) {
  if (const auto *g = std::get_if<Gamma>(&model))
    return g->L;
  throw UnsupportedFamilyError("expected the Gamma family");
}

double gaussian_tau(const NoiseModel &model) {
  if (const auto *g = std::get_if<Gaussian>(&model))
    return g->tau;
  throw UnsupportedFamilyError("expected the Gaussian family");
}

/// sum_{l != k} s_k^2 / (s_k^2 - s_l^2).
double pair_sum(const Vector &sigma, Index k) {
  const double sk2 = sigma(k) * sigma(k);
  double total = 0.0;
  for (Index l = 0; l < sigma.size(); ++l)
    if (l != k)
      total += sk2 / (sk2 - sigma(l) * sigma(l));
  return total;
}

/// Objective of a spectral estimator built on the fixed factorization of Y.
class RiskObjective {
public:
  RiskObjective(const Matrix &Y, const Svd &f, const NoiseModel &model, RiskKind kind,
                const FitOptions &opts)
      : Y_(Y), svd_(f), model_(model), kind_(kind) {
    require_objective(model, kind);
    if (f.rows() != Y.rows() || f.cols() != Y.cols())
      throw DimensionError("factorization does not match the observation");
    const bool exact = opts.mode == FitMode::Exact &&
                       (kind == RiskKind::PURE || kind == RiskKind::PUKLA);
    if (exact) {
      spectra_ = std::make_unique<DowndatedSpectra>(Y);
    } else if (kind != RiskKind::SURE) {
      Rng rng(opts.seed);
      dd_ = std::make_unique<DirectionalDerivative>(svd_, rademacher(Y.rows(), Y.cols(), rng));
    }
  }

  double operator()(const SpectralEstimator &est) const {
    if (kind_ == RiskKind::SURE)
      return sure(est);
    const SpectralEstimator::Evaluation e = est.evaluate(svd_);
    switch (kind_) {
    case RiskKind::GSURE: {
      const double L = gamma_shape(model_);
      const Matrix jd = est.jvp(e, *dd_);
      const double div =
          (L / e.estimate.array().square() * dd_->delta().array() * jd.array()).sum();
      return gsure_gamma(Y_, e.estimate, div, L).value;
    }
    case RiskKind::SUKLS: {
      const double L = gamma_shape(model_);
      double div = 0.0;
      if (e.clamped)
        div = dd_->delta().cwiseProduct(est.jvp(e, *dd_)).sum();
      else
        div = divergence_closed_form(e.svd, e.values, e.derivs);
      return sukls_gamma(Y_, e.estimate, L, div).value;
    }
    case RiskKind::PURE:
      return pure_from_downdated(Y_, e.estimate, downdated(est, e));
    case RiskKind::PUKLA:
      return pukla_from_downdated(Y_, e.estimate, downdated(est, e));
    case RiskKind::SURE:
      break;
    }
    throw ParameterError("unsupported objective");
  }

private:
  double sure(const SpectralEstimator &est) const {
    const double tau = gaussian_tau(model_);
    Vector values, derivs;
    est.spectrum(svd_.sigma, values, derivs);
    const double nm = static_cast<double>(Y_.rows() * Y_.cols());
    const double div = divergence_closed_form(svd_, values, derivs);
    return -nm * tau * tau + (values - svd_.sigma).squaredNorm() + 2.0 * tau * tau * div;
  }

  Matrix downdated(const SpectralEstimator &est, const SpectralEstimator::Evaluation &e) const {
    if (spectra_)
      return spectra_->apply(est);
    Matrix D = downdated_first_order(e.estimate, dd_->delta(), est.jvp(e, *dd_));
    if (kind_ == RiskKind::PUKLA && est.clamp_floor())
      D = D.cwiseMax(*est.clamp_floor());
    return D;
  }

  const Matrix &Y_;
  const Svd &svd_;
  NoiseModel model_;
  RiskKind kind_;
  std::unique_ptr<DirectionalDerivative> dd_;
  std::unique_ptr<DowndatedSpectra> spectra_;
};

std::vector<double> breakpoints_of(const Vector &sigma) {
  std::vector<double> b(sigma.data(), sigma.data() + sigma.size());
  return b;
}

} // namespace

void EstimatorSpec::validate(std::size_t k) const {
  svshrink::validate(model);
  if (clamp_floor && !(*clamp_floor > 0.0))
    throw ParameterError("clamp floor must be positive");
  std::visit(
      [k](const auto &v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PcaTruncate>) {
          if (v.rank > k)
            throw ParameterError("rank " + std::to_string(v.rank) + " exceeds min(n,m) = " +
                                 std::to_string(k));
        } else if constexpr (std::is_same_v<T, SoftThreshold>) {
          if (!(v.lambda >= 0.0) || !std::isfinite(v.lambda))
            throw ParameterError("soft threshold must be finite and nonnegative");
        } else {
          v.plan.validate(k);
        }
      },
      kind);
}

SpectralEstimator EstimatorSpec::estimator() const {
  return std::visit(
      [this](const auto &v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PcaTruncate>) {
          return SpectralEstimator::truncate(v.rank, clamp_floor);
        } else if constexpr (std::is_same_v<T, SoftThreshold>) {
          return SpectralEstimator::soft_threshold(v.lambda, clamp_floor);
        } else {
          return SpectralEstimator::weighted(v.plan.weights,
                                             clamp_floor ? clamp_floor : v.plan.clamp_floor);
        }
      },
      kind);
}

std::optional<double> default_clamp(const NoiseModel &model) {
  if (family(model) == Family::Gaussian)
    return std::nullopt;
  return kDefaultEpsilon;
}

Matrix apply(const EstimatorSpec &spec, const Svd &f) {
  spec.validate(static_cast<std::size_t>(f.size()));
  return spec.estimator().evaluate(f).estimate;
}

ShrinkagePlan weights_gaussian(const Svd &f, double tau, const std::vector<std::size_t> &active) {
  if (!(tau > 0.0))
    throw ParameterError("tau must be positive");
  const auto k = static_cast<std::size_t>(f.size());
  ShrinkagePlan plan = ShrinkagePlan::empty(k);
  plan.active = active;
  std::sort(plan.active.begin(), plan.active.end());
  plan.active.erase(std::unique(plan.active.begin(), plan.active.end()), plan.active.end());
  Vector mark = Vector::Zero(f.size());
  for (std::size_t a : plan.active) {
    if (a >= k)
      throw ParameterError("active index out of range");
    mark(static_cast<Index>(a)) = 1.0;
  }
  check_distinct(f.sigma, mark);
  const double gap = std::abs(static_cast<double>(f.rows() - f.cols()));
  for (std::size_t a : plan.active) {
    const auto i = static_cast<Index>(a);
    const double s = f.sigma(i);
    if (s == 0.0)
      continue;
    const double bracket = 1.0 + gap + 2.0 * pair_sum(f.sigma, i);
    plan.weights[a] = std::clamp(1.0 - tau * tau / (s * s) * bracket, 0.0, 1.0);
  }
  return plan;
}

double weight1_gamma_sukls(const Matrix &Y, const Svd &f, double L, bool active) {
  if (!(L > 2.0))
    throw ParameterError("Gamma SUKLS weight needs L > 2");
  require_support(Gamma{L}, Y);
  if (!active)
    return 0.0;
  const double nm = static_cast<double>(Y.rows() * Y.cols());
  const double s1 = f.sigma(0);
  const Matrix X1 = s1 * f.U.col(0) * f.V.col(0).transpose();
  const double ratio = X1.cwiseQuotient(Y).sum();
  Vector mark = Vector::Zero(f.size());
  mark(0) = 1.0;
  check_distinct(f.sigma, mark);
  const double gap = std::abs(static_cast<double>(f.rows() - f.cols()));
  const double bracket =
      (L - 1.0) / (L * nm) * ratio + (1.0 + gap + 2.0 * pair_sum(f.sigma, 0)) / (L * nm);
  if (!(bracket > 1.0))
    return 1.0;
  return 1.0 / bracket;
}

double weight1_poisson_pukla(const Matrix &Y, const Svd &f, bool active) {
  require_support(Poisson{}, Y);
  const double total = (f.sigma(0) * f.U.col(0) * f.V.col(0).transpose()).sum();
  if (!(total > 0.0))
    throw DomainError("rank-1 estimate has nonpositive total mass");
  if (!active)
    return 0.0;
  return std::clamp(Y.sum() / total, 0.0, 1.0);
}

double weight1_poisson_pure_exact(const Matrix &Y, const Svd &f, bool active) {
  require_support(Poisson{}, Y);
  if (static_cast<std::size_t>(Y.rows() * Y.cols()) > kExactSizeLimit)
    throw CapacityError("exact PURE weight limited to n*m <= " +
                        std::to_string(kExactSizeLimit));
  if (!active)
    return 0.0;
  const double s1 = f.sigma(0);
  if (s1 == 0.0)
    return 0.0;
  const Matrix D = DowndatedSpectra(Y).component(0);
  return std::clamp(Y.cwiseProduct(D).sum() / (s1 * s1), 0.0, 1.0);
}

void require_objective(const NoiseModel &model, RiskKind objective) {
  const Family fam = family(model);
  bool ok = false;
  switch (fam) {
  case Family::Gaussian:
    ok = objective == RiskKind::SURE;
    break;
  case Family::Gamma:
    ok = objective == RiskKind::GSURE || objective == RiskKind::SUKLS;
    break;
  case Family::Poisson:
    ok = objective == RiskKind::PURE || objective == RiskKind::PUKLA;
    break;
  }
  if (!ok)
    throw UnsupportedFamilyError(
        "objective " + to_string(objective) + " is not defined for the " + family_name(fam) +
        " family (valid: gaussian/sure, gamma/gsure, gamma/sukls, poisson/pure, poisson/pukla)");
}

ShrinkagePlan optimize_weights_greedy(const Matrix &Y, const Svd &f, const NoiseModel &model,
                                      RiskKind objective,
                                      const std::vector<std::size_t> &active,
                                      std::optional<double> epsilon, const FitOptions &opts) {
  if (opts.passes < 1)
    throw ParameterError("greedy passes must be at least 1");
  const auto k = static_cast<std::size_t>(f.size());
  ShrinkagePlan plan = ShrinkagePlan::empty(k);
  plan.active = active;
  std::sort(plan.active.begin(), plan.active.end());
  plan.active.erase(std::unique(plan.active.begin(), plan.active.end()), plan.active.end());
  for (std::size_t a : plan.active)
    if (a >= k)
      throw ParameterError("active index out of range");
  plan.clamp_floor = epsilon;
  if (plan.active.empty())
    return plan;

  const RiskObjective risk(Y, f, model, objective, opts);
  std::vector<double> w(k, 0.0);
  if (plan.is_active(0))
    w[0] = 1.0;
  for (int pass = 0; pass < opts.passes; ++pass) {
    for (std::size_t l : plan.active) {
      auto phi = [&](double x) {
        std::vector<double> trial = w;
        trial[l] = x;
        return risk(SpectralEstimator::weighted(std::move(trial), epsilon));
      };
      try {
        w[l] = std::clamp(minimize_bounded(phi, 0.0, 1.0, opts.minimize).x, 0.0, 1.0);
      } catch (const DomainError &e) {
        throw DomainError(std::string(e.what()) + " (weight index " + std::to_string(l) + ")");
      } catch (const DegeneracyError &e) {
        throw DegeneracyError(e.first, e.second,
                              std::string(e.what()) + " (weight index " + std::to_string(l) +
                                  ")");
      }
    }
  }
  plan.weights = w;
  return plan;
}

ShrinkagePlan optimize_weights_greedy(const Matrix &Y, const NoiseModel &model,
                                      RiskKind objective,
                                      const std::vector<std::size_t> &active,
                                      std::optional<double> epsilon, const FitOptions &opts) {
  return optimize_weights_greedy(Y, svd(Y), model, objective, active, epsilon, opts);
}

double soft_threshold_fit(const Matrix &Y, const Svd &f, const NoiseModel &model,
                          RiskKind objective, std::optional<double> epsilon,
                          const FitOptions &opts) {
  const RiskObjective risk(Y, f, model, objective, opts);
  const double hi = f.sigma(0);
  if (hi == 0.0)
    return 0.0;
  // Thresholds below a cluster of tied (e.g. numerically zero) singular values
  // have no closed-form divergence; they are excluded from the search.
  auto phi = [&](double lambda) {
    try {
      return risk(SpectralEstimator::soft_threshold(std::max(lambda, 0.0), epsilon));
    } catch (const DegeneracyError &) {
      return std::numeric_limits<double>::infinity();
    }
  };
  return minimize_scan(phi, 0.0, hi, breakpoints_of(f.sigma), 128, 3, opts.minimize).x;
}

double soft_threshold_fit(const Matrix &Y, const NoiseModel &model, RiskKind objective,
                          std::optional<double> epsilon, const FitOptions &opts) {
  return soft_threshold_fit(Y, svd(Y), model, objective, epsilon, opts);
}

OracleWeights oracle_weights(const Matrix &X, const Svd &f) {
  if (X.rows() != f.rows() || X.cols() != f.cols())
    throw DimensionError("signal does not match the factorization");
  const auto k = static_cast<std::size_t>(f.size());
  OracleWeights out;
  out.plan = ShrinkagePlan::identity(k);
  out.raw.resize(k);
  out.oracle_sigma.resize(k);
  const Matrix XV = X * f.V;
  for (std::size_t i = 0; i < k; ++i) {
    const auto c = static_cast<Index>(i);
    const double s = f.U.col(c).dot(XV.col(c));
    out.oracle_sigma[i] = s;
    out.raw[i] = f.sigma(c) > 0.0 ? s / f.sigma(c) : 0.0;
    out.plan.weights[i] = std::clamp(out.raw[i], 0.0, 1.0);
  }
  return out;
}

double oracle_soft_threshold(const Matrix &X, const Matrix &Y, const NoiseModel &model,
                             std::optional<double> epsilon, std::optional<MetricKind> loss) {
  const Svd f = svd(Y);
  MetricKind kind = MetricKind::NMSE;
  if (loss) {
    kind = *loss;
  } else if (family(model) == Family::Gamma) {
    kind = MetricKind::KLS_gamma;
  } else if (family(model) == Family::Poisson) {
    kind = MetricKind::KLA_poisson;
  }
  const double hi = f.sigma(0);
  if (hi == 0.0)
    return 0.0;
  std::function<double(double)> phi;
  if (kind == MetricKind::NMSE && !epsilon) {
    // ||sum f_k u_k v_k^t - X||^2 up to the constant ||X||^2.
    const Vector proj = (f.U.transpose() * X * f.V).diagonal();
    phi = [&f, proj](double lambda) {
      const Vector v = (f.sigma.array() - lambda).max(0.0).matrix();
      return v.squaredNorm() - 2.0 * v.dot(proj);
    };
  } else {
    phi = [&, kind](double lambda) {
      const Matrix Xhat =
          SpectralEstimator::soft_threshold(std::max(lambda, 0.0), epsilon).evaluate(f).estimate;
      if (kind == MetricKind::NMSE)
        return squared_error(Xhat, X);
      return metric(kind, Xhat, X, model);
    };
  }
  return minimize_scan(phi, 0.0, hi, breakpoints_of(f.sigma)).x;
}

} // namespace svshrink

#include "svshrink/experiments.hpp"

#include "svshrink/activeset.hpp"
#include "svshrink/errors.hpp"
#include "svshrink/matrix_io.hpp"
#include "svshrink/rmt.hpp"
#include "svshrink/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <thread>

namespace svshrink {

using nlohmann::json;
using namespace json_detail;

namespace {

constexpr std::uint64_t kSignalStream = 0x5169A1ULL;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void config_fail(const std::string &pointer, const std::string &msg) {
  throw ConfigError("at " + pointer + ": " + msg);
}

/// Modified Gram-Schmidt, applied twice for orthogonality near machine precision.
void orthonormalize(Matrix &Q) {
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Index k = 0; k < Q.cols(); ++k) {
      for (Index l = 0; l < k; ++l)
        Q.col(k) -= Q.col(l).dot(Q.col(k)) * Q.col(l);
      const double norm = Q.col(k).norm();
      if (!(norm > 1e-12))
        throw NumericalError("vector recipe produced linearly dependent vectors");
      Q.col(k) /= norm;
    }
  }
}

VectorRecipe parse_recipe(const json &j, const std::string &pointer) {
  const std::string s = string(j, pointer);
  if (s == "quadratic")
    return VectorRecipe::Quadratic;
  if (s == "gram_schmidt")
    return VectorRecipe::GramSchmidt;
  config_fail(pointer, "expected quadratic or gram_schmidt");
}

/// Aspect ratio and noise scale sqrt(max(n,m)) tau of the Gaussian model.
struct Regime {
  double c = 1.0;
  double scale = 1.0;
};

Regime regime_of(Index n, Index m, const NoiseModel &model) {
  Regime r;
  const double lo = static_cast<double>(std::min(n, m));
  const double hi = static_cast<double>(std::max(n, m));
  r.c = lo / hi;
  if (const auto *g = std::get_if<Gaussian>(&model))
    r.scale = std::sqrt(hi) * g->tau;
  return r;
}

std::vector<double> true_sigmas(const SignalSpec &spec, Index n, Index m) {
  if (const auto *s = std::get_if<SpikedSignal>(&spec))
    return s->sigmas;
  if (const auto *e = std::get_if<EqualSpikesSignal>(&spec)) {
    const double c = static_cast<double>(std::min(n, m)) / static_cast<double>(std::max(n, m));
    return std::vector<double>(e->rank, e->scale * e->gamma * std::pow(c, 0.25));
  }
  return {};
}

bool data_depends_on_sweep(SweepParam p) {
  return p == SweepParam::Sigma1 || p == SweepParam::TrueRank || p == SweepParam::Rsnr ||
         p == SweepParam::Tau;
}

RiskKind default_objective(const NoiseModel &model) {
  switch (family(model)) {
  case Family::Gaussian:
    return RiskKind::SURE;
  case Family::Gamma:
    return RiskKind::SUKLS;
  case Family::Poisson:
    return RiskKind::PUKLA;
  }
  return RiskKind::SURE;
}

bool needs_gaussian(const ExperimentEstimator &e) {
  return e.active_set == ActiveSetRule::Bulk || e.active_set == ActiveSetRule::EffectiveRank ||
         e.active_set == ActiveSetRule::HardThreshold ||
         e.method == EstimatorMethod::Asymptotic || e.method == EstimatorMethod::OracleShrinker;
}

bool needs_spikes(const ExperimentEstimator &e) {
  return e.active_set == ActiveSetRule::TrueRank ||
         e.active_set == ActiveSetRule::EffectiveRank ||
         e.method == EstimatorMethod::OracleShrinker;
}

/// One sweep point: the signal and model it implies.
struct Point {
  std::optional<double> value;
  Matrix X;
  NoiseModel model;
  SignalSpec signal;
  double signal_norm2 = 0.0;
};

struct Fitted {
  Vector values;
  std::optional<double> clamp;
};

struct Context {
  const ExperimentConfig &config;
  const Point &point;
  const Matrix &Y;
  const Svd &f;
  const Vector &proj; // u_k^t X v_k
  std::uint64_t seed;
};

std::vector<std::size_t> active_indices(const ExperimentEstimator &e, const Context &ctx) {
  const auto k = static_cast<std::size_t>(ctx.f.size());
  const ExperimentConfig &cfg = ctx.config;
  const Regime reg = regime_of(cfg.n, cfg.m, ctx.point.model);
  std::vector<std::size_t> s;
  switch (e.active_set) {
  case ActiveSetRule::All:
    s = leading_set(k);
    break;
  case ActiveSetRule::Bulk:
    s = active_set_gaussian(ctx.f, std::get<Gaussian>(ctx.point.model).tau).selected;
    break;
  case ActiveSetRule::Greedy: {
    const auto eps = e.epsilon ? e.epsilon : default_clamp(ctx.point.model);
    s = active_set_greedy(ctx.Y, ctx.f, ctx.point.model, eps).selected;
    break;
  }
  case ActiveSetRule::TrueRank:
    s = leading_set(std::min(k, true_sigmas(ctx.point.signal, cfg.n, cfg.m).size()));
    break;
  case ActiveSetRule::EffectiveRank: {
    std::vector<double> scaled = true_sigmas(ctx.point.signal, cfg.n, cfg.m);
    for (double &v : scaled)
      v /= reg.scale;
    s = leading_set(std::min(k, rank_effective(scaled, reg.c)));
    break;
  }
  case ActiveSetRule::HardThreshold:
    s = leading_set(std::min(k, rank_hard_threshold(ctx.f, reg.c, reg.scale)));
    break;
  }
  std::size_t limit = k;
  if (e.rank_from_sweep)
    limit = static_cast<std::size_t>(std::llround(*ctx.point.value));
  else if (e.rank)
    limit = *e.rank;
  s.erase(std::remove_if(s.begin(), s.end(), [limit](std::size_t i) { return i >= limit; }),
          s.end());
  return s;
}

Fitted fit(const ExperimentEstimator &e, std::size_t index, const Context &ctx) {
  const NoiseModel &model = ctx.point.model;
  const Svd &f = ctx.f;
  const Index k = f.size();
  Fitted out;
  out.clamp = e.epsilon ? e.epsilon : default_clamp(model);
  if (family(model) == Family::Gaussian)
    out.clamp.reset();
  out.values = Vector::Zero(k);
  const std::vector<std::size_t> active = active_indices(e, ctx);
  const RiskKind objective = e.objective ? *e.objective : default_objective(model);
  FitOptions opts;
  opts.seed = derive_seed(ctx.seed, 1 + index);
  opts.mode = e.mode;
  const Regime reg = regime_of(ctx.config.n, ctx.config.m, model);
  const bool rank1 = std::all_of(active.begin(), active.end(), [](std::size_t i) { return i == 0; });
  const bool has1 = !active.empty();

  auto soft_values = [&](double lambda) {
    for (std::size_t i : active)
      out.values(static_cast<Index>(i)) = std::max(f.sigma(static_cast<Index>(i)) - lambda, 0.0);
  };

  switch (e.method) {
  case EstimatorMethod::Pca:
    for (std::size_t i : active)
      out.values(static_cast<Index>(i)) = f.sigma(static_cast<Index>(i));
    break;
  case EstimatorMethod::Soft:
    soft_values(e.lambda ? *e.lambda
                         : soft_threshold_fit(ctx.Y, f, model, objective, out.clamp, opts));
    break;
  case EstimatorMethod::OracleSoft:
    soft_values(oracle_soft_threshold(ctx.point.X, ctx.Y, model, out.clamp));
    break;
  case EstimatorMethod::Weights: {
    const Family fam = family(model);
    std::optional<double> w1;
    std::optional<ShrinkagePlan> plan;
    if (e.fit != WeightFit::Greedy) {
      if (fam == Family::Gaussian && objective == RiskKind::SURE)
        plan = weights_gaussian(f, std::get<Gaussian>(model).tau, active);
      else if (rank1 && fam == Family::Gamma && objective == RiskKind::SUKLS)
        w1 = weight1_gamma_sukls(ctx.Y, f, std::get<Gamma>(model).L, has1);
      else if (rank1 && fam == Family::Poisson && objective == RiskKind::PUKLA)
        w1 = weight1_poisson_pukla(ctx.Y, f, has1);
      else if (rank1 && fam == Family::Poisson && objective == RiskKind::PURE &&
               e.mode == FitMode::Exact)
        w1 = weight1_poisson_pure_exact(ctx.Y, f, has1);
      else if (e.fit == WeightFit::ClosedForm)
        throw ParameterError("no closed-form weights for estimator '" + e.tag + "'");
    }
    if (!plan && !w1)
      plan = optimize_weights_greedy(ctx.Y, f, model, objective, active, out.clamp, opts);
    if (w1)
      out.values(0) = *w1 * f.sigma(0);
    else
      for (Index i = 0; i < k; ++i)
        out.values(i) = plan->weights[static_cast<std::size_t>(i)] * f.sigma(i);
    break;
  }
  case EstimatorMethod::Asymptotic:
    for (std::size_t i : active) {
      const auto c = static_cast<Index>(i);
      out.values(c) = reg.scale * rmt::shrinker_gd(f.sigma(c) / reg.scale, reg.c);
    }
    break;
  case EstimatorMethod::OracleWeights:
    for (std::size_t i : active)
      out.values(static_cast<Index>(i)) = ctx.proj(static_cast<Index>(i));
    break;
  case EstimatorMethod::OracleShrinker: {
    const std::vector<double> sig = true_sigmas(ctx.point.signal, ctx.config.n, ctx.config.m);
    for (std::size_t i : active)
      if (i < sig.size())
        out.values(static_cast<Index>(i)) =
            reg.scale * rmt::shrinker_sigma(sig[i] / reg.scale, reg.c);
    break;
  }
  }
  return out;
}

double evaluate_metric(const std::string &name, const Fitted &fitted, const Context &ctx,
                       std::optional<Matrix> &estimate) {
  if (name == "sigma1_hat")
    return fitted.values(0);
  if (name == "w1")
    return ctx.f.sigma(0) > 0.0 ? fitted.values(0) / ctx.f.sigma(0) : 0.0;
  const MetricKind kind = parse_metric_kind(name);
  if (kind == MetricKind::NMSE && !fitted.clamp) {
    const double se = fitted.values.squaredNorm() - 2.0 * fitted.values.dot(ctx.proj) +
                      ctx.point.signal_norm2;
    if (!(ctx.point.signal_norm2 > 0.0))
      throw DomainError("NMSE undefined for a zero signal");
    return std::max(se, 0.0) / ctx.point.signal_norm2;
  }
  if (!estimate)
    estimate = spectral_reconstruct(ctx.f, fitted.values, fitted.clamp);
  return metric(kind, *estimate, ctx.point.X, ctx.point.model);
}

Point make_point(const ExperimentConfig &cfg, std::optional<double> value) {
  Point p;
  p.value = value;
  p.model = cfg.model;
  p.signal = cfg.signal;
  if (value) {
    if (cfg.sweep == SweepParam::Sigma1)
      std::get<SpikedSignal>(p.signal).sigmas.at(0) = *value;
    else if (cfg.sweep == SweepParam::TrueRank)
      std::get<EqualSpikesSignal>(p.signal).rank = static_cast<std::size_t>(std::llround(*value));
  }
  p.X = generate_signal(p.signal, cfg.n, cfg.m);
  if (value) {
    if (cfg.sweep == SweepParam::Tau)
      p.model = Gaussian{*value};
    else if (cfg.sweep == SweepParam::Rsnr)
      p.model = Gaussian{rsnr(p.X, 1.0) / *value};
  }
  validate(p.model);
  p.signal_norm2 = p.X.squaredNorm();
  return p;
}

} // namespace

std::string to_string(SweepParam p) {
  switch (p) {
  case SweepParam::None:
    return "none";
  case SweepParam::Sigma1:
    return "sigma1";
  case SweepParam::Rank:
    return "rank";
  case SweepParam::TrueRank:
    return "true_rank";
  case SweepParam::Rsnr:
    return "rsnr";
  case SweepParam::Tau:
    return "tau";
  }
  return "none";
}

Matrix singular_vectors(Index len, std::size_t count, VectorRecipe recipe, Rng &rng) {
  if (static_cast<Index>(count) > len)
    throw ParameterError("more singular vectors requested than the dimension allows");
  Matrix Q(len, static_cast<Index>(count));
  std::normal_distribution<double> nd;
  for (Index k = 0; k < Q.cols(); ++k)
    for (Index i = 0; i < len; ++i) {
      const double t = static_cast<double>(i + 1) / static_cast<double>(len);
      if (recipe == VectorRecipe::Quadratic) {
        const double base = 1.0 - (t - 0.5) * (t - 0.5);
        Q(i, k) = k == 0 ? base
                         : base * std::cos(std::numbers::pi * static_cast<double>(k) *
                                           (static_cast<double>(i) + 0.5) /
                                           static_cast<double>(len));
      } else {
        Q(i, k) = nd(rng);
      }
    }
  orthonormalize(Q);
  return Q;
}

Matrix generate_signal(const SignalSpec &spec, Index n, Index m) {
  if (n < 1 || m < 1)
    throw DimensionError("signal dimensions must be positive");
  return std::visit(
      [n, m](const auto &s) -> Matrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExplicitSignal>) {
          if (s.X.rows() != n || s.X.cols() != m)
            throw DimensionError("explicit signal has the wrong shape");
          return s.X;
        } else {
          std::vector<double> sig;
          VectorRecipe recipe = s.vectors;
          if constexpr (std::is_same_v<T, SpikedSignal>) {
            sig = s.sigmas;
            for (std::size_t i = 0; i < sig.size(); ++i) {
              if (!(sig[i] > 0.0))
                throw ParameterError("spike values must be positive");
              if (i > 0 && !(sig[i] < sig[i - 1]))
                throw ParameterError("spike values must be strictly decreasing");
            }
          } else {
            sig = true_sigmas(s, n, m);
          }
          if (static_cast<Index>(sig.size()) > std::min(n, m))
            throw ParameterError("signal rank exceeds min(n,m)");
          Rng rng(s.seed);
          const Matrix U = singular_vectors(n, sig.size(), recipe, rng);
          const Matrix V = singular_vectors(m, sig.size(), recipe, rng);
          const Vector d = Eigen::Map<const Vector>(sig.data(), static_cast<Index>(sig.size()));
          return U * d.asDiagonal() * V.transpose();
        }
      },
      spec);
}

Matrix generate_observation(const Matrix &X, const NoiseModel &model, Rng &rng) {
  return sample(model, X, rng);
}

double rsnr(const Matrix &X, double tau) {
  if (!(tau > 0.0))
    throw ParameterError("tau must be positive");
  const double mean = X.mean();
  const double ms = (X.array() - mean).square().mean();
  return std::sqrt(ms) / tau;
}

void ExperimentConfig::validate() const {
  if (n < 1 || m < 1 || n > kMaxDimension || m > kMaxDimension)
    config_fail("/n", "dimensions must lie in [1, " + std::to_string(kMaxDimension) + "]");
  if (replications < 1 || replications > kMaxReplications)
    config_fail("/replications",
                "must lie in [1, " + std::to_string(kMaxReplications) + "]");
  try {
    svshrink::validate(model);
  } catch (const std::exception &e) {
    config_fail("/model", e.what());
  }
  if (estimators.empty())
    config_fail("/estimators", "at least one estimator is required");
  const bool gaussian = family(model) == Family::Gaussian;
  const bool spikes = !std::holds_alternative<ExplicitSignal>(signal);
  std::set<std::string> tags;
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    const ExperimentEstimator &e = estimators[i];
    const std::string p = "/estimators/" + std::to_string(i);
    if (e.tag.empty() || !tags.insert(e.tag).second)
      config_fail(p + "/tag", "tags must be nonempty and unique");
    if (needs_gaussian(e) && !gaussian)
      config_fail(p, "method or active set requires the gaussian family");
    if (needs_spikes(e) && !spikes)
      config_fail(p, "method or active set requires a spiked signal");
    if (e.rank_from_sweep && sweep != SweepParam::Rank)
      config_fail(p + "/rank", "\"sweep\" requires a rank sweep");
    if (e.objective) {
      try {
        require_objective(model, *e.objective);
      } catch (const std::exception &ex) {
        config_fail(p + "/objective", ex.what());
      }
    }
    if (e.epsilon && !(*e.epsilon > 0.0))
      config_fail(p + "/epsilon", "must be positive");
    if (e.lambda && !(*e.lambda >= 0.0))
      config_fail(p + "/lambda", "must be nonnegative");
  }
  if (sweep != SweepParam::None && sweep_values.empty())
    config_fail("/sweep/values", "a sweep needs at least one value");
  for (std::size_t i = 0; i < sweep_values.size(); ++i) {
    const double v = sweep_values[i];
    const std::string p = "/sweep/values/" + std::to_string(i);
    if (sweep == SweepParam::Rank || sweep == SweepParam::TrueRank) {
      if (v < 0.0 || v != std::floor(v))
        config_fail(p, "rank values must be nonnegative integers");
    } else if (!(v > 0.0)) {
      config_fail(p, "sweep values must be positive");
    }
  }
  if (const auto *sp = std::get_if<SpikedSignal>(&signal)) {
    for (std::size_t i = 0; i < sp->sigmas.size(); ++i) {
      const std::string p = "/signal/sigmas/" + std::to_string(i);
      if (!(sp->sigmas[i] > 0.0))
        config_fail(p, "spike values must be positive");
      if (i > 0 && !(sp->sigmas[i] < sp->sigmas[i - 1]))
        config_fail(p, "spike values must be strictly decreasing");
    }
    if (static_cast<Index>(sp->sigmas.size()) > std::min(n, m))
      config_fail("/signal/sigmas", "signal rank exceeds min(n,m)");
    if (sweep == SweepParam::Sigma1 && sp->sigmas.size() > 1)
      for (std::size_t i = 0; i < sweep_values.size(); ++i)
        if (!(sweep_values[i] > sp->sigmas[1]))
          config_fail("/sweep/values/" + std::to_string(i),
                      "sigma1 values must exceed the second spike");
  }
  if (const auto *eq = std::get_if<EqualSpikesSignal>(&signal)) {
    std::size_t rank = eq->rank;
    if (sweep == SweepParam::TrueRank)
      for (double v : sweep_values)
        rank = std::max(rank, static_cast<std::size_t>(v));
    if (static_cast<Index>(rank) > std::min(n, m))
      config_fail("/signal/rank", "signal rank exceeds min(n,m)");
  }
  if (sweep == SweepParam::Sigma1 && !std::holds_alternative<SpikedSignal>(signal))
    config_fail("/sweep/param", "sigma1 sweep requires a spiked signal");
  if (sweep == SweepParam::TrueRank && !std::holds_alternative<EqualSpikesSignal>(signal))
    config_fail("/sweep/param", "true_rank sweep requires an equal_spikes signal");
  if ((sweep == SweepParam::Rsnr || sweep == SweepParam::Tau) && !gaussian)
    config_fail("/sweep/param", "noise-level sweeps require the gaussian family");
  if (metrics.empty())
    config_fail("/metrics", "at least one metric is required");
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const std::string &name = metrics[i];
    if (name == "sigma1_hat" || name == "w1")
      continue;
    MetricKind kind;
    try {
      kind = parse_metric_kind(name);
    } catch (const std::exception &e) {
      config_fail("/metrics/" + std::to_string(i), e.what());
    }
    if ((kind == MetricKind::KLS_gamma || kind == MetricKind::MSE_eta_gamma) &&
        family(model) != Family::Gamma)
      config_fail("/metrics/" + std::to_string(i), "metric requires the gamma family");
    if (kind == MetricKind::KLA_poisson && family(model) != Family::Poisson)
      config_fail("/metrics/" + std::to_string(i), "metric requires the poisson family");
  }
}

namespace {

ExperimentEstimator parse_estimator(const json &j, const std::string &p) {
  only_keys(j, p,
            {"tag", "method", "objective", "active_set", "rank", "lambda", "epsilon", "fit",
             "mode"});
  ExperimentEstimator e;
  e.tag = string(require(j, p, "tag"), p + "/tag");
  static const std::map<std::string, EstimatorMethod> methods{
      {"pca", EstimatorMethod::Pca},
      {"soft", EstimatorMethod::Soft},
      {"weights", EstimatorMethod::Weights},
      {"asymptotic", EstimatorMethod::Asymptotic},
      {"oracle_weights", EstimatorMethod::OracleWeights},
      {"oracle_soft", EstimatorMethod::OracleSoft},
      {"oracle_shrinker", EstimatorMethod::OracleShrinker}};
  const std::string method = string(require(j, p, "method"), p + "/method");
  auto it = methods.find(method);
  if (it == methods.end())
    config_fail(p + "/method", "unknown method '" + method + "'");
  e.method = it->second;
  if (j.contains("objective")) {
    try {
      e.objective = parse_risk_kind(string(j["objective"], p + "/objective"));
    } catch (const ConfigError &) {
      throw;
    } catch (const std::exception &ex) {
      config_fail(p + "/objective", ex.what());
    }
  }
  if (j.contains("active_set")) {
    static const std::map<std::string, ActiveSetRule> rules{
        {"all", ActiveSetRule::All},
        {"bulk", ActiveSetRule::Bulk},
        {"greedy", ActiveSetRule::Greedy},
        {"true_rank", ActiveSetRule::TrueRank},
        {"effective_rank", ActiveSetRule::EffectiveRank},
        {"hard_threshold", ActiveSetRule::HardThreshold}};
    const std::string s = string(j["active_set"], p + "/active_set");
    auto r = rules.find(s);
    if (r == rules.end())
      config_fail(p + "/active_set", "unknown active-set rule '" + s + "'");
    e.active_set = r->second;
  }
  if (j.contains("rank")) {
    if (j["rank"].is_string() && j["rank"].get<std::string>() == "sweep") {
      e.rank_from_sweep = true;
    } else {
      const std::int64_t r = integer(j["rank"], p + "/rank");
      if (r < 0)
        config_fail(p + "/rank", "must be nonnegative");
      e.rank = static_cast<std::size_t>(r);
    }
  }
  if (j.contains("lambda"))
    e.lambda = number(j["lambda"], p + "/lambda");
  if (j.contains("epsilon"))
    e.epsilon = number(j["epsilon"], p + "/epsilon");
  if (j.contains("fit")) {
    const std::string s = string(j["fit"], p + "/fit");
    if (s == "auto")
      e.fit = WeightFit::Auto;
    else if (s == "closed_form")
      e.fit = WeightFit::ClosedForm;
    else if (s == "greedy")
      e.fit = WeightFit::Greedy;
    else
      config_fail(p + "/fit", "expected auto, closed_form or greedy");
  }
  if (j.contains("mode")) {
    const std::string s = string(j["mode"], p + "/mode");
    if (s == "exact")
      e.mode = FitMode::Exact;
    else if (s == "approx")
      e.mode = FitMode::Approx;
    else
      config_fail(p + "/mode", "expected exact or approx");
  }
  return e;
}

std::uint64_t parse_seed(const json &j, const std::string &p) {
  const std::int64_t v = integer(j, p);
  if (v < 0)
    config_fail(p, "seeds must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

SignalSpec parse_signal(const json &j, const std::string &p, std::uint64_t root_seed,
                        const std::string &base_dir) {
  const std::string kind = string(require(j, p, "kind"), p + "/kind");
  const std::uint64_t default_seed = mix64(root_seed ^ kSignalStream);
  if (kind == "spiked") {
    only_keys(j, p, {"kind", "sigmas", "vectors", "seed"});
    SpikedSignal s;
    const json &sig = require(j, p, "sigmas");
    if (!sig.is_array() || sig.empty())
      config_fail(p + "/sigmas", "expected a nonempty array");
    for (std::size_t i = 0; i < sig.size(); ++i)
      s.sigmas.push_back(number(sig[i], p + "/sigmas/" + std::to_string(i)));
    s.vectors = j.contains("vectors") ? parse_recipe(j["vectors"], p + "/vectors")
                                      : VectorRecipe::GramSchmidt;
    s.seed = j.contains("seed") ? parse_seed(j["seed"], p + "/seed") : default_seed;
    return s;
  }
  if (kind == "equal_spikes") {
    only_keys(j, p, {"kind", "rank", "gamma", "scale", "vectors", "seed"});
    EqualSpikesSignal s;
    const std::int64_t r = integer(require(j, p, "rank"), p + "/rank");
    if (r < 0)
      config_fail(p + "/rank", "must be nonnegative");
    s.rank = static_cast<std::size_t>(r);
    s.gamma = number(require(j, p, "gamma"), p + "/gamma");
    if (j.contains("scale"))
      s.scale = number(j["scale"], p + "/scale");
    s.vectors = j.contains("vectors") ? parse_recipe(j["vectors"], p + "/vectors")
                                      : VectorRecipe::GramSchmidt;
    s.seed = j.contains("seed") ? parse_seed(j["seed"], p + "/seed") : default_seed;
    return s;
  }
  if (kind == "matrix") {
    only_keys(j, p, {"kind", "path", "rows"});
    ExplicitSignal s;
    if (j.contains("path")) {
      std::filesystem::path path = string(j["path"], p + "/path");
      if (path.is_relative())
        path = std::filesystem::path(base_dir) / path;
      try {
        s.X = read_matrix_file(path.string());
      } catch (const std::exception &e) {
        config_fail(p + "/path", e.what());
      }
    } else {
      const json &rows = require(j, p, "rows");
      if (!rows.is_array() || rows.empty() || !rows[0].is_array())
        config_fail(p + "/rows", "expected a nonempty array of rows");
      s.X.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string rp = p + "/rows/" + std::to_string(i);
        if (!rows[i].is_array() || rows[i].size() != rows[0].size())
          config_fail(rp, "rows must have equal length");
        for (std::size_t c = 0; c < rows[i].size(); ++c)
          s.X(static_cast<Index>(i), static_cast<Index>(c)) =
              number(rows[i][c], rp + "/" + std::to_string(c));
      }
    }
    return s;
  }
  config_fail(p + "/kind", "expected spiked, equal_spikes or matrix");
}

} // namespace

ExperimentConfig parse_config(const json &j, const std::string &base_dir) {
  only_keys(j, "", {"n", "m", "model", "signal", "estimators", "replications", "root_seed",
                    "sweep", "metrics", "description"});
  ExperimentConfig c;
  c.n = static_cast<Index>(integer(require(j, "", "n"), "/n"));
  c.m = static_cast<Index>(integer(require(j, "", "m"), "/m"));
  c.model = model_from_json(require(j, "", "model"), "/model");
  if (j.contains("root_seed"))
    c.root_seed = parse_seed(j["root_seed"], "/root_seed");
  c.signal = parse_signal(require(j, "", "signal"), "/signal", c.root_seed, base_dir);
  if (const auto *s = std::get_if<ExplicitSignal>(&c.signal))
    if (s->X.rows() != c.n || s->X.cols() != c.m)
      config_fail("/signal", "matrix shape does not match n and m");
  const json &ests = require(j, "", "estimators");
  if (!ests.is_array())
    config_fail("/estimators", "expected an array");
  for (std::size_t i = 0; i < ests.size(); ++i)
    c.estimators.push_back(parse_estimator(ests[i], "/estimators/" + std::to_string(i)));
  if (j.contains("replications"))
    c.replications = static_cast<int>(integer(j["replications"], "/replications"));
  if (j.contains("sweep")) {
    const json &s = j["sweep"];
    only_keys(s, "/sweep", {"param", "values", "range"});
    const std::string param = string(require(s, "/sweep", "param"), "/sweep/param");
    static const std::map<std::string, SweepParam> params{
        {"none", SweepParam::None},   {"sigma1", SweepParam::Sigma1},
        {"rank", SweepParam::Rank},   {"true_rank", SweepParam::TrueRank},
        {"rsnr", SweepParam::Rsnr},   {"tau", SweepParam::Tau}};
    auto it = params.find(param);
    if (it == params.end())
      config_fail("/sweep/param", "unknown sweep parameter '" + param + "'");
    c.sweep = it->second;
    if (s.contains("values")) {
      const json &v = s["values"];
      if (!v.is_array())
        config_fail("/sweep/values", "expected an array");
      for (std::size_t i = 0; i < v.size(); ++i)
        c.sweep_values.push_back(number(v[i], "/sweep/values/" + std::to_string(i)));
    }
    if (s.contains("range")) {
      const json &r = s["range"];
      if (!r.is_array() || r.size() != 3)
        config_fail("/sweep/range", "expected [from, to, step]");
      const double from = number(r[0], "/sweep/range/0");
      const double to = number(r[1], "/sweep/range/1");
      const double step = number(r[2], "/sweep/range/2");
      if (!(step > 0.0) || to < from)
        config_fail("/sweep/range", "need step > 0 and to >= from");
      const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
      for (long i = 0; i < count; ++i)
        c.sweep_values.push_back(from + static_cast<double>(i) * step);
    }
  }
  if (j.contains("metrics")) {
    const json &ms = j["metrics"];
    if (!ms.is_array())
      config_fail("/metrics", "expected an array");
    c.metrics.clear();
    for (std::size_t i = 0; i < ms.size(); ++i)
      c.metrics.push_back(string(ms[i], "/metrics/" + std::to_string(i)));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("at /: invalid JSON: ") + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(j, dir.empty() ? std::string(".") : dir.string());
}

double quantile(std::vector<double> values, double q) {
  if (values.empty())
    throw ParameterError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw ParameterError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ExperimentResult run_experiment(const ExperimentConfig &config, unsigned threads) {
  config.validate();
  std::vector<Point> points;
  if (config.sweep == SweepParam::None) {
    points.push_back(make_point(config, std::nullopt));
  } else {
    for (double v : config.sweep_values)
      points.push_back(make_point(config, v));
  }
  const std::size_t P = points.size();
  const std::size_t E = config.estimators.size();
  const std::size_t K = config.metrics.size();
  const auto M = static_cast<std::size_t>(config.replications);
  const bool regenerate = data_depends_on_sweep(config.sweep);

  // cells[((p * E + e) * M + r) * K + k]
  std::vector<std::optional<double>> cells(P * E * M * K);
  std::vector<std::optional<std::string>> failed(P * M);

  auto run_replication = [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(config.root_seed, r);
    std::optional<Matrix> Y;
    std::optional<Svd> f;
    for (std::size_t p = 0; p < P; ++p) {
      const Point &pt = points[p];
      try {
        if (!Y || regenerate) {
          Rng rng(seed);
          Y = generate_observation(pt.X, pt.model, rng);
          f = svd(*Y);
        }
        const Vector proj = (f->U.transpose() * pt.X * f->V).diagonal();
        const Context ctx{config, pt, *Y, *f, proj, seed};
        std::vector<std::optional<double>> local(E * K);
        for (std::size_t e = 0; e < E; ++e) {
          const Fitted fitted = fit(config.estimators[e], e, ctx);
          std::optional<Matrix> estimate;
          for (std::size_t k = 0; k < K; ++k)
            local[e * K + k] = evaluate_metric(config.metrics[k], fitted, ctx, estimate);
        }
        for (std::size_t e = 0; e < E; ++e)
          for (std::size_t k = 0; k < K; ++k)
            cells[((p * E + e) * M + r) * K + k] = local[e * K + k];
      } catch (const std::exception &ex) {
        failed[p * M + r] = ex.what();
        if (!regenerate) {
          Y.reset();
          f.reset();
        }
      }
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(M)));
  if (workers == 1) {
    for (std::size_t r = 0; r < M; ++r)
      run_replication(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        try {
          for (std::size_t r = next++; r < M; r = next++)
            run_replication(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          error = std::current_exception();
        }
      });
    for (auto &th : pool)
      th.join();
    if (error)
      std::rethrow_exception(error);
  }

  ExperimentResult result;
  result.sweep = config.sweep;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t r = 0; r < M; ++r)
      if (failed[p * M + r])
        result.failures.push_back(
            {points[p].value, static_cast<int>(r), *failed[p * M + r]});
  if (static_cast<double>(result.failures.size()) > 0.1 * static_cast<double>(P * M))
    throw ExperimentAborted("experiment aborted: " + std::to_string(result.failures.size()) +
                            " of " + std::to_string(P * M) +
                            " replications failed; first failure: " +
                            result.failures.front().message);

  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t r = 0; r < M; ++r)
        for (std::size_t k = 0; k < K; ++k)
          if (const auto &v = cells[((p * E + e) * M + r) * K + k])
            result.records.push_back({points[p].value, config.estimators[e].tag,
                                      static_cast<int>(r), derive_seed(config.root_seed, r),
                                      config.metrics[k], *v});
      for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> sample;
        for (std::size_t r = 0; r < M; ++r)
          if (const auto &v = cells[((p * E + e) * M + r) * K + k])
            sample.push_back(*v);
        if (sample.empty())
          continue;
        Summary s;
        s.sweep_value = points[p].value;
        s.estimator = config.estimators[e].tag;
        s.metric = config.metrics[k];
        s.median = quantile(sample, 0.5);
        s.q10 = quantile(sample, 0.1);
        s.q90 = quantile(sample, 0.9);
        s.count = sample.size();
        result.summaries.push_back(std::move(s));
      }
    }
  return result;
}

void write_records_csv(const ExperimentResult &result, std::ostream &out) {
  out << "sweep_param,estimator,replication,metric_name,value\n";
  for (const Record &r : result.records) {
    if (r.sweep_value)
      out << format_double(*r.sweep_value);
    out << ',' << r.estimator << ',' << r.replication << ',' << r.metric << ','
        << format_double(r.value) << '\n';
  }
}

json summary_json(const ExperimentResult &result) {
  json summaries = json::array();
  for (const Summary &s : result.summaries) {
    json e{{"estimator", s.estimator}, {"metric", s.metric},   {"median", s.median},
           {"q10", s.q10},             {"q90", s.q90},         {"count", s.count}};
    e["sweep_value"] = s.sweep_value ? json(*s.sweep_value) : json(nullptr);
    summaries.push_back(std::move(e));
  }
  json failures = json::array();
  for (const Failure &f : result.failures)
    failures.push_back({{"sweep_value", f.sweep_value ? json(*f.sweep_value) : json(nullptr)},
                        {"replication", f.replication},
                        {"message", f.message}});
  return {{"sweep_param", to_string(result.sweep)},
          {"summaries", summaries},
          {"failures", failures}};
}

} // namespace svshrink

#include "svshrink/activeset.hpp"
#include "svshrink/errors.hpp"
#include "svshrink/experiments.hpp"
#include "svshrink/matrix_io.hpp"
#include "svshrink/rmt.hpp"
#include "svshrink/serialize.hpp"
#include "svshrink/shrinkage.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace svshrink;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;

/// Invalid flag combination or unreadable input.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char *kValidPairs =
    "valid family/objective pairs: gaussian/sure, gamma/gsure, gamma/sukls, poisson/pure, "
    "poisson/pukla";

struct DenoiseArgs {
  std::string input;
  std::string family;
  std::optional<double> tau;
  std::optional<double> L;
  std::string method = "weights";
  std::optional<std::string> objective;
  std::optional<std::size_t> rank;
  std::optional<std::string> active_set;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
  int samples = 10;
  std::string mode = "approx";
  std::string output;
  std::optional<std::string> sidecar;
};

struct ActiveSetArgs {
  std::string input;
  std::string family;
  std::optional<double> tau;
  std::optional<double> L;
  std::optional<std::string> method;
  std::optional<double> epsilon;
  std::optional<std::string> output;
};

struct ExperimentArgs {
  std::string config;
  std::string out_dir;
  unsigned threads = 1;
};

struct AsymptoticsArgs {
  double c = 1.0;
  std::optional<double> sigma;
  std::optional<double> y;
};

NoiseModel build_model(const std::string &family, std::optional<double> tau,
                       std::optional<double> L) {
  if (family == "gaussian") {
    if (!tau)
      throw UsageError("--family gaussian requires --tau");
    if (L)
      throw UsageError("--L applies to --family gamma only");
    return Gaussian{*tau};
  }
  if (family == "gamma") {
    if (!L)
      throw UsageError("--family gamma requires --L");
    if (tau)
      throw UsageError("--tau applies to --family gaussian only");
    return Gamma{*L};
  }
  if (tau || L)
    throw UsageError("--family poisson takes neither --tau nor --L");
  return Poisson{};
}

Matrix load_input(const std::string &path) {
  if (!std::filesystem::exists(path))
    throw UsageError("input file '" + path + "' does not exist");
  return read_matrix_file(path);
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

RiskEstimate estimate_risk(const Matrix &Y, const SpectralEstimator &est, const NoiseModel &model,
                           RiskKind objective, FitMode mode, int samples, std::uint64_t seed) {
  Rng rng(seed);
  switch (objective) {
  case RiskKind::SURE:
    return sure_gaussian(Y, est, std::get<Gaussian>(model).tau);
  case RiskKind::GSURE:
    return gsure_gamma(Y, est, std::get<Gamma>(model).L, samples, rng);
  case RiskKind::SUKLS:
    return sukls_gamma(Y, est, std::get<Gamma>(model).L, samples, rng);
  case RiskKind::PURE:
    if (mode == FitMode::Exact)
      return pure_poisson(Y, est, ExactMode{});
    return pure_poisson(Y, est, ApproxMode{samples, seed});
  case RiskKind::PUKLA:
    if (mode == FitMode::Exact)
      return pukla_poisson(Y, est, ExactMode{});
    return pukla_poisson(Y, est, ApproxMode{samples, seed});
  }
  throw UsageError("unknown objective");
}

int run_denoise(const DenoiseArgs &a) {
  const auto start = std::chrono::steady_clock::now();
  const NoiseModel model = build_model(a.family, a.tau, a.L);
  RiskKind objective = default_objective(model);
  if (a.objective) {
    try {
      objective = parse_risk_kind(*a.objective);
    } catch (const std::exception &) {
      throw UsageError("unknown objective '" + *a.objective + "'");
    }
  }
  try {
    require_objective(model, objective);
  } catch (const UnsupportedFamilyError &) {
    throw UsageError("objective " + to_string(objective) + " is invalid for family " + a.family +
                     "; " + kValidPairs);
  }
  if (a.rank && a.active_set)
    throw UsageError("--rank and --active-set are mutually exclusive");
  const std::string rule =
      a.active_set ? *a.active_set : (family(model) == Family::Gaussian ? "bulk" : "greedy");
  if (rule == "bulk" && family(model) != Family::Gaussian)
    throw UsageError("--active-set bulk needs the gaussian family (noise level tau)");
  const FitMode mode = a.mode == "exact" ? FitMode::Exact : FitMode::Approx;
  if (a.samples < 1)
    throw UsageError("--samples must be at least 1");

  const Matrix Y = load_input(a.input);
  validate(model);
  require_support(model, Y);
  const Svd f = svd(Y);
  const auto k = static_cast<std::size_t>(f.size());
  if (a.rank && *a.rank > k)
    throw UsageError("--rank exceeds min(n,m) = " + std::to_string(k));
  const std::optional<double> eps =
      family(model) == Family::Gaussian ? std::nullopt
                                        : std::optional<double>(a.epsilon.value_or(kDefaultEpsilon));

  std::vector<std::size_t> active;
  if (a.rank)
    active = leading_set(*a.rank);
  else if (rule == "all")
    active = leading_set(k);
  else if (rule == "bulk")
    active = active_set_gaussian(f, std::get<Gaussian>(model).tau).selected;
  else
    active = active_set_greedy(Y, f, model, eps).selected;

  json side;
  side["family"] = a.family;
  side["method"] = a.method;
  side["model"] = to_json(model);
  side["active_set"] = indices_to_json(active);
  std::optional<SpectralEstimator> est;
  if (a.method == "pca") {
    ShrinkagePlan plan = ShrinkagePlan::empty(k);
    plan.active = active;
    for (std::size_t i : active)
      plan.weights[i] = 1.0;
    est = SpectralEstimator::weighted(plan.weights, eps);
    side["weights"] = plan.weights;
  } else if (a.method == "soft") {
    FitOptions opts;
    opts.seed = a.seed;
    opts.mode = mode;
    const double lambda = soft_threshold_fit(Y, f, model, objective, eps, opts);
    est = SpectralEstimator::soft_threshold(lambda, eps);
    side["lambda"] = lambda;
  } else {
    const bool rank1 =
        std::all_of(active.begin(), active.end(), [](std::size_t i) { return i == 0; });
    const bool has1 = !active.empty();
    ShrinkagePlan plan = ShrinkagePlan::empty(k);
    plan.active = active;
    plan.clamp_floor = eps;
    std::optional<double> w1;
    if (objective == RiskKind::SURE) {
      plan = weights_gaussian(f, std::get<Gaussian>(model).tau, active);
    } else if (rank1 && objective == RiskKind::SUKLS) {
      w1 = weight1_gamma_sukls(Y, f, std::get<Gamma>(model).L, has1);
    } else if (rank1 && objective == RiskKind::PUKLA) {
      w1 = weight1_poisson_pukla(Y, f, has1);
    } else if (rank1 && objective == RiskKind::PURE && mode == FitMode::Exact) {
      w1 = weight1_poisson_pure_exact(Y, f, has1);
    } else {
      FitOptions opts;
      opts.seed = a.seed;
      opts.mode = mode;
      plan = optimize_weights_greedy(Y, f, model, objective, active, eps, opts);
    }
    if (w1 && has1)
      plan.weights[0] = *w1;
    est = SpectralEstimator::weighted(plan.weights, eps);
    side["weights"] = plan.weights;
  }
  side["objective"] = to_string(objective);
  if (eps)
    side["epsilon"] = *eps;

  const Matrix Xhat = est->evaluate(f).estimate;
  side["risk"] = to_json(estimate_risk(Y, *est, model, objective, mode, a.samples, a.seed));
  write_matrix_file(a.output, Xhat);
  const auto stop = std::chrono::steady_clock::now();
  side["timing"] = {{"seconds", std::chrono::duration<double>(stop - start).count()}};
  const std::string sidecar = a.sidecar ? *a.sidecar : a.output + ".json";
  std::ofstream out(sidecar);
  if (!out)
    throw UsageError("cannot write sidecar '" + sidecar + "'");
  out << side.dump(2) << '\n';
  return kExitOk;
}

int run_activeset(const ActiveSetArgs &a) {
  const NoiseModel model = build_model(a.family, a.tau, a.L);
  const std::string method =
      a.method ? *a.method : (family(model) == Family::Gaussian ? "bulk" : "greedy");
  if (method == "bulk" && family(model) != Family::Gaussian)
    throw UsageError("--method bulk needs the gaussian family (noise level tau)");
  const Matrix Y = load_input(a.input);
  validate(model);
  require_support(model, Y);
  const Svd f = svd(Y);
  const std::optional<double> eps =
      family(model) == Family::Gaussian ? std::nullopt
                                        : std::optional<double>(a.epsilon.value_or(kDefaultEpsilon));
  const ActiveSetReport report = method == "bulk" ? active_set_gaussian(f, *a.tau)
                                                  : active_set_greedy(Y, f, model, eps);
  json j = to_json(report);
  if (const auto *g = std::get_if<Gaussian>(&model)) {
    const double lo = static_cast<double>(std::min(Y.rows(), Y.cols()));
    const double hi = static_cast<double>(std::max(Y.rows(), Y.cols()));
    j["rank_bulk"] = rank_bulk(f, g->tau);
    j["rank_hard_threshold"] = rank_hard_threshold(f, lo / hi, std::sqrt(hi) * g->tau);
  }
  if (a.output) {
    std::ofstream out(*a.output);
    if (!out)
      throw UsageError("cannot write '" + *a.output + "'");
    out << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
  return kExitOk;
}

int run_experiment_cmd(const ExperimentArgs &a) {
  if (!std::filesystem::exists(a.config))
    throw UsageError("config file '" + a.config + "' does not exist");
  const ExperimentConfig config = load_config(a.config);
  const ExperimentResult result = run_experiment(config, a.threads);
  std::filesystem::create_directories(a.out_dir);
  const auto dir = std::filesystem::path(a.out_dir);
  std::ofstream records(dir / "records.csv");
  if (!records)
    throw UsageError("cannot write into '" + a.out_dir + "'");
  write_records_csv(result, records);
  std::ofstream summary(dir / "summary.json");
  summary << summary_json(result).dump(2) << '\n';
  return kExitOk;
}

int run_asymptotics(const AsymptoticsArgs &a) {
  rmt::require_aspect(a.c);
  if (a.sigma.has_value() == a.y.has_value())
    throw UsageError("exactly one of --sigma and --y is required");
  const double edge = 1.0 + std::sqrt(a.c);
  const double threshold = std::pow(a.c, 0.25);
  json j;
  j["c"] = a.c;
  double y = 0.0;
  std::optional<double> sigma;
  if (a.sigma) {
    if (!(*a.sigma > 0.0))
      throw DomainError("--sigma must be positive");
    sigma = *a.sigma;
    y = rmt::rho(*sigma, a.c);
  } else {
    if (!(*a.y >= 0.0))
      throw DomainError("--y must be nonnegative");
    y = *a.y;
    if (y > edge)
      sigma = rmt::sigma_from_rho(y, a.c);
  }
  const bool detectable = sigma && *sigma > threshold;
  j["sigma"] = sigma ? json(*sigma) : json(nullptr);
  j["rho"] = y;
  j["shrinker_gd"] = rmt::shrinker_gd(y, a.c);
  j["shrinker_sigma"] = sigma ? rmt::shrinker_sigma(*sigma, a.c) : 0.0;
  j["optimal_weight"] = detectable ? rmt::asymptotic_optimal_weight(*sigma, a.c) : 0.0;
  j["g_mp_at_rho_sq"] = y >= edge ? json(rmt::mp_cauchy(y * y, a.c)) : json(nullptr);
  if (detectable) {
    const double f = rmt::shrinker_sigma(*sigma, a.c);
    const double s = *sigma;
    j["dof_term"] = rmt::asymptotic_dof(std::span<const double>(&f, 1),
                                        std::span<const double>(&s, 1), a.c);
  } else {
    j["dof_term"] = 0.0;
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Low-rank matrix denoising by singular-value shrinkage"};
  app.require_subcommand(1);

  DenoiseArgs d;
  auto *den = app.add_subcommand("denoise", "Denoise a matrix file");
  den->add_option("--input", d.input, "Observation matrix (CSV or binary)")->required();
  den->add_option("--family", d.family, "Noise family")
      ->required()
      ->check(CLI::IsMember({"gaussian", "gamma", "poisson"}));
  den->add_option("--tau", d.tau, "Gaussian noise standard deviation");
  den->add_option("--L", d.L, "Gamma shape parameter");
  den->add_option("--method", d.method, "Estimator")
      ->check(CLI::IsMember({"pca", "soft", "weights"}));
  den->add_option("--objective", d.objective, "Risk estimate to minimize")
      ->check(CLI::IsMember({"sure", "gsure", "sukls", "pure", "pukla"}));
  den->add_option("--rank", d.rank, "Keep the leading K singular values");
  den->add_option("--active-set", d.active_set, "Active-set rule")
      ->check(CLI::IsMember({"bulk", "greedy", "all"}));
  den->add_option("--epsilon", d.epsilon, "Positivity floor for gamma and poisson")
      ->check(CLI::PositiveNumber);
  den->add_option("--seed", d.seed, "Seed of Monte-Carlo directions");
  den->add_option("--samples", d.samples, "Monte-Carlo directions for the reported risk");
  den->add_option("--mode", d.mode, "Poisson risk evaluation")
      ->check(CLI::IsMember({"exact", "approx"}));
  den->add_option("--output", d.output, "Denoised matrix path")->required();
  den->add_option("--sidecar", d.sidecar, "JSON sidecar path (default <output>.json)");

  ActiveSetArgs s;
  auto *act = app.add_subcommand("activeset", "Select the active set of singular values");
  act->add_option("--input", s.input, "Observation matrix (CSV or binary)")->required();
  act->add_option("--family", s.family, "Noise family")
      ->required()
      ->check(CLI::IsMember({"gaussian", "gamma", "poisson"}));
  act->add_option("--tau", s.tau, "Gaussian noise standard deviation");
  act->add_option("--L", s.L, "Gamma shape parameter");
  act->add_option("--method", s.method, "Selection rule")->check(CLI::IsMember({"bulk", "greedy"}));
  act->add_option("--epsilon", s.epsilon, "Positivity floor for gamma and poisson")
      ->check(CLI::PositiveNumber);
  act->add_option("--output", s.output, "JSON report path (default stdout)");

  ExperimentArgs e;
  auto *exp = app.add_subcommand("experiment", "Run a replication sweep from a JSON config");
  exp->add_option("--config", e.config, "Experiment configuration")->required();
  exp->add_option("--out-dir", e.out_dir, "Output directory")->required();
  exp->add_option("--threads", e.threads, "Worker threads")->check(CLI::PositiveNumber);

  AsymptoticsArgs r;
  auto *asy = app.add_subcommand("asymptotics", "Spiked-model limits for one spike");
  asy->add_option("--c", r.c, "Aspect ratio n/m in (0,1]")->required();
  auto *sig = asy->add_option("--sigma", r.sigma, "True spike");
  auto *yv = asy->add_option("--y", r.y, "Observed singular value");
  sig->excludes(yv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*den)
      return run_denoise(d);
    if (*act)
      return run_activeset(s);
    if (*exp)
      return run_experiment_cmd(e);
    return run_asymptotics(r);
  } catch (const UsageError &err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError &err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitDomain;
  }
}

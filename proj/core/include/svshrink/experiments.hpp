#pragma once

#include "svshrink/linalg.hpp"
#include "svshrink/metrics.hpp"
#include "svshrink/models.hpp"
#include "svshrink/risk.hpp"
#include "svshrink/rng.hpp"
#include "svshrink/shrinkage.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace svshrink {

/// A run aborted because too many replications failed.
class ExperimentAborted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr Index kMaxDimension = 500;
inline constexpr int kMaxReplications = 2000;

enum class VectorRecipe { Quadratic, GramSchmidt };

/// sum_k sigma_k u_k v_k^t with fixed singular vectors.
struct SpikedSignal {
  std::vector<double> sigmas;
  VectorRecipe vectors = VectorRecipe::GramSchmidt;
  std::uint64_t seed = 0;
};

/// rank spikes all equal to scale * gamma * c^{1/4}, c = min(n,m)/max(n,m).
struct EqualSpikesSignal {
  std::size_t rank = 1;
  double gamma = 1.0;
  double scale = 1.0;
  VectorRecipe vectors = VectorRecipe::GramSchmidt;
  std::uint64_t seed = 0;
};

struct ExplicitSignal {
  Matrix X;
};

using SignalSpec = std::variant<SpikedSignal, EqualSpikesSignal, ExplicitSignal>;

/// Unit vectors of length `len`: the first proportional to 1 - (i/len - 1/2)^2
/// (Quadratic) or Gaussian (GramSchmidt), the rest orthonormalized against it.
Matrix singular_vectors(Index len, std::size_t count, VectorRecipe recipe, Rng &rng);

Matrix generate_signal(const SignalSpec &spec, Index n, Index m);
Matrix generate_observation(const Matrix &X, const NoiseModel &model, Rng &rng);

/// Root of the mean squared deviation from the grand mean, divided by tau.
double rsnr(const Matrix &X, double tau);

enum class EstimatorMethod {
  Pca,
  Soft,
  Weights,
  Asymptotic,
  OracleWeights,
  OracleSoft,
  OracleShrinker
};

enum class ActiveSetRule { All, Bulk, Greedy, TrueRank, EffectiveRank, HardThreshold };

enum class WeightFit { Auto, ClosedForm, Greedy };

struct ExperimentEstimator {
  std::string tag;
  EstimatorMethod method = EstimatorMethod::Pca;
  /// Defaults to the family's first objective (sure, sukls, pukla).
  std::optional<RiskKind> objective;
  ActiveSetRule active_set = ActiveSetRule::All;
  /// Leading-index limit; unset means min(n,m).
  std::optional<std::size_t> rank;
  /// Take the rank limit from the sweep value.
  bool rank_from_sweep = false;
  /// Fixed threshold for Soft; fitted when unset.
  std::optional<double> lambda;
  /// Defaults to the family clamp.
  std::optional<double> epsilon;
  WeightFit fit = WeightFit::Auto;
  FitMode mode = FitMode::Approx;
};

enum class SweepParam { None, Sigma1, Rank, TrueRank, Rsnr, Tau };

std::string to_string(SweepParam p);

struct ExperimentConfig {
  Index n = 0;
  Index m = 0;
  NoiseModel model = Gaussian{};
  SignalSpec signal = SpikedSignal{};
  std::vector<ExperimentEstimator> estimators;
  int replications = 1;
  std::uint64_t root_seed = 0;
  SweepParam sweep = SweepParam::None;
  std::vector<double> sweep_values;
  /// NMSE, KLS_gamma, KLA_poisson, MSE_eta_gamma, plus sigma1_hat and w1
  /// (first estimated singular value and its weight).
  std::vector<std::string> metrics{"NMSE"};

  void validate() const;
};

/// Relative matrix paths in the signal resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json &j, const std::string &base_dir = ".");
ExperimentConfig load_config(const std::string &path);

struct Record {
  std::optional<double> sweep_value;
  std::string estimator;
  int replication = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

struct Summary {
  std::optional<double> sweep_value;
  std::string estimator;
  std::string metric;
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  std::size_t count = 0;
};

struct Failure {
  std::optional<double> sweep_value;
  int replication = 0;
  std::string message;
};

struct ExperimentResult {
  SweepParam sweep = SweepParam::None;
  std::vector<Record> records;
  std::vector<Summary> summaries;
  std::vector<Failure> failures;
};

/// Quantile by linear interpolation on the sorted sample (q in [0,1]).
double quantile(std::vector<double> values, double q);

/// Replication i draws its noise from derive_seed(root_seed, i) at every sweep
/// point; output does not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig &config, unsigned threads = 1);

void write_records_csv(const ExperimentResult &result, std::ostream &out);
nlohmann::json summary_json(const ExperimentResult &result);

} // namespace svshrink

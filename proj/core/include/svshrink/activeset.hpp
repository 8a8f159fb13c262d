#pragma once

#include "svshrink/linalg.hpp"
#include "svshrink/models.hpp"

#include <optional>
#include <vector>

namespace svshrink {

enum class ActiveSetMethod { GaussianClosedForm, Greedy };

std::string to_string(ActiveSetMethod m);

struct AicEntry {
  /// Tested index set (zero-based, increasing); left empty for a removal.
  std::vector<std::size_t> set;
  /// When set, the tested set is the full set without this index.
  std::optional<std::size_t> removed;
  double value = 0.0;
};

struct ActiveSetReport {
  std::vector<std::size_t> selected;
  std::vector<AicEntry> aic_values;
  double penalty = 0.0;
  ActiveSetMethod method = ActiveSetMethod::GaussianClosedForm;
};

/// p_{n,m} = (sqrt(m) + sqrt(n))^2 / 2.
double aic_penalty(Index n, Index m);

/// -2 log q(Y; X^s) + 2|s| p_{n,m}, where X^s keeps the singular triplets in s
/// and is floored at epsilon for Gamma and Poisson.
double aic(const Matrix &Y, const Svd &f, const NoiseModel &model,
           const std::vector<std::size_t> &s, std::optional<double> epsilon);
double aic(const Matrix &Y, const NoiseModel &model, const std::vector<std::size_t> &s,
           std::optional<double> epsilon);

/// {k : s_k > tau (sqrt(m) + sqrt(n))}.
ActiveSetReport active_set_gaussian(const Svd &f, double tau);

/// Indices whose single removal from the full set strictly increases AIC.
ActiveSetReport active_set_greedy(const Matrix &Y, const Svd &f, const NoiseModel &model,
                                  std::optional<double> epsilon);
ActiveSetReport active_set_greedy(const Matrix &Y, const NoiseModel &model,
                                  std::optional<double> epsilon);

/// max{k : s_k > tau (sqrt(m) + sqrt(n))}, counting from 1; 0 if none.
std::size_t rank_bulk(const Svd &f, double tau);
/// max{k : s_k > lambda(c) scale}; scale defaults to 1 (noise variance 1/m).
std::size_t rank_hard_threshold(const Svd &f, double c, double scale = 1.0);
/// max{k : sigma_k > c^{1/4}} for the true spikes.
std::size_t rank_effective(const std::vector<double> &sigmas, double c);

/// {0, ..., r-1}.
std::vector<std::size_t> leading_set(std::size_t r);

} // namespace svshrink

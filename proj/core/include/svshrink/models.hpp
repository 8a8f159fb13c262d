#pragma once

#include "svshrink/linalg.hpp"
#include "svshrink/rng.hpp"

#include <string>
#include <variant>

namespace svshrink {

struct Gaussian {
  double tau = 1.0;
};

struct Gamma {
  double L = 1.0;
};

struct Poisson {};

using NoiseModel = std::variant<Gaussian, Gamma, Poisson>;

enum class Family { Gaussian, Gamma, Poisson };

Family family(const NoiseModel &model);
std::string family_name(Family f);
Family parse_family(const std::string &name);

/// Throws ParameterError when tau <= 0 or L <= 0.
void validate(const NoiseModel &model);

/// h'(y)/h(y) and h''(y)/h(y) of the canonical density.
struct FamilyTerms {
  double h_ratio1 = 0.0;
  double h_ratio2 = 0.0;
};

/// Natural parameter theta = eta(x).
double link(const NoiseModel &model, double x);
/// Inverse link x = A'(theta).
double mean_from_natural(const NoiseModel &model, double theta);
/// Log-partition A(theta) and its first two derivatives.
double log_partition(const NoiseModel &model, double theta);
double log_partition_d1(const NoiseModel &model, double theta);
double log_partition_d2(const NoiseModel &model, double theta);
/// Variance of an observation with mean x.
double variance(const NoiseModel &model, double x);

/// log q(y; x) for one entry.
double log_density(const NoiseModel &model, double y, double x);
/// sum_ij log q(Y_ij; X_ij).
double log_likelihood(const NoiseModel &model, const Matrix &Y, const Matrix &X);

/// Independent draws with E[Y_ij] = X_ij.
Matrix sample(const NoiseModel &model, const Matrix &X, Rng &rng);

/// Poisson variate: sequential inversion below mean 10, transformed
/// rejection with squeeze (PTRS) above.
double sample_poisson(double mean, Rng &rng);

/// Continuous families only. With `second` set, Gamma requires L > 2.
FamilyTerms family_terms(const NoiseModel &model, double y, bool second = true);

/// True when Y lies in the support required by the family (positive for
/// Gamma, nonnegative integers for Poisson).
void require_support(const NoiseModel &model, const Matrix &Y);

} // namespace svshrink

#pragma once

#include "svshrink/linalg.hpp"
#include "svshrink/models.hpp"

#include <string>

namespace svshrink {

enum class MetricKind { NMSE, KLS_gamma, KLA_poisson, MSE_eta_gamma };

std::string to_string(MetricKind k);
MetricKind parse_metric_kind(const std::string &name);

/// ||Xhat - X||_F^2.
double squared_error(const Matrix &Xhat, const Matrix &X);
/// ||Xhat - X||_F^2 / ||X||_F^2.
double nmse(const Matrix &Xhat, const Matrix &X);
/// L sum(Xhat/X - log(Xhat/X) - 1).
double kls_gamma(const Matrix &Xhat, const Matrix &X, double L);
/// sum(Xhat - X - X log(Xhat/X)), with 0 log 0 = 0.
double kla_poisson(const Matrix &Xhat, const Matrix &X);
/// L^2 sum((X - Xhat)/(X Xhat))^2, the squared error in the natural parameter.
double mse_eta_gamma(const Matrix &Xhat, const Matrix &X, double L);

/// Dispatches on kind; the Gamma metrics read L from the model.
double metric(MetricKind kind, const Matrix &Xhat, const Matrix &X, const NoiseModel &model);

} // namespace svshrink

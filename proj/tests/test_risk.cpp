#include "support.hpp"

#include "svshrink/errors.hpp"
#include "svshrink/risk.hpp"
#include "svshrink/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace svshrink;
using testing_support::Gen;

namespace {

Vector soft_values(const Vector &s, double lambda) {
  return (s.array() - lambda).cwiseMax(0.0).matrix();
}

Vector soft_derivs(const Vector &s, double lambda) {
  return (s.array() > lambda).cast<double>().matrix();
}

/// Positive quadratic-profile unit vector, independent of the library recipe.
Vector bump(Index len) {
  Vector v(len);
  for (Index i = 0; i < len; ++i) {
    const double t = static_cast<double>(i + 1) / static_cast<double>(len) - 0.5;
    v(i) = 1.0 - t * t;
  }
  return v.normalized();
}

} // namespace

TEST(Divergence, IdentityIsExactlyNm) {
  Gen g(1);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = g.integer(1, 20), m = g.integer(1, 20);
    const Svd f = svd(g.gaussian(n, m));
    const double d = divergence_closed_form(f, f.sigma, Vector::Ones(f.size()));
    EXPECT_NEAR(d, static_cast<double>(n * m), 1e-9 * static_cast<double>(n * m));
  }
}

TEST(Divergence, ZeroMap) {
  Gen g(2);
  const Svd f = svd(g.gaussian(5, 3));
  EXPECT_EQ(divergence_closed_form(f, Vector::Zero(3), Vector::Zero(3)), 0.0);
}

TEST(Divergence, HalfScalingMatchesFiniteDifferences) {
  Gen g(3);
  const Matrix Y = g.gaussian(6, 4);
  const Svd f = svd(Y);
  const double closed = divergence_closed_form(f, 0.5 * f.sigma, Vector::Constant(4, 0.5));
  const double fd = testing_support::fd_divergence(
      [](const Matrix &A) { return testing_support::jacobi_spectral(A, [](double s) { return 0.5 * s; }); },
      Y);
  EXPECT_LT(testing_support::relative_error(closed, fd), 1e-5);
  // A linear map has divergence 0.5 nm.
  EXPECT_NEAR(closed, 12.0, 1e-9);
}

TEST(Divergence, PropertyNonlinearShrinkersMatchFiniteDifferences) {
  Gen g(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = g.integer(3, 8), m = g.integer(3, 8);
    const Matrix Y = g.gaussian(n, m);
    const Svd f = svd(Y);
    // Just below the third singular value: at it exactly the map has a kink.
    const double lambda = f.sigma(2) - 1e-3 * (f.sigma(2) - f.sigma(3));
    const double closed_sq =
        divergence_closed_form(f, f.sigma.array().square().matrix(), 2.0 * f.sigma);
    const double fd_sq = testing_support::fd_divergence(
        [](const Matrix &A) { return testing_support::jacobi_spectral(A, [](double s) { return s * s; }); },
        Y);
    EXPECT_LT(testing_support::relative_error(closed_sq, fd_sq), 1e-5);
    const double closed_soft =
        divergence_closed_form(f, soft_values(f.sigma, lambda), soft_derivs(f.sigma, lambda));
    const double fd_soft = testing_support::fd_divergence(
        [lambda](const Matrix &A) {
          return testing_support::jacobi_spectral(A, [lambda](double s) { return std::max(s - lambda, 0.0); });
        },
        Y);
    EXPECT_LT(testing_support::relative_error(closed_soft, fd_soft), 1e-5);
  }
}

TEST(Divergence, DegenerateSpectrumThrows) {
  const Svd f = svd(Matrix::Identity(4, 4));
  EXPECT_THROW(divergence_closed_form(f, f.sigma, Vector::Ones(4)), DegeneracyError);
  EXPECT_THROW(divergence_closed_form(f, Vector::Zero(3), Vector::Zero(3)), DimensionError);
}

TEST(MonteCarloDivergence, IdentityIsExact) {
  Gen g(5);
  const Matrix Y = g.gaussian(7, 5);
  Rng rng(1);
  const DivergenceEstimate a = mc_divergence(SpectralEstimator::identity(), Y, 3, rng);
  EXPECT_NEAR(a.value, 35.0, 1e-9);
  EXPECT_NEAR(a.std_error, 0.0, 1e-9);
  const DivergenceEstimate b =
      mc_divergence([](const Matrix &A) { return A; }, Y, 3, rng);
  EXPECT_NEAR(b.value, 35.0, 1e-6);
  const DivergenceEstimate z =
      mc_divergence(SpectralEstimator::weighted({}), Y, 4, rng);
  EXPECT_EQ(z.value, 0.0);
  EXPECT_THROW(mc_divergence(SpectralEstimator::identity(), Y, 0, rng), ParameterError);
}

TEST(MonteCarloDivergence, WithinThreeStandardErrorsOfClosedForm) {
  Gen g(6);
  const Matrix Y = g.gaussian(5, 4);
  const Svd f = svd(Y);
  const SpectralEstimator est = SpectralEstimator::weighted({0.5, 0.5, 0.5, 0.5});
  // A linear map has a deterministic estimate; use a nonlinear one as well.
  const SpectralEstimator soft = SpectralEstimator::soft_threshold(f.sigma(1));
  Rng rng(2);
  for (const SpectralEstimator *e : {&est, &soft}) {
    const auto ev = e->evaluate(Y);
    const double closed = divergence_closed_form(ev.svd, ev.values, ev.derivs);
    const DivergenceEstimate mc = mc_divergence(*e, Y, 2000, rng);
    EXPECT_EQ(mc.samples, 2000);
    EXPECT_LE(std::abs(mc.value - closed), 3.0 * mc.std_error + 1e-9);
  }
}

TEST(MonteCarloDivergence, FullEnumerationOnTwoByTwo) {
  Gen g(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix Y = g.gaussian(2, 2);
    const Svd f = svd(Y);
    const Vector values = f.sigma.array().cube().matrix();
    const Vector derivs = 3.0 * f.sigma.array().square().matrix();
    double total = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
      Matrix d(2, 2);
      for (int b = 0; b < 4; ++b)
        d(b % 2, b / 2) = (mask >> b) & 1 ? 1.0 : -1.0;
      total += d.cwiseProduct(directional_derivative(f, values, derivs, d)).sum();
    }
    EXPECT_NEAR(total / 16.0, divergence_closed_form(f, values, derivs), 1e-10);
  }
}

TEST(Sure, IdentityAndZeroEstimators) {
  Gen g(8);
  const Matrix Y = g.gaussian(6, 9);
  const double tau = 0.4;
  const RiskEstimate id = sure_gaussian(Y, Y, tau, 54.0);
  EXPECT_NEAR(id.value, 54.0 * tau * tau, 1e-12);
  EXPECT_EQ(id.kind, RiskKind::SURE);
  const RiskEstimate zero = sure_gaussian(Y, Matrix::Zero(6, 9), tau, 0.0);
  EXPECT_NEAR(zero.value, Y.squaredNorm() - 54.0 * tau * tau, 1e-12);
  EXPECT_NEAR(sure_gaussian(Y, SpectralEstimator::identity(), tau).value, 54.0 * tau * tau, 1e-9);
  EXPECT_THROW(sure_gaussian(Y, Y, 0.0, 1.0), ParameterError);
  EXPECT_THROW(sure_gaussian(Y, SpectralEstimator::weighted({1.0}, 0.1), tau),
               ParameterError);
}

TEST(Sure, UnbiasedOnSmallSpikedModel) {
  Gen g(9);
  const Index n = 20, m = 30;
  const double tau = 0.2;
  const Matrix X = g.spiked(n, m, {3.0, 2.0});
  const SpectralEstimator est = SpectralEstimator::soft_threshold(1.5);
  std::vector<double> sure, se;
  Rng rng(11);
  std::normal_distribution<double> nd(0.0, tau);
  for (int r = 0; r < 400; ++r) {
    Matrix Y = X;
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < n; ++i)
        Y(i, j) += nd(rng);
    sure.push_back(sure_gaussian(Y, est, tau).value);
    se.push_back((est.apply(Y) - X).squaredNorm());
  }
  const auto d = testing_support::paired_difference(sure, se);
  EXPECT_LE(std::abs(d.mean), 3.0 * d.se);
}

TEST(Gsure, OneByOneArithmetic) {
  // 9 - 12 + 2 with no divergence term.
  const RiskEstimate r = gsure_gamma(Matrix::Ones(1, 1), Matrix::Ones(1, 1), 0.0, 3.0);
  EXPECT_NEAR(r.value, -1.0, 1e-15);
  EXPECT_EQ(r.kind, RiskKind::GSURE);
}

TEST(Gsure, IdentityEstimatorPerEntry) {
  Gen g(10);
  const double L = 3.5;
  Matrix Y = g.gaussian(4, 3).cwiseAbs().array() + 0.2;
  double ref = 0.0, div_theta = 0.0;
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 4; ++i) {
      const double y = Y(i, j);
      ref += (L * L - 2 * L * (L - 1) + (L - 1) * (L - 2) + 2 * L) / (y * y);
      div_theta += L / (y * y);
    }
  EXPECT_NEAR(gsure_gamma(Y, Y, div_theta, L).value, ref, 1e-10 * std::abs(ref));
  // The Rademacher estimate of the weighted diagonal is exact for the identity map.
  Rng rng(3);
  const RiskEstimate mc = gsure_gamma(Y, SpectralEstimator::identity(), L, 5, rng);
  EXPECT_NEAR(mc.value, ref, 1e-8 * std::abs(ref));
  EXPECT_EQ(mc.divergence_kind, DivergenceKind::MonteCarlo);
}

TEST(Gsure, GenericFormAgreesWithGammaSpecialization) {
  Gen g(11);
  const double L = 4.0;
  const Matrix Y = g.gaussian(5, 4).cwiseAbs().array() + 0.5;
  const Matrix F = g.gaussian(5, 4).cwiseAbs().array() + 0.3;
  const double div_theta = 1.7;
  const Matrix theta = (-L / F.array()).matrix();
  EXPECT_NEAR(gsure_generic(Gamma{L}, Y, theta, div_theta).value,
              gsure_gamma(Y, F, div_theta, L).value, 1e-9);
}

TEST(Gsure, DomainAndParameterErrors) {
  const Matrix one = Matrix::Ones(2, 2);
  EXPECT_THROW(gsure_gamma(one, one, 0.0, 2.0), ParameterError);
  EXPECT_THROW(gsure_gamma(one, -one, 0.0, 3.0), DomainError);
  EXPECT_THROW(gsure_gamma(-one, one, 0.0, 3.0), DomainError);
  EXPECT_THROW(sukls_gamma(one, one, 1.5, 0.0), ParameterError);
}

TEST(Sukls, OneByOneArithmetic) {
  const RiskEstimate r = sukls_gamma(Matrix::Ones(1, 1), Matrix::Ones(1, 1), 3.0, 1.0);
  EXPECT_NEAR(r.value, 0.0, 1e-15);
  EXPECT_EQ(r.kind, RiskKind::SUKLS);
}

TEST(Sukls, DoublingTheEstimate) {
  Gen g(12);
  const double L = 3.0;
  const Matrix Y = g.gaussian(3, 4).cwiseAbs().array() + 0.1;
  const Matrix F = g.gaussian(3, 4).cwiseAbs().array() + 0.1;
  const double div = 2.5;
  const double a = sukls_gamma(Y, F, L, div).value;
  const double b = sukls_gamma(Y, 2.0 * F, L, div).value;
  const double expect = (L - 1) * F.cwiseQuotient(Y).sum() - L * 12.0 * std::log(2.0);
  EXPECT_NEAR(b - a, expect, 1e-10);
}

TEST(Sukls, GenericGammaMatchesSpecialization) {
  Gen g(13);
  const double L = 3.0;
  const Matrix Y = g.gaussian(4, 4).cwiseAbs().array() + 0.2;
  const Matrix F = g.gaussian(4, 4).cwiseAbs().array() + 0.2;
  const double generic = sukls_generic(Gamma{L}, Y, F, 3.0).value;
  const double special = sukls_gamma(Y, F, L, 3.0).value;
  EXPECT_NEAR(generic, special, 1e-9);
}

TEST(Sukls, GaussianFamilyIsAScaledSure) {
  Gen g(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = g.integer(2, 8), m = g.integer(2, 8);
    const double tau = g.uniform(0.1, 3.0);
    const Matrix Y = g.gaussian(n, m, 2.0);
    const Svd f = svd(Y);
    const Vector w = Vector::NullaryExpr(f.size(), [&](Index) { return g.uniform(0, 1); });
    const Vector values = w.cwiseProduct(f.sigma);
    const double div = divergence_closed_form(f, values, w);
    const Matrix F = spectral_reconstruct(f, values);
    const double sure = sure_gaussian(Y, F, tau, div).value;
    const double sukls = sukls_generic(Gaussian{tau}, Y, F, div).value;
    const double nm = static_cast<double>(n * m);
    const double lhs = sukls + Y.squaredNorm() / (2 * tau * tau) - nm / 2.0;
    EXPECT_NEAR(lhs, sure / (2 * tau * tau), 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Sukls, ClampedEstimatorUsesMonteCarlo) {
  Gen g(15);
  Matrix Y = g.gaussian(6, 5).cwiseAbs().array() + 0.01;
  Rng rng(4);
  const RiskEstimate open = sukls_gamma(Y, SpectralEstimator::weighted({1, 0.5}), 3.0, 8, rng);
  EXPECT_EQ(open.divergence_kind, DivergenceKind::ClosedForm);
  const RiskEstimate clamped =
      sukls_gamma(Y, SpectralEstimator::weighted({1}, 0.7), 3.0, 8, rng);
  EXPECT_EQ(clamped.divergence_kind, DivergenceKind::MonteCarlo);
  EXPECT_EQ(clamped.samples.value_or(0), 8);
}

TEST(Pure, ZeroAndIdentityEstimators) {
  const Matrix Y = (Matrix(2, 2) << 3, 0, 1, 5).finished();
  EXPECT_EQ(pure_poisson(Y, [](const Matrix &A) { return Matrix::Zero(A.rows(), A.cols()); },
                         ExactMode{})
                .value,
            0.0);
  for (double y : {0.0, 1.0, 4.0, 17.0}) {
    const Matrix Y1 = Matrix::Constant(1, 1, y);
    const double expect = -y * y + 2 * y;
    EXPECT_NEAR(pure_poisson(Y1, [](const Matrix &A) { return A; }, ExactMode{}).value, expect,
                1e-12);
    EXPECT_NEAR(pure_poisson(Y1, SpectralEstimator::identity(), ExactMode{}).value, expect, 1e-9);
  }
}

TEST(Pukla, ConstantEstimatorAndZeroCounts) {
  Gen g(16);
  Matrix Y(3, 4);
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 3; ++i)
      Y(i, j) = g.integer(0, 9);
  const double c = 2.7;
  const auto constant = [c](const Matrix &A) { return Matrix::Constant(A.rows(), A.cols(), c); };
  EXPECT_NEAR(pukla_poisson(Y, constant, ExactMode{}).value, 12 * c - std::log(c) * Y.sum(),
              1e-10);
  const Matrix Z = Matrix::Zero(3, 4);
  const SpectralEstimator floored = SpectralEstimator::weighted({1}, 0.25);
  EXPECT_NEAR(pukla_poisson(Z, floored, ExactMode{}).value, floored.apply(Z).sum(), 1e-12);
  // Zero counts contribute nothing even when the downdated value vanishes.
  EXPECT_NO_THROW(pukla_from_downdated(Z, Matrix::Ones(3, 4), Z));
  Matrix Y1 = Z;
  Y1(0, 0) = 1;
  EXPECT_THROW(pukla_from_downdated(Y1, Matrix::Ones(3, 4), Z), DomainError);
}

TEST(Downdated, SpectraMatchFullRecomputation) {
  Gen g(17);
  Rng rng(5);
  const Matrix X = 30.0 * bump(7) * bump(5).transpose() + Matrix::Constant(7, 5, 1.0);
  const Matrix Y = sample(Poisson{}, X, rng);
  const DowndatedSpectra spectra(Y);
  for (const SpectralEstimator &e :
       {SpectralEstimator::weighted({0.9, 0.3}), SpectralEstimator::soft_threshold(2.0, 0.1),
        SpectralEstimator::truncate(2)}) {
    const Matrix fast = spectra.apply(e);
    const Matrix slow = downdated_exact(Y, e.as_map());
    EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-9);
  }
  const Matrix c0 = spectra.component(0);
  const Matrix ref = downdated_exact(Y, SpectralEstimator::weighted({1.0}).as_map());
  EXPECT_LT((c0 - ref).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Downdated, SizeGuard) {
  EXPECT_THROW(DowndatedSpectra(Matrix::Ones(101, 100)), CapacityError);
  EXPECT_THROW(downdated_exact(Matrix::Ones(101, 100), [](const Matrix &A) { return A; }),
               CapacityError);
}

TEST(Pure, FirstOrderApproximationTracksExact) {
  const Vector u = bump(15), v = bump(10);
  const Matrix X = 200.0 * u * v.transpose();
  const SpectralEstimator est = SpectralEstimator::weighted({0.9});
  double rel = 0.0;
  for (int r = 0; r < 50; ++r) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(r)));
    const Matrix Y = sample(Poisson{}, X, rng);
    const double exact = pure_poisson(Y, est, ExactMode{}).value;
    const double approx =
        pure_poisson(Y, est, ApproxMode{1, derive_seed(78, static_cast<std::uint64_t>(r))}).value;
    rel += std::abs(approx - exact) / std::abs(exact);
  }
  EXPECT_LT(rel / 50.0, 0.05);
}

TEST(Pukla, ExactArgminIsTheCountRatio) {
  const Vector u = bump(15), v = bump(10);
  const Matrix X = 150.0 * u * v.transpose();
  Rng rng(6);
  const Matrix Y = sample(Poisson{}, X, rng);
  const Svd f = svd(Y);
  const double closed =
      std::min(1.0, Y.sum() / (f.sigma(0) * f.U.col(0).sum() * f.V.col(0).sum()));
  const DowndatedSpectra spectra(Y);
  auto objective = [&](double w) {
    const SpectralEstimator e = SpectralEstimator::weighted({w});
    return pukla_from_downdated(Y, e.apply(Y), spectra.apply(e));
  };
  // Independent ternary search on a unimodal objective.
  double lo = 0.05, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    (objective(a) < objective(b) ? hi : lo) = objective(a) < objective(b) ? b : a;
  }
  EXPECT_NEAR(0.5 * (lo + hi), closed, 1e-6);
}

TEST(RiskKind, NamesRoundTrip) {
  for (RiskKind k : {RiskKind::SURE, RiskKind::GSURE, RiskKind::SUKLS, RiskKind::PURE, RiskKind::PUKLA})
    EXPECT_EQ(parse_risk_kind(to_string(k)), k);
  EXPECT_THROW(parse_risk_kind("mse"), ParameterError);
}

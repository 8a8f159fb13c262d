#pragma once

// Shared generators and reference computations for the test suites. Nothing
// here calls into the library's spectral or risk code, so the helpers can
// serve as independent oracles.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace testing_support {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Small hand-rolled generator for property tests.
class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Matrix gaussian(Index rows, Index cols, double scale = 1.0) {
    Matrix A(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i)
        A(i, j) = scale * normal();
    return A;
  }

  /// Random matrix with orthonormal columns via Householder QR.
  Matrix orthonormal(Index rows, Index cols) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(rows, cols));
    return qr.householderQ() * Matrix::Identity(rows, cols);
  }

  /// sum_k s_k u_k v_k^t with random orthonormal vectors.
  Matrix spiked(Index rows, Index cols, const std::vector<double> &s) {
    const Index r = static_cast<Index>(s.size());
    Matrix U = orthonormal(rows, r);
    Matrix V = orthonormal(cols, r);
    Matrix X = Matrix::Zero(rows, cols);
    for (Index k = 0; k < r; ++k)
      X += s[static_cast<std::size_t>(k)] * U.col(k) * V.col(k).transpose();
    return X;
  }

  std::mt19937_64 &engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

/// Singular values from the eigenvalues of the Gram matrix (independent of
/// the library's SVD path).
inline Vector gram_singular_values(const Matrix &Y) {
  const Matrix G = Y.rows() <= Y.cols() ? Matrix(Y * Y.transpose()) : Matrix(Y.transpose() * Y);
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  Vector ev = es.eigenvalues().reverse();
  for (Index i = 0; i < ev.size(); ++i)
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  return ev;
}

/// Spectral map Y -> U diag(g(s)) V^t via Eigen's JacobiSVD.
inline Matrix jacobi_spectral(const Matrix &Y, const std::function<double(double)> &g) {
  Eigen::JacobiSVD<Matrix> js(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = js.singularValues();
  for (Index k = 0; k < s.size(); ++k)
    s(k) = g(s(k));
  return js.matrixU() * s.asDiagonal() * js.matrixV().transpose();
}

/// Entrywise central-difference divergence sum_ij dF_ij/dY_ij.
inline double fd_divergence(const std::function<Matrix(const Matrix &)> &F, const Matrix &Y,
                            double h = 1e-6) {
  double div = 0.0;
  Matrix P = Y;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      P(i, j) = Y(i, j) + h;
      const double up = F(P)(i, j);
      P(i, j) = Y(i, j) - h;
      const double dn = F(P)(i, j);
      P(i, j) = Y(i, j);
      div += (up - dn) / (2.0 * h);
    }
  return div;
}

/// Entrywise central-difference Jacobian diagonal.
inline Matrix fd_jacobian_diagonal(const std::function<Matrix(const Matrix &)> &F,
                                   const Matrix &Y, double h = 1e-6) {
  Matrix D(Y.rows(), Y.cols());
  Matrix P = Y;
  for (Index j = 0; j < Y.cols(); ++j)
    for (Index i = 0; i < Y.rows(); ++i) {
      P(i, j) = Y(i, j) + h;
      const double up = F(P)(i, j);
      P(i, j) = Y(i, j) - h;
      const double dn = F(P)(i, j);
      P(i, j) = Y(i, j);
      D(i, j) = (up - dn) / (2.0 * h);
    }
  return D;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double> &v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v)
    ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

/// Standard error of the mean of a - b for paired samples.
inline MeanSe paired_difference(const std::vector<double> &a, const std::vector<double> &b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    d[i] = a[i] - b[i];
  return mean_se(d);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Gamma draw with shape L and mean x (Marsaglia-Tsang through std::gamma).
inline double gamma_draw(std::mt19937_64 &rng, double L, double x) {
  return std::gamma_distribution<double>(L, x / L)(rng);
}

} // namespace testing_support

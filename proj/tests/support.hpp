#pragma once

// Shared generators and oracles for the test suite.

#include <cmath>
#include <random>
#include <vector>

#include "relay/relay.hpp"

namespace relay::testing {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

/// Random matrix rescaled to the given spectral radius.
inline Matrix random_with_radius(Rng& rng, Eigen::Index n, double radius) {
  Matrix a = random_matrix(rng, n, n);
  const double r = spectral_radius(a);
  return r > 0.0 ? Matrix(a * (radius / r)) : a;
}

inline DiscreteStateSpace random_stable(Rng& rng, Eigen::Index n, Eigen::Index m, Eigen::Index p,
                                        double max_radius = 0.9, bool feedthrough = true) {
  std::uniform_real_distribution<double> ur(0.2, max_radius);
  return {random_with_radius(rng, n, ur(rng)), random_matrix(rng, n, m), random_matrix(rng, p, n),
          feedthrough ? random_matrix(rng, p, m) : Matrix::Zero(p, m), 1.0};
}

inline double max_abs_diff(const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
  double e = 0.0;
  for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) e = std::max(e, (x[k] - y[k]).cwiseAbs().maxCoeff());
  return e;
}

/// Dense frequency sweep of the largest singular value, evaluated with a
/// direct complex solve (no Hessenberg reduction).
inline double brute_peak_gain(const DiscreteStateSpace& g, int points = 4096) {
  using cd = std::complex<double>;
  double best = 0.0;
  const Eigen::Index n = g.states();
  for (int i = 0; i < points; ++i) {
    const double w = std::numbers::pi * i / (points - 1);
    Eigen::MatrixXcd zi = -g.a().cast<cd>();
    zi.diagonal().array() += std::polar(1.0, w);
    Eigen::MatrixXcd h = g.d().cast<cd>();
    if (n > 0) h += g.c().cast<cd>() * zi.partialPivLu().solve(g.b().cast<cd>());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

inline Matrix random_symbols(Rng& rng, Eigen::Index n) { return random_matrix(rng, 2, n); }

inline Matrix random_pm1(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = (rng() >> 63) ? 1.0 : -1.0;
  return m;
}

}  // namespace relay::testing

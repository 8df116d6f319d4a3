#pragma once

// Discrete algebraic Riccati equation
//
//   X = A'XA - (A'XB + S)(R + B'XB)^{-1}(B'XA + S') + Q
//
// solved by the structure-preserving doubling algorithm, followed by Newton
// (defect-correction) polishing. R may be indefinite, which is what the
// H-infinity conditions need; it must be invertible.

#include <cmath>
#include <string>

#include "relay/sysmat.hpp"

namespace relay {

struct DareOptions {
  double tolerance = 1e-12;
  int max_iterations = 200;
  int newton_steps = 12;
  double residual_bound = 1e-6;  // accept iff residual <= bound * residual_scale
};

struct DareSolution {
  Matrix x;
  Matrix gain;  // (R + B'XB)^{-1}(B'XA + S'), closed loop A - B gain
  double residual;
  double closed_loop_radius;
  int iterations;
};

inline double dare_residual(const Matrix& x, const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                            const Matrix& s) {
  const Matrix m = r + b.transpose() * x * b;
  const Matrix t = b.transpose() * x * a + s.transpose();
  const Matrix res = a.transpose() * x * a - x + q - t.transpose() * m.partialPivLu().solve(t);
  return res.norm();
}

/// Size of the terms whose cancellation the residual measures; the residual
/// relative to it is a backward error.
inline double dare_residual_scale(const Matrix& x, const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                                  const Matrix& s) {
  const Matrix m = r + b.transpose() * x * b;
  const Matrix t = b.transpose() * x * a + s.transpose();
  const double quad = (t.transpose() * m.partialPivLu().solve(t)).norm();
  return 1.0 + x.norm() + (a.transpose() * x * a).norm() + q.norm() + quad;
}

/// Solves X = A'XA + Q by squared Smith iteration. Needs rho(A) < 1.
inline Matrix solve_stein(const Matrix& a, const Matrix& q, int max_iterations = 64) {
  if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols())
    throw DimensionError("solve_stein: shapes do not match");
  Matrix x = q;
  Matrix ak = a;
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix step = ak.transpose() * x * ak;
    x += step;
    if (!x.allFinite()) break;
    const double ak_norm = ak.norm();
    if (step.norm() <= 1e-17 * (1.0 + x.norm()) && ak_norm < 1.0) return 0.5 * (x + x.transpose());
    if (!(ak_norm < 1e100)) break;
    ak = ak * ak;
  }
  throw NumericalError("solve_stein: iteration did not converge (is the state matrix stable?)");
}

namespace detail {

inline Matrix dare_gain(const Matrix& x, const Matrix& a, const Matrix& b, const Matrix& r, const Matrix& s) {
  const Matrix m = r + b.transpose() * x * b;
  Eigen::PartialPivLU<Matrix> lu(m);
  return lu.solve(b.transpose() * x * a + s.transpose());
}

}  // namespace detail

/// Returns the stabilizing solution or throws NumericalError (non-stabilizable
/// pair, singular R, divergence, residual above the acceptance bound).
inline DareSolution solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& s,
                               const DareOptions& opts = {}) {
  const Eigen::Index n = a.rows(), m = b.cols();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m ||
      s.rows() != n || s.cols() != m)
    throw DimensionError("solve_dare: shapes do not match");
  if (n == 0) return {Matrix(0, 0), Matrix(m, 0), 0.0, 0.0, 0};
  if (!is_stabilizable(a, b)) throw NumericalError("solve_dare: (A, B) is not stabilizable");

  Eigen::FullPivLU<Matrix> r_lu(r);
  if (m > 0 && !r_lu.isInvertible()) throw NumericalError("solve_dare: R is singular");
  const Matrix r_inv_bt = m > 0 ? Matrix(r_lu.solve(b.transpose())) : Matrix(0, n);
  const Matrix r_inv_st = m > 0 ? Matrix(r_lu.solve(s.transpose())) : Matrix(0, n);

  // X = Ah' X (I + G X)^{-1} Ah + H
  Matrix ak = a - b * r_inv_st;
  Matrix gk = b * r_inv_bt;
  Matrix hk = q - s * r_inv_st;
  gk = 0.5 * (gk + gk.transpose());
  hk = 0.5 * (hk + hk.transpose());
  const Matrix eye = Matrix::Identity(n, n);

  int it = 0;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    Eigen::PartialPivLU<Matrix> w(eye + gk * hk);
    const Matrix w_a = w.solve(ak);
    const Matrix w_g = w.solve(gk);
    Matrix h_next = hk + ak.transpose() * hk * w_a;
    Matrix g_next = gk + ak * w_g * ak.transpose();
    Matrix a_next = ak * w_a;
    h_next = 0.5 * (h_next + h_next.transpose());
    g_next = 0.5 * (g_next + g_next.transpose());
    if (!h_next.allFinite() || !g_next.allFinite() || !a_next.allFinite())
      throw NumericalError("solve_dare: doubling iteration diverged");
    const double change = (h_next - hk).norm();
    hk = std::move(h_next);
    gk = std::move(g_next);
    ak = std::move(a_next);
    if (change <= opts.tolerance * (1.0 + hk.norm())) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged) throw NumericalError("solve_dare: doubling iteration did not converge in " +
                                       std::to_string(opts.max_iterations) + " steps");

  // With indefinite R a Newton step may raise the residual before the
  // quadratic phase sets in, so keep stepping and retain the best iterate.
  Matrix x = hk;
  double res = dare_residual(x, a, b, q, r, s);
  Matrix cur = x;
  for (int k = 0; k < opts.newton_steps && res > 1e-14 * (1.0 + x.norm()); ++k) {
    const Matrix gain = detail::dare_gain(cur, a, b, r, s);
    const Matrix ac = a - b * gain;
    const Matrix mm = r + b.transpose() * cur * b;
    const Matrix t = b.transpose() * cur * a + s.transpose();
    Matrix defect = a.transpose() * cur * a - cur + q - t.transpose() * mm.partialPivLu().solve(t);
    defect = 0.5 * (defect + defect.transpose());
    try {
      cur += solve_stein(ac, defect);
    } catch (const NumericalError&) {
      break;
    }
    if (!cur.allFinite()) break;
    const double cres = dare_residual(cur, a, b, q, r, s);
    if (cres < res) {
      x = cur;
      res = cres;
    }
  }

  const Matrix gain = detail::dare_gain(x, a, b, r, s);
  const double radius = spectral_radius(a - b * gain);
  if (!(radius < 1.0 - kStabilityMargin)) throw NumericalError("solve_dare: solution is not stabilizing (closed-loop spectral radius " + std::to_string(radius) + ", residual " + std::to_string(res) + ")");
  const double scale = dare_residual_scale(x, a, b, q, r, s);
  if (!(res <= opts.residual_bound * scale))
    throw NumericalError("solve_dare: relative residual " + std::to_string(res / scale) + " exceeds acceptance bound");
  return {x, gain, res, radius, it};
}

}  // namespace relay

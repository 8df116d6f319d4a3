#pragma once

// State-space algebra for the discrete-time systems that make up the relay
// model: composition, ZOH discretization, FIR and delay realizations,
// impulse responses and stability tests. Realizations are never minimized.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "relay/errors.hpp"

namespace relay {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DimensionError(what);
}

inline bool same_period(double p1, double p2) {
  return std::abs(p1 - p2) <= 1e-12 * std::max(std::abs(p1), std::abs(p2));
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace detail

/// x[k+1] = A x[k] + B u[k],  y[k] = C x[k] + D u[k].
/// The sample period is a tag used to reject mixing of rates; it has no
/// effect on the dynamics.
class DiscreteStateSpace {
 public:
  DiscreteStateSpace(Matrix a, Matrix b, Matrix c, Matrix d, double period)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)), period_(period) {
    detail::require(a_.rows() == a_.cols(), "A must be square");
    detail::require(b_.rows() == a_.rows(), "rows(B) must equal rows(A)");
    detail::require(c_.cols() == a_.cols(), "cols(C) must equal cols(A)");
    detail::require(d_.rows() == c_.rows() && d_.cols() == b_.cols(), "D must be outputs x inputs");
    if (!(period_ > 0.0) || !std::isfinite(period_)) throw ValidationError("sample period must be positive");
  }

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }
  double period() const { return period_; }

  Eigen::Index states() const { return a_.rows(); }
  Eigen::Index inputs() const { return b_.cols(); }
  Eigen::Index outputs() const { return c_.rows(); }

 private:
  Matrix a_, b_, c_, d_;
  double period_;
};

/// dx/dt = A x + B u,  y = C x + D u.
class ContinuousStateSpace {
 public:
  ContinuousStateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
    detail::require(a_.rows() == a_.cols(), "A must be square");
    detail::require(b_.rows() == a_.rows(), "rows(B) must equal rows(A)");
    detail::require(c_.cols() == a_.cols(), "cols(C) must equal cols(A)");
    detail::require(d_.rows() == c_.rows() && d_.cols() == b_.cols(), "D must be outputs x inputs");
  }

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& c() const { return c_; }
  const Matrix& d() const { return d_; }

  Eigen::Index states() const { return a_.rows(); }
  Eigen::Index inputs() const { return b_.cols(); }
  Eigen::Index outputs() const { return c_.rows(); }

 private:
  Matrix a_, b_, c_, d_;
};

/// A state-space system whose inputs are split into (disturbance w, control u)
/// and outputs into (performance z, measurement y), in that order.
struct PartitionedSystem {
  DiscreteStateSpace sys;
  Eigen::Index nz;
  Eigen::Index ny;
  Eigen::Index nw;
  Eigen::Index nu;

  PartitionedSystem(DiscreteStateSpace s, Eigen::Index z, Eigen::Index y, Eigen::Index w, Eigen::Index u)
      : sys(std::move(s)), nz(z), ny(y), nw(w), nu(u) {
    detail::require(sys.outputs() == nz + ny, "partition: output widths do not add up");
    detail::require(sys.inputs() == nw + nu, "partition: input widths do not add up");
  }

  Matrix b1() const { return sys.b().leftCols(nw); }
  Matrix b2() const { return sys.b().rightCols(nu); }
  Matrix c1() const { return sys.c().topRows(nz); }
  Matrix c2() const { return sys.c().bottomRows(ny); }
  Matrix d11() const { return sys.d().topLeftCorner(nz, nw); }
  Matrix d12() const { return sys.d().topRightCorner(nz, nu); }
  Matrix d21() const { return sys.d().bottomLeftCorner(ny, nw); }
  Matrix d22() const { return sys.d().bottomRightCorner(ny, nu); }
};

// ---------------------------------------------------------------------------
// Elementary systems

inline DiscreteStateSpace static_gain(const Matrix& d, double period = 1.0) {
  return {Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d, period};
}

inline DiscreteStateSpace identity_system(Eigen::Index channels, double period = 1.0) {
  return static_gain(Matrix::Identity(channels, channels), period);
}

/// Pure delay z^{-d} on every channel: y[k] = u[k-d].
inline DiscreteStateSpace delay_ss(int d, Eigen::Index channels, double period = 1.0) {
  if (d < 0) throw ValidationError("delay must be nonnegative");
  if (d == 0) return identity_system(channels, period);
  const Eigen::Index n = d * channels;
  Matrix a = Matrix::Zero(n, n);
  Matrix b = Matrix::Zero(n, channels);
  Matrix c = Matrix::Zero(channels, n);
  b.topRows(channels).setIdentity();
  for (int i = 1; i < d; ++i) a.block(i * channels, (i - 1) * channels, channels, channels).setIdentity();
  c.rightCols(channels).setIdentity();
  return {a, b, c, Matrix::Zero(channels, channels), period};
}

/// Matrix-valued FIR filter y[k] = sum_d taps[d] u[k-d], realized with one
/// shift register per scalar input. With `trim`, each register only extends
/// to the last delay at which that input column is nonzero.
inline DiscreteStateSpace fir_mimo_to_ss(std::span<const Matrix> taps, double period = 1.0, bool trim = true) {
  if (taps.empty()) throw ValidationError("FIR realization needs at least one tap");
  const Eigen::Index p = taps.front().rows();
  const Eigen::Index m = taps.front().cols();
  for (const auto& t : taps) detail::require(t.rows() == p && t.cols() == m, "FIR taps must share a shape");

  std::vector<int> depth(m, static_cast<int>(taps.size()) - 1);
  if (trim) {
    for (Eigen::Index j = 0; j < m; ++j) {
      int last = 0;
      for (std::size_t d = 1; d < taps.size(); ++d)
        if (taps[d].col(j).cwiseAbs().maxCoeff() != 0.0) last = static_cast<int>(d);
      depth[j] = last;
    }
  }
  std::vector<Eigen::Index> offset(m + 1, 0);
  for (Eigen::Index j = 0; j < m; ++j) offset[j + 1] = offset[j] + depth[j];
  const Eigen::Index n = offset[m];

  Matrix a = Matrix::Zero(n, n);
  Matrix b = Matrix::Zero(n, m);
  Matrix c = Matrix::Zero(p, n);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (depth[j] == 0) continue;
    // register slot i holds u_j[k-1-i]
    b(offset[j], j) = 1.0;
    for (int i = 1; i < depth[j]; ++i) a(offset[j] + i, offset[j] + i - 1) = 1.0;
    for (int d = 1; d <= depth[j]; ++d) c.col(offset[j] + d - 1) = taps[d].col(j);
  }
  return {a, b, c, taps.front(), period};
}

/// Scalar FIR filter applied independently on `channels` channels,
/// realized with (len(taps)-1)*channels shift states.
inline DiscreteStateSpace fir_to_ss(std::span<const double> taps, Eigen::Index channels, double period = 1.0) {
  if (taps.empty()) throw ValidationError("FIR realization needs at least one tap");
  if (channels < 1) throw ValidationError("channels must be positive");
  std::vector<Matrix> mats;
  mats.reserve(taps.size());
  for (double t : taps) mats.push_back(t * Matrix::Identity(channels, channels));
  return fir_mimo_to_ss(mats, period, false);
}

// ---------------------------------------------------------------------------
// Interconnections

/// g2 after g1 (g1 feeds g2). States are stacked as [x1; x2].
inline DiscreteStateSpace series(const DiscreteStateSpace& g2, const DiscreteStateSpace& g1) {
  detail::require(g2.inputs() == g1.outputs(), "series: inputs of g2 must match outputs of g1");
  if (!detail::same_period(g1.period(), g2.period())) throw DimensionError("series: sample periods differ");
  const Eigen::Index n1 = g1.states(), n2 = g2.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = g1.a();
  a.bottomLeftCorner(n2, n1) = g2.b() * g1.c();
  a.bottomRightCorner(n2, n2) = g2.a();
  Matrix b(n1 + n2, g1.inputs());
  b << g1.b(), g2.b() * g1.d();
  Matrix c(g2.outputs(), n1 + n2);
  c << g2.d() * g1.c(), g2.c();
  return {a, b, c, g2.d() * g1.d(), g1.period()};
}

/// g1 + g2 with shared inputs and summed outputs.
inline DiscreteStateSpace parallel(const DiscreteStateSpace& g1, const DiscreteStateSpace& g2) {
  detail::require(g1.inputs() == g2.inputs() && g1.outputs() == g2.outputs(), "parallel: shapes differ");
  if (!detail::same_period(g1.period(), g2.period())) throw DimensionError("parallel: sample periods differ");
  Matrix b(g1.states() + g2.states(), g1.inputs());
  b << g1.b(), g2.b();
  Matrix c(g1.outputs(), g1.states() + g2.states());
  c << g1.c(), g2.c();
  return {detail::block_diag(g1.a(), g2.a()), b, c, g1.d() + g2.d(), g1.period()};
}

/// Block-diagonal stacking diag(g1, g2).
inline DiscreteStateSpace append(const DiscreteStateSpace& g1, const DiscreteStateSpace& g2) {
  if (!detail::same_period(g1.period(), g2.period())) throw DimensionError("append: sample periods differ");
  return {detail::block_diag(g1.a(), g2.a()), detail::block_diag(g1.b(), g2.b()),
          detail::block_diag(g1.c(), g2.c()), detail::block_diag(g1.d(), g2.d()), g1.period()};
}

/// Keep the listed outputs (rows) and inputs (columns), in the given order.
inline DiscreteStateSpace select_io(const DiscreteStateSpace& g, std::span<const Eigen::Index> rows,
                                    std::span<const Eigen::Index> cols) {
  for (auto r : rows) detail::require(r >= 0 && r < g.outputs(), "select_io: output index out of range");
  for (auto c : cols) detail::require(c >= 0 && c < g.inputs(), "select_io: input index out of range");
  Matrix b(g.states(), static_cast<Eigen::Index>(cols.size()));
  Matrix c(static_cast<Eigen::Index>(rows.size()), g.states());
  Matrix d(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) b.col(j) = g.b().col(cols[j]);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.row(i) = g.c().row(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j) d(i, j) = g.d()(rows[i], cols[j]);
  }
  return {g.a(), b, c, d, g.period()};
}

inline DiscreteStateSpace scaled(const DiscreteStateSpace& g, double k) {
  return {g.a(), g.b(), k * g.c(), k * g.d(), g.period()};
}

// ---------------------------------------------------------------------------
// Discretization

/// Exact zero-order-hold equivalent: A_d = e^{Ah}, B_d = int_0^h e^{At} dt B,
/// both read off the exponential of the augmented matrix [A B; 0 0] h.
inline DiscreteStateSpace c2d_zoh(const ContinuousStateSpace& g, double h) {
  if (!(h > 0.0)) throw ValidationError("c2d_zoh: sample period must be positive");
  const Eigen::Index n = g.states(), m = g.inputs();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = g.a() * h;
  aug.topRightCorner(n, m) = g.b() * h;
  const Matrix e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m), g.c(), g.d(), h};
}

// ---------------------------------------------------------------------------
// Evaluation

/// Markov parameters {D, CB, CAB, ...}, `len` terms.
inline std::vector<Matrix> impulse_response(const DiscreteStateSpace& g, int len) {
  if (len < 1) throw ValidationError("impulse_response: length must be positive");
  std::vector<Matrix> out;
  out.reserve(len);
  out.push_back(g.d());
  Matrix ak_b = g.b();
  for (int k = 1; k < len; ++k) {
    out.push_back(g.c() * ak_b);
    ak_b = g.a() * ak_b;
  }
  return out;
}

/// Response to an input sequence (one column per sample) from the zero state.
inline Matrix simulate(const DiscreteStateSpace& g, const Matrix& u) {
  detail::require(u.rows() == g.inputs(), "simulate: input width mismatch");
  Matrix y(g.outputs(), u.cols());
  Vector x = Vector::Zero(g.states());
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    y.col(k) = g.c() * x + g.d() * u.col(k);
    x = g.a() * x + g.b() * u.col(k);
  }
  return y;
}

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return Eigen::VectorXcd(0);
  // EigenSolver reduces to real Schur form and reads the spectrum off its
  // 1x1 and 2x2 diagonal blocks.
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
  return es.eigenvalues();
}

inline double spectral_radius(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  return eigenvalues(a).cwiseAbs().maxCoeff();
}

inline constexpr double kStabilityMargin = 1e-9;

inline bool is_stable(const Matrix& a) { return spectral_radius(a) < 1.0 - kStabilityMargin; }
inline bool is_stable(const DiscreteStateSpace& g) { return is_stable(g.a()); }
inline bool is_stable(const ContinuousStateSpace& g) {
  if (g.states() == 0) return true;
  Eigen::EigenSolver<Matrix> es(g.a(), false);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

namespace detail {

// PBH test on the modes with |lambda| >= 1: rank [A - lambda I, B] = n.
inline bool pbh_unstable_modes(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  if (n == 0) return true;
  const Eigen::VectorXcd ev = eigenvalues(a);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(ev(i)) < 1.0 - kStabilityMargin) continue;
    Eigen::MatrixXcd m(n, n + b.cols());
    m.leftCols(n) = a.cast<std::complex<double>>() - ev(i) * Eigen::MatrixXcd::Identity(n, n);
    m.rightCols(b.cols()) = b.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& s = svd.singularValues();
    const double scale = std::max(1.0, s(0));
    if (s(n - 1) <= 1e-10 * scale) return false;
  }
  return true;
}

}  // namespace detail

inline bool is_stabilizable(const Matrix& a, const Matrix& b) { return detail::pbh_unstable_modes(a, b); }

inline bool is_detectable(const Matrix& c, const Matrix& a) {
  return detail::pbh_unstable_modes(a.transpose(), c.transpose());
}

/// DC gain C (I - A)^{-1} B + D of a discrete system.
inline Matrix dc_gain(const DiscreteStateSpace& g) {
  if (g.states() == 0) return g.d();
  const Matrix i_minus_a = Matrix::Identity(g.states(), g.states()) - g.a();
  return g.c() * i_minus_a.partialPivLu().solve(g.b()) + g.d();
}

}  // namespace relay

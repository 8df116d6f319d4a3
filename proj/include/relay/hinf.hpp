#pragma once

// Discrete-time H-infinity machinery: frequency-response evaluation, the
// bounded-real test, the H-infinity norm, lower linear-fractional
// interconnection, Riccati-based output-feedback synthesis and the
// gamma-iteration.
//
// Synthesis follows the two-step route: a full-information problem (one
// DARE with indefinite weight) followed by an output-estimation problem,
// which is solved as the transpose of a second full-information problem.
// The result is the observer-form central controller. Rank conditions on
// D12 / D21 are enforced by appending eps*u to the performance output and
// eps-scaled fictitious noise to the measurement.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relay/dare.hpp"
#include "relay/sysmat.hpp"

namespace relay {

/// Evaluates G(e^{jw}) = C (e^{jw} I - A)^{-1} B + D in O(n^2) per point
/// after a one-time Hessenberg reduction of A.
class FrequencyResponse {
 public:
  explicit FrequencyResponse(const DiscreteStateSpace& g) : d_(g.d().cast<std::complex<double>>()) {
    const Eigen::Index n = g.states();
    if (n == 0) return;
    Eigen::HessenbergDecomposition<Matrix> hd(g.a());
    const Matrix u = hd.matrixQ();
    h_ = hd.matrixH();
    bh_ = (u.transpose() * g.b()).cast<std::complex<double>>();
    ch_ = (g.c() * u).cast<std::complex<double>>();
  }

  Eigen::MatrixXcd at(double omega) const {
    using cd = std::complex<double>;
    const Eigen::Index n = h_.rows();
    if (n == 0) return d_;
    const cd z = std::polar(1.0, omega);
    Eigen::MatrixXcd m = -h_.cast<cd>();
    m.diagonal().array() += z;
    Eigen::MatrixXcd rhs = bh_;
    // Gaussian elimination on an upper Hessenberg matrix: one subdiagonal.
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      if (std::abs(m(k + 1, k)) > std::abs(m(k, k))) {
        m.row(k).segment(k, n - k).swap(m.row(k + 1).segment(k, n - k));
        rhs.row(k).swap(rhs.row(k + 1));
      }
      if (m(k, k) == cd(0.0)) throw NumericalError("frequency response: pole on the unit circle");
      const cd l = m(k + 1, k) / m(k, k);
      if (l != cd(0.0)) {
        m.row(k + 1).segment(k, n - k) -= l * m.row(k).segment(k, n - k);
        rhs.row(k + 1) -= l * rhs.row(k);
      }
    }
    if (m(n - 1, n - 1) == cd(0.0)) throw NumericalError("frequency response: pole on the unit circle");
    const Eigen::MatrixXcd x = m.triangularView<Eigen::Upper>().solve(rhs);
    return ch_ * x + d_;
  }

  double max_singular_value(double omega) const {
    const Eigen::MatrixXcd g = at(omega);
    if (g.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
    return svd.singularValues()(0);
  }

 private:
  Matrix h_;
  Eigen::MatrixXcd bh_, ch_, d_;
};

/// Largest singular value over a uniform grid on [0, pi] with golden-section
/// refinement around the best grid points. Always a lower bound on the
/// H-infinity norm.
inline double peak_gain_grid(const DiscreteStateSpace& g, int points = 2048, double* arg_peak = nullptr) {
  if (points < 2) throw ValidationError("peak_gain_grid: need at least two grid points");
  const FrequencyResponse fr(g);
  const double pi = std::numbers::pi;
  std::vector<double> vals(points);
  for (int i = 0; i < points; ++i) vals[i] = fr.max_singular_value(pi * i / (points - 1));

  std::vector<int> order(points);
  for (int i = 0; i < points; ++i) order[i] = i;
  const int refine = std::min(points, 4);
  std::partial_sort(order.begin(), order.begin() + refine, order.end(),
                    [&](int x, int y) { return vals[x] > vals[y]; });

  double best = vals[order[0]];
  double best_w = pi * order[0] / (points - 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int r = 0; r < refine; ++r) {
    const int i = order[r];
    double lo = pi * std::max(i - 1, 0) / (points - 1);
    double hi = pi * std::min(i + 1, points - 1) / (points - 1);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = fr.max_singular_value(x1), f2 = fr.max_singular_value(x2);
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
      if (f1 > f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = fr.max_singular_value(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = fr.max_singular_value(x2);
      }
    }
    for (auto [w, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
      if (f > best) {
        best = f;
        best_w = w;
      }
    }
  }
  if (arg_peak) *arg_peak = best_w;
  return best;
}

inline double max_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

struct BalancedReduction {
  DiscreteStateSpace sys;
  std::vector<double> hankel_singular_values;  // all of them, descending
  double error_bound;                          // 2 * sum of the discarded ones
};

/// Square-root balanced truncation of a stable system, discarding Hankel
/// singular values below rel_tol * largest. Removes the uncontrollable and
/// unobservable parts and leaves a well-scaled realization.
inline BalancedReduction balanced_reduction(const DiscreteStateSpace& g, double rel_tol = 1e-13) {
  if (!is_stable(g)) throw ValidationError("balanced_reduction: system is not stable");
  const Eigen::Index n = g.states();
  if (n == 0) return {g, {}, 0.0};
  const Matrix wc = solve_stein(g.a().transpose(), g.b() * g.b().transpose());
  const Matrix wo = solve_stein(g.a(), g.c().transpose() * g.c());
  auto factor = [](const Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w);
    return Matrix(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  };
  const Matrix lc = factor(wc), lo = factor(wo);
  Eigen::JacobiSVD<Matrix> svd(lo.transpose() * lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector hsv = svd.singularValues();

  Eigen::Index r = 0;
  while (r < n && hsv(r) > rel_tol * hsv(0)) ++r;
  double bound = 0.0;
  for (Eigen::Index i = r; i < n; ++i) bound += 2.0 * hsv(i);

  const Vector inv_sqrt = hsv.head(r).cwiseSqrt().cwiseInverse();
  const Matrix t = lc * svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
  const Matrix ti = inv_sqrt.asDiagonal() * svd.matrixU().leftCols(r).transpose() * lo.transpose();
  std::vector<double> values(hsv.data(), hsv.data() + n);
  return {DiscreteStateSpace(ti * g.a() * t, ti * g.b(), g.c() * t, g.d(), g.period()), std::move(values), bound};
}

/// Discrete bounded-real test: |G|_inf < gamma iff the DARE with
/// R = D'D - gamma^2 I has a stabilizing solution X >= 0 with
/// gamma^2 I - D'D - B'XB > 0. Requires A stable.
inline bool bounded_real(const DiscreteStateSpace& g, double gamma) {
  if (!(gamma > 0.0)) return false;
  // work with G / gamma against level 1 so the weights stay well scaled
  const Eigen::Index m = g.inputs();
  const Matrix c = g.c() / gamma, d = g.d() / gamma;
  const Matrix r = d.transpose() * d - Matrix::Identity(m, m);
  Eigen::SelfAdjointEigenSolver<Matrix> r_eig(r);
  if (m > 0 && r_eig.eigenvalues().maxCoeff() >= 0.0) return false;
  if (g.states() == 0) return true;
  try {
    const auto sol = solve_dare(g.a(), g.b(), c.transpose() * c, r, c.transpose() * d);
    Eigen::SelfAdjointEigenSolver<Matrix> x_eig(sol.x);
    if (x_eig.eigenvalues().minCoeff() < -1e-9 * (1.0 + sol.x.norm())) return false;
    const Matrix m_xb = r + g.b().transpose() * sol.x * g.b();
    Eigen::SelfAdjointEigenSolver<Matrix> m_eig(0.5 * (m_xb + m_xb.transpose()));
    return m_eig.eigenvalues().maxCoeff() < 0.0;
  } catch (const NumericalError&) {
    return false;
  }
}

/// H-infinity norm to absolute accuracy `tol`: a grid search supplies a lower
/// bound, the bounded-real test certifies or moves the upper bound. Runs on
/// the balanced realization.
inline double hinf_norm(const DiscreteStateSpace& full, double tol = 1e-8) {
  if (!(tol > 0.0)) throw ValidationError("hinf_norm: tolerance must be positive");
  if (!is_stable(full)) throw ValidationError("hinf_norm: system is not stable");
  const auto g = balanced_reduction(full).sys;
  if (g.states() == 0) return max_singular_value(g.d());
  const double lb = peak_gain_grid(g);
  double lo = lb, hi = lb + tol;
  if (bounded_real(g, hi)) return lb;
  lo = hi;
  hi = 2.0 * hi;
  while (!bounded_real(g, hi)) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("hinf_norm: no finite upper bound found");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (bounded_real(g, mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// True when |g|_inf < gamma is certified: bounded-real test on the balanced
/// realization with the truncation error bound subtracted from gamma.
inline bool certify_norm_below(const DiscreteStateSpace& g, double gamma) {
  if (!is_stable(g)) return false;
  const auto red = balanced_reduction(g);
  return bounded_real(red.sys, gamma - red.error_bound);
}

/// Lower LFT F(P, K): closes the measurement/control channels of `plant`
/// through `k`. Requires I - D22 D_K invertible.
inline DiscreteStateSpace close_loop(const PartitionedSystem& plant, const DiscreteStateSpace& k) {
  if (k.inputs() != plant.ny || k.outputs() != plant.nu) throw DimensionError("close_loop: controller shape mismatch");
  if (!detail::same_period(k.period(), plant.sys.period())) throw DimensionError("close_loop: sample periods differ");
  const Matrix a = plant.sys.a(), b1 = plant.b1(), b2 = plant.b2(), c1 = plant.c1(), c2 = plant.c2();
  const Matrix d11 = plant.d11(), d12 = plant.d12(), d21 = plant.d21(), d22 = plant.d22();
  const Eigen::Index n = a.rows(), nk = k.states();

  const Matrix i_y = Matrix::Identity(plant.ny, plant.ny);
  const Matrix i_u = Matrix::Identity(plant.nu, plant.nu);
  Eigen::FullPivLU<Matrix> ey_lu(i_y - d22 * k.d());
  if (!ey_lu.isInvertible()) throw NumericalError("close_loop: algebraic loop is ill-posed");
  const Matrix ey = ey_lu.inverse();
  const Matrix eu = (i_u - k.d() * d22).fullPivLu().inverse();

  Matrix acl(n + nk, n + nk);
  acl << a + b2 * eu * k.d() * c2, b2 * eu * k.c(), k.b() * ey * c2, k.a() + k.b() * ey * d22 * k.c();
  Matrix bcl(n + nk, plant.nw);
  bcl << b1 + b2 * eu * k.d() * d21, k.b() * ey * d21;
  Matrix ccl(plant.nz, n + nk);
  ccl << c1 + d12 * eu * k.d() * c2, d12 * eu * k.c();
  const Matrix dcl = d11 + d12 * eu * k.d() * d21;
  return {acl, bcl, ccl, dcl, plant.sys.period()};
}

struct Controller {
  DiscreteStateSpace inner;
  double gamma_certified;
};

struct SynthesisOptions {
  double epsilon = 1e-4;
  // Certify each returned controller with the bounded-real test on the true
  // closed loop (costly); otherwise only closed-loop stability is checked.
  bool verify = true;
  DareOptions dare{};
};

struct SynthesisReport {
  std::optional<Controller> controller;
  std::string reason;  // why gamma was rejected; empty on success
  double x_residual = 0.0;
  double y_residual = 0.0;
  int x_iterations = 0;
  int y_iterations = 0;
  double closed_loop_radius = std::numeric_limits<double>::quiet_NaN();

  bool feasible() const { return controller.has_value(); }
};

namespace detail {

struct FullInformation {
  Matrix x;
  Matrix f1, f2;  // worst-case disturbance and control gains
  Matrix r2, r3, nabla;
  double residual;
  int iterations;
};

inline Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Full-information H-infinity problem for
//   x+ = A x + B1 w + B2 u,  z = C1 x + D11 w + D12 u.
inline std::optional<FullInformation> full_information(const Matrix& a, const Matrix& b1, const Matrix& b2,
                                                       const Matrix& c1, const Matrix& d11, const Matrix& d12,
                                                       double gamma, const DareOptions& opts, std::string& why) {
  const Eigen::Index n = a.rows(), mw = b1.cols(), mu = b2.cols();
  Matrix b(n, mw + mu);
  b << b1, b2;
  Matrix d1(d11.rows(), mw + mu);
  d1 << d11, d12;
  Matrix r = d1.transpose() * d1;
  r.topLeftCorner(mw, mw) -= gamma * gamma * Matrix::Identity(mw, mw);

  DareSolution sol;
  try {
    sol = solve_dare(a, b, c1.transpose() * c1, r, c1.transpose() * d1, opts);
  } catch (const NumericalError& e) {
    why = e.what();
    return std::nullopt;
  }
  const Matrix mm = sym(r + b.transpose() * sol.x * b);
  const Matrix r1 = mm.topLeftCorner(mw, mw);
  const Matrix r2 = mm.bottomLeftCorner(mu, mw);
  const Matrix r3 = mm.bottomRightCorner(mu, mu);

  Eigen::SelfAdjointEigenSolver<Matrix> x_eig(sol.x);
  if (n > 0 && x_eig.eigenvalues().minCoeff() < -1e-9 * (1.0 + sol.x.norm())) {
    why = "Riccati solution is not positive semidefinite";
    return std::nullopt;
  }
  Eigen::LLT<Matrix> r3_llt(r3);
  if (r3_llt.info() != Eigen::Success) {
    why = "control weight R3 is not positive definite";
    return std::nullopt;
  }
  const Matrix nabla = sym(r1 - r2.transpose() * r3_llt.solve(r2));
  Eigen::LLT<Matrix> nabla_llt(-nabla);
  if (nabla_llt.info() != Eigen::Success) {
    why = "disturbance weight condition fails (gamma too small)";
    return std::nullopt;
  }
  const Matrix f = -sol.gain;
  return FullInformation{sol.x, f.topRows(mw), f.bottomRows(mu), r2, r3, nabla, sol.residual, sol.iterations};
}

inline Matrix spd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m));
  return es.operatorSqrt();
}

inline Matrix spd_inv_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m));
  return es.operatorInverseSqrt();
}

}  // namespace detail

/// Suboptimal output-feedback synthesis at level gamma. Returns a controller
/// (observer-form central controller) or the reason gamma is infeasible.
/// Requires D22 = 0.
inline SynthesisReport synthesize(const PartitionedSystem& plant, double gamma, const SynthesisOptions& opts = {}) {
  SynthesisReport rep;
  if (!(gamma > 0.0)) throw ValidationError("synthesize: gamma must be positive");
  if (!(opts.epsilon > 0.0)) throw ValidationError("synthesize: regularization epsilon must be positive");
  const Matrix d22 = plant.d22();
  if (d22.size() > 0 && d22.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + plant.sys.d().cwiseAbs().maxCoeff()))
    throw ValidationError("synthesize: plant must be strictly proper from u to y (D22 = 0)");

  const Matrix a = plant.sys.a();
  const Matrix b2 = plant.b2(), c2 = plant.c2();
  if (!is_stabilizable(a, b2)) throw NumericalError("synthesize: plant is not stabilizable from u");
  if (!is_detectable(c2, a)) throw NumericalError("synthesize: plant is not detectable from y");

  const Eigen::Index n = a.rows(), nw = plant.nw, nu = plant.nu, nz = plant.nz, ny = plant.ny;
  const double eps = opts.epsilon;

  // regularized plant: w_a = [w; v], z_a = [z; eps u], y = C2 x + D21 w + eps v
  Matrix b1a = Matrix::Zero(n, nw + ny);
  b1a.leftCols(nw) = plant.b1();
  Matrix c1a = Matrix::Zero(nz + nu, n);
  c1a.topRows(nz) = plant.c1();
  Matrix d11a = Matrix::Zero(nz + nu, nw + ny);
  d11a.topLeftCorner(nz, nw) = plant.d11();
  Matrix d12a(nz + nu, nu);
  d12a << plant.d12(), eps * Matrix::Identity(nu, nu);
  Matrix d21a(ny, nw + ny);
  d21a << plant.d21(), eps * Matrix::Identity(ny, ny);

  std::string why;
  const auto fi = detail::full_information(a, b1a, b2, c1a, d11a, d12a, gamma, opts.dare, why);
  if (!fi) {
    rep.reason = "state-feedback step: " + why;
    return rep;
  }
  rep.x_residual = fi->residual;
  rep.x_iterations = fi->iterations;

  // w_a = F1 x + Ws s turns the cost into |r|^2 - gamma^2 |s|^2 with
  // r = R3^{1/2} (u - F2 x) + R3^{-1/2} R2 Ws s.
  const Matrix ws = gamma * detail::spd_inv_sqrt(-fi->nabla);
  const Matrix r3h = detail::spd_sqrt(fi->r3);
  const Matrix r3hi = detail::spd_inv_sqrt(fi->r3);
  const Matrix at = a + b1a * fi->f1;
  const Matrix bt = b1a * ws;
  const Matrix ct2 = c2 + d21a * fi->f1;
  const Matrix dt21 = d21a * ws;
  const Matrix cf = -r3h * fi->f2;
  const Matrix df = r3hi * fi->r2 * ws;

  // Estimating r's signal part from y is the transpose of a full-information
  // problem; its gains give the observer injection L and feedthrough M.
  const auto dual = detail::full_information(at.transpose(), cf.transpose(), ct2.transpose(), bt.transpose(),
                                             df.transpose(), dt21.transpose(), gamma, opts.dare, why);
  if (!dual) {
    rep.reason = "estimation step: " + why;
    return rep;
  }
  rep.y_residual = dual->residual;
  rep.y_iterations = dual->iterations;

  const Matrix r3_inv_r2 = dual->r3.llt().solve(dual->r2);
  const Matrix kx = dual->f2 + r3_inv_r2 * dual->f1;
  const Matrix kw = -r3_inv_r2;
  const Matrix l = -kx.transpose();
  const Matrix m_est = -kw.transpose();
  const Matrix mk = -r3hi * m_est;

  const Matrix ak = at - l * ct2 + b2 * fi->f2 - b2 * mk * ct2;
  const Matrix bk = l + b2 * mk;
  const Matrix ck = fi->f2 - mk * ct2;
  DiscreteStateSpace k(ak, bk, ck, mk, plant.sys.period());

  if (!k.a().allFinite() || !k.b().allFinite() || !k.c().allFinite() || !k.d().allFinite()) {
    rep.reason = "controller formulas produced non-finite entries";
    return rep;
  }
  const auto cl = close_loop(plant, k);
  rep.closed_loop_radius = spectral_radius(cl.a());
  if (!(rep.closed_loop_radius < 1.0 - kStabilityMargin)) {
    rep.reason = "closed loop is not stable";
    return rep;
  }
  if (opts.verify && !certify_norm_below(cl, gamma * (1.0 + 1e-6))) {
    rep.reason = "closed-loop norm could not be certified below gamma";
    return rep;
  }
  rep.controller = Controller{std::move(k), gamma};
  return rep;
}

struct GammaIteration {
  double gamma_opt;
  Controller controller;
  SynthesisReport report;
  std::vector<std::pair<double, bool>> trace;  // (gamma, feasible) in evaluation order
};

/// Geometric bisection on gamma down to relative bracket width rel_tol.
/// Every bracket keeps feasible(hi) and not feasible(lo).
inline GammaIteration gamma_iterate(const PartitionedSystem& plant, double rel_tol = 1e-4,
                                    const SynthesisOptions& opts = {}) {
  if (!(rel_tol > 0.0)) throw ValidationError("gamma_iterate: relative tolerance must be positive");
  constexpr double kCap = 1e6;
  constexpr double kFloor = 1e-12;
  SynthesisOptions light = opts;
  light.verify = false;

  std::vector<std::pair<double, bool>> trace;
  auto feasible = [&](double g) {
    const bool ok = synthesize(plant, g, light).feasible();
    trace.emplace_back(g, ok);
    return ok;
  };

  double hi = 1.0;
  while (!feasible(hi)) {
    hi *= 2.0;
    if (hi > kCap) throw NumericalError("gamma_iterate: no feasible gamma found below 1e6");
  }
  double lo = hi / 2.0;
  while (feasible(lo)) {
    hi = lo;
    lo /= 2.0;
    if (lo < kFloor) break;
  }
  while (hi / lo > 1.0 + rel_tol) {
    const double mid = std::sqrt(lo * hi);
    (feasible(mid) ? hi : lo) = mid;
  }

  // the light test accepted hi; the certified check may need a little headroom
  for (int attempt = 0; attempt < 20; ++attempt) {
    auto rep = synthesize(plant, hi, opts);
    trace.emplace_back(hi, rep.feasible());
    if (rep.feasible()) {
      Controller k = *rep.controller;
      return {hi, std::move(k), std::move(rep), std::move(trace)};
    }
    hi *= 1.0 + rel_tol;
  }
  throw NumericalError("gamma_iterate: could not certify a controller near the bisection bound");
}

}  // namespace relay

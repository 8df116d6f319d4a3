#pragma once

// Closed-loop time-domain simulation of the relay at rate h.
//
// Per symbol slot n:
//   u[k]  = sum_i u_d[i] p[k - iN]                   transmitted baseband
//   r[k]  = w[k] + sum_j a r_j R_j u[k - l_j]       receiver input
//   y     = c2d_zoh(F) r                            anti-aliased samples
//   u_d[n+1] = K(y[nN], ..., y[nN+N-1])             one-symbol compute latency
// and the error is z[k] = w[k - mN] - u[k], peak-sampled into z_d.

#include <cmath>
#include <limits>
#include <vector>

#include "relay/hinf.hpp"
#include "relay/plant.hpp"
#include "relay/pulse.hpp"

namespace relay {

struct SimOptions {
  // Internal integration steps per h; signals are held between h-instants,
  // so any value reproduces the same samples.
  int resolution = 1;
  // Zero symbols appended to the input to observe the tail.
  int extra_symbols = 0;
};

struct SimTrace {
  std::vector<double> t;
  BasebandSignal w, u, z, y;
  SymbolSequence w_d, u_d, z_d;  // equal lengths; w_d is zero-padded
  Eigen::Index input_symbols = 0;
  int ratio = 1;  // samples per symbol
  double gamma_used = 0.0;
  // max |z - (delayed w - synthesize(u_d))| over the trace, recomputed from the
  // symbol sequences independently of the loop recursion
  double self_check_error = 0.0;
  std::vector<double> controller_state_norm;  // one entry per executed block
  Eigen::Index diverged_at = -1;              // first sample index past the blow-up guard

  bool diverged() const { return diverged_at >= 0; }
};

inline int default_transient(const RelayParams& p) {
  return p.processing_delay + p.pulse_support / p.ratio + p.perf_shift();
}

inline SimTrace simulate(const RelayParams& p, const FirPulse& pulse, const Controller& k,
                         const SymbolSequence& w_d, const SimOptions& opts = {}) {
  p.validate();
  const int N = p.ratio;
  if (pulse.ratio != N || pulse.support() != p.pulse_support)
    throw DimensionError("simulate: pulse does not match the relay parameters");
  const auto& kss = k.inner;
  if (kss.inputs() != 2 * N || kss.outputs() != 2 || !detail::same_period(kss.period(), N * p.sample_period))
    throw DimensionError("simulate: controller does not match the relay parameters");
  if (opts.resolution < 1 || opts.extra_symbols < 0) throw ValidationError("simulate: invalid options");

  SimTrace tr;
  tr.gamma_used = k.gamma_certified;
  tr.input_symbols = w_d.size();
  tr.ratio = N;
  const Eigen::Index ns = w_d.size() + opts.extra_symbols;
  if (ns == 0) return tr;

  SymbolSequence src = SymbolSequence::zeros(ns);
  src.values.leftCols(w_d.size()) = w_d.values;
  tr.w = synthesize_baseband(src, pulse);
  const Eigen::Index len = tr.w.size();
  const int half = pulse.center();
  const Eigen::Index nz = (len - 1 - half) / N + 1;
  const Eigen::Index blocks = (len + N - 1) / N;

  const int res = opts.resolution;
  const auto fd = c2d_zoh(p.filter, p.sample_period / res);
  const auto qd = coupling_taps(p);

  tr.u.samples = Eigen::Matrix2Xd::Zero(2, len);
  tr.y.samples = Eigen::Matrix2Xd::Zero(2, len);
  Eigen::Matrix2Xd ud = Eigen::Matrix2Xd::Zero(2, blocks + 1);
  Vector xf = Vector::Zero(fd.states());
  Vector xk = Vector::Zero(kss.states());
  Vector yblock(2 * N);
  constexpr double kBlowUp = 1e150;

  for (Eigen::Index n = 0; n < blocks && !tr.diverged(); ++n) {
    const Eigen::Index first = n * N;
    const Eigen::Index last = std::min<Eigen::Index>(first + N, len);
    for (Eigen::Index s = first; s < last; ++s) {
      Eigen::Vector2d us = Eigen::Vector2d::Zero();
      for (Eigen::Index i = std::max<Eigen::Index>(0, (s - pulse.support() + N - 1) / N); i <= n; ++i) {
        const Eigen::Index tap = s - i * N;
        if (tap >= 0 && tap <= pulse.support()) us += pulse.taps[tap] * ud.col(i);
      }
      tr.u.samples.col(s) = us;

      Eigen::Vector2d r = tr.w.samples.col(s);
      for (std::size_t l = 1; l < qd.size(); ++l)
        if (s >= static_cast<Eigen::Index>(l)) r += qd[l] * tr.u.samples.col(s - l);
      for (int sub = 0; sub < res; ++sub) {
        if (sub == 0) tr.y.samples.col(s) = fd.c() * xf + fd.d() * r;
        xf = fd.a() * xf + fd.b() * r;
      }
      if (!tr.y.samples.col(s).allFinite() || tr.y.samples.col(s).cwiseAbs().maxCoeff() > kBlowUp ||
          tr.u.samples.col(s).cwiseAbs().maxCoeff() > kBlowUp) {
        tr.diverged_at = s;
        break;
      }
    }
    if (tr.diverged() || last - first < N) break;
    for (int j = 0; j < N; ++j) yblock.segment(2 * j, 2) = tr.y.samples.col(first + j);
    ud.col(n + 1) = kss.c() * xk + kss.d() * yblock;
    xk = kss.a() * xk + kss.b() * yblock;
    tr.controller_state_norm.push_back(xk.norm());
  }

  if (tr.diverged()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index s = tr.diverged_at; s < len; ++s) {
      tr.u.samples.col(s).setConstant(nan);
      tr.y.samples.col(s).setConstant(nan);
    }
  }

  const Eigen::Index delay = static_cast<Eigen::Index>(p.processing_delay) * N;
  tr.z.samples = -tr.u.samples;
  for (Eigen::Index s = delay; s < len; ++s) tr.z.samples.col(s) += tr.w.samples.col(s - delay);

  tr.t.resize(len);
  for (Eigen::Index s = 0; s < len; ++s) tr.t[s] = s * p.sample_period;

  tr.w_d = SymbolSequence::zeros(nz);
  tr.w_d.values.leftCols(std::min(nz, w_d.size())) = w_d.values.leftCols(std::min(nz, w_d.size()));
  tr.u_d = SymbolSequence::zeros(nz);
  tr.u_d.values = ud.leftCols(std::min<Eigen::Index>(nz, ud.cols()));
  tr.z_d = matched_sample(tr.z, pulse, nz);

  if (!tr.diverged()) {
    // z(t) = w(t - mT) - u(t) rebuilt from the symbol streams alone
    SymbolSequence delayed = SymbolSequence::zeros(ns + p.processing_delay);
    delayed.values.rightCols(ns) = src.values;
    const auto w_delayed = synthesize_baseband(delayed, pulse);
    const auto u_rebuilt = synthesize_baseband({ud}, pulse);
    double err = 0.0;
    for (Eigen::Index s = 0; s < len; ++s) {
      Eigen::Vector2d zz = -u_rebuilt.samples.col(s);
      if (s < w_delayed.size()) zz += w_delayed.samples.col(s);
      err = std::max(err, (zz - tr.z.samples.col(s)).cwiseAbs().maxCoeff());
    }
    tr.self_check_error = err;
  } else {
    tr.self_check_error = std::numeric_limits<double>::infinity();
  }
  return tr;
}

struct ErrorMetrics {
  double energy_ratio;  // sum_{n >= T} |z_d[n]|^2 / sum_n |w_d[n]|^2
  double peak_abs_z;    // max |z[k]| for k >= T N
  double evm;           // RMS z_d over the window / RMS w_d over the input
};

inline ErrorMetrics error_metrics(const SimTrace& tr, int transient_symbols) {
  if (transient_symbols < 0) throw ValidationError("error_metrics: negative transient");
  if (transient_symbols >= tr.z_d.size()) throw ValidationError("error_metrics: no samples after the transient");
  const double inf = std::numeric_limits<double>::infinity();
  if (tr.diverged()) return {inf, inf, inf};

  const Eigen::Index window = tr.z_d.size() - transient_symbols;
  const double z_energy = tr.z_d.values.rightCols(window).squaredNorm();
  const double w_energy = tr.w_d.energy();

  double peak = 0.0;
  for (Eigen::Index s = static_cast<Eigen::Index>(transient_symbols) * tr.ratio; s < tr.z.size(); ++s)
    peak = std::max(peak, tr.z.samples.col(s).norm());

  ErrorMetrics m{};
  if (w_energy > 0.0) {
    m.energy_ratio = z_energy / w_energy;
    const double rms_z = std::sqrt(z_energy / static_cast<double>(window));
    const double rms_w = std::sqrt(w_energy / static_cast<double>(std::max<Eigen::Index>(1, tr.input_symbols)));
    m.evm = rms_z / rms_w;
  } else {
    m.energy_ratio = z_energy > 0.0 ? inf : 0.0;
    m.evm = z_energy > 0.0 ? inf : 0.0;
  }
  m.peak_abs_z = peak;
  return m;
}

/// Comparison arm: the gamma-optimal canceler designed as if there were no
/// coupling (a = 0), to be evaluated on the true relay.
inline Controller baseline_controller(const RelayParams& p, const FirPulse& pulse, double rel_tol = 1e-4,
                                      const SynthesisOptions& opts = {}) {
  RelayParams decoupled = p;
  decoupled.amplifier_gain = 0.0;
  return gamma_iterate(build_generalized_plant(decoupled, pulse).sigma, rel_tol, opts).controller;
}

}  // namespace relay

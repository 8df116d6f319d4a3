#pragma once

// Relay model and the lifted generalized plant
//
//        [ z_d ]   [ T11  T12 ] [ w_d ]
//        [  y  ] = [ T21  T22 ] [ u   ]
//
// at symbol rate. w_d are the source symbols, u is the canceler command,
// z_d the peak-sampled delayed error and y the lifted block of N rate-h
// measurements. All blocks are built at rate h and lifted by N.
//
// Timing conventions:
//  * the command u[n] computed from measurement block n is transmitted as
//    symbol n+1 (one symbol of compute latency), so T22 and T12 are strictly
//    proper at block level;
//  * the performance row is delayed by perf_shift = ceil(N_p / 2N) symbols so
//    that peak sampling of the transmitted pulse is causal. A pure delay on the
//    performance output leaves every closed-loop l2-induced norm unchanged.

#include <cmath>
#include <numbers>
#include <vector>

#include "relay/lifting.hpp"
#include "relay/pulse.hpp"
#include "relay/sysmat.hpp"

namespace relay {

struct Path {
  double gain;  // r_j
  int delay;    // l_j, in rate-h samples
};

struct RelayParams {
  double amplifier_gain = 0.0;  // a
  std::vector<Path> paths;
  double carrier = 0.0;         // f
  double sample_period = 1.0;   // h
  int ratio = 1;                // N, T = N h
  int processing_delay = 0;     // m, in symbols
  int pulse_support = 2;        // N_p, in rate-h samples
  double rolloff = 1.0;         // beta
  ContinuousStateSpace filter{Matrix::Zero(0, 0), Matrix::Zero(0, 2), Matrix::Zero(2, 0), Matrix::Identity(2, 2)};

  /// Throws ValidationError naming the violated rule.
  void validate() const {
    if (!(amplifier_gain >= 0.0) || !std::isfinite(amplifier_gain))
      throw ValidationError("amplifier gain a must be finite and nonnegative");
    for (const auto& p : paths) {
      if (!(p.gain > 0.0)) throw ValidationError("path gains r_j must be positive");
      if (p.delay <= 0) throw ValidationError("path delays l_j must be positive integers");
    }
    if (!(sample_period > 0.0)) throw ValidationError("sample period h must be positive");
    if (ratio < 1) throw ValidationError("upsampling ratio N must be at least 1");
    if (processing_delay < 0) throw ValidationError("processing delay m must be nonnegative");
    if (pulse_support <= 0 || pulse_support % 2 != 0) throw ValidationError("pulse support N_p must be a positive even integer");
    if (!(pulse_support / 2 < processing_delay * ratio))
      throw ValidationError("causality rule violated: need N_p/2 < m*N");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ValidationError("roll-off beta must lie in (0, 1]");
    if (filter.inputs() != 2 || filter.outputs() != 2) throw ValidationError("anti-alias filter F must be 2x2");
    if (!is_stable(filter)) throw ValidationError("anti-alias filter F must be stable");
  }

  int perf_shift() const { return (pulse_support + 2 * ratio - 1) / (2 * ratio); }

  /// F(s) = dc_gain / (tau s + 1) on both channels.
  static ContinuousStateSpace first_order_filter(double tau, double dc_gain = 1.0) {
    if (!(tau > 0.0)) throw ValidationError("filter time constant must be positive");
    const Matrix i2 = Matrix::Identity(2, 2);
    return {-i2 / tau, i2 * (dc_gain / tau), i2, Matrix::Zero(2, 2)};
  }

  /// The simulation setup of the reference relay study.
  static RelayParams reference_setup() {
    RelayParams p;
    p.amplifier_gain = 2500.0;
    p.paths = {{0.2, 10}, {0.17, 12}};
    p.carrier = 10000.0;
    p.sample_period = 1.0;
    p.ratio = 2;
    p.processing_delay = 5;
    p.pulse_support = 16;
    p.rolloff = 0.1;
    p.filter = first_order_filter(0.5);
    return p;
  }
};

/// Carrier phase rotation accumulated over a delay of `delay_time`.
inline Eigen::Matrix2d rotation_matrix(double carrier, double delay_time) {
  // reduce f*L modulo 1 first so large integer products give an exact identity
  const double turns = carrier * delay_time - std::floor(carrier * delay_time);
  const double th = 2.0 * std::numbers::pi * turns;
  Eigen::Matrix2d r;
  r << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
  return r;
}

/// Taps of the multipath coupling sum_j a r_j R_j z^{-l_j} at rate h.
inline std::vector<Matrix> coupling_taps(const RelayParams& p) {
  int longest = 0;
  for (const auto& path : p.paths) longest = std::max(longest, path.delay);
  std::vector<Matrix> taps(static_cast<std::size_t>(longest) + 1, Matrix::Zero(2, 2));
  for (const auto& path : p.paths)
    taps[path.delay] += p.amplifier_gain * path.gain * rotation_matrix(p.carrier, path.delay * p.sample_period);
  return taps;
}

inline DiscreteStateSpace discretized_filter(const RelayParams& p) { return c2d_zoh(p.filter, p.sample_period); }

/// Sampled anti-alias filter after the multipath coupling, as seen from the
/// held transmit samples: c2d_zoh(F) * sum_j a r_j R_j z^{-l_j}.
/// Exact because every path delay is a whole number of h acting on a
/// piecewise-constant signal.
inline DiscreteStateSpace build_coupling_channel(const RelayParams& p) {
  p.validate();
  return series(discretized_filter(p), fir_mimo_to_ss(coupling_taps(p), p.sample_period));
}

struct GeneralizedPlant {
  PartitionedSystem sigma;  // (z: 2, y: 2N) x (w: 2, u: 2), period N h
  int perf_shift;           // q, symbols of delay added to the performance row
  int ratio;                // N
  int latency;              // symbols between a command and its transmission

  static constexpr Eigen::Index kChannels = 2;
};

namespace detail {

inline void add_tap(std::vector<Matrix>& taps, std::size_t delay, Eigen::Index row, Eigen::Index col,
                    const Matrix& block) {
  if (taps.size() <= delay) taps.resize(delay + 1, Matrix::Zero(taps.front().rows(), taps.front().cols()));
  taps[delay].block(row, col, block.rows(), block.cols()) += block;
}

}  // namespace detail

/// Assembles Sigma. At rate h the plant has inputs [w_up; u_up] (upsampled
/// symbols) and outputs [z_h; y_h]:
///   z_h = z^{-((m+q)N - N_p/2)} P w_up - z^{-(qN - N_p/2 + N)} P u_up
///   r_h = P w_up + Q_d z^{-N} P u_up        (receiver input)
///   y_h = c2d_zoh(F) r_h
/// All FIR parts share one shift-register realization. The system is
/// lifted by N; inputs keep the first sub-channel (upsampling) and z keeps
/// the first output sub-channel (downsampling).
/// `perf_shift` < 0 selects the smallest causal shift; larger values add
/// pure delay to the performance row.
inline GeneralizedPlant build_generalized_plant(const RelayParams& p, const FirPulse& pulse, int perf_shift = -1) {
  p.validate();
  if (pulse.ratio != p.ratio || pulse.support() != p.pulse_support)
    throw DimensionError("pulse does not match the relay parameters (N, N_p)");

  constexpr Eigen::Index c = GeneralizedPlant::kChannels;
  const int N = p.ratio;
  const int half = p.pulse_support / 2;
  if (perf_shift >= 0 && perf_shift < p.perf_shift())
    throw ValidationError("performance shift below ceil(N_p / 2N) would make the plant non-causal");
  const int q = perf_shift < 0 ? p.perf_shift() : perf_shift;
  const int latency = 1;
  const int ref_delay = (p.processing_delay + q) * N - half;
  const int cmd_delay = q * N - half + latency * N;

  const Matrix i2 = Matrix::Identity(c, c);
  const auto qd = coupling_taps(p);

  // outputs [z_h; r_h], inputs [w_up; u_up]
  std::vector<Matrix> taps(1, Matrix::Zero(2 * c, 2 * c));
  for (int i = 0; i <= p.pulse_support; ++i) {
    const double t = pulse.taps[i];
    detail::add_tap(taps, ref_delay + i, 0, 0, t * i2);
    detail::add_tap(taps, cmd_delay + i, 0, c, -t * i2);
    detail::add_tap(taps, i, c, 0, t * i2);
    for (std::size_t l = 0; l < qd.size(); ++l) {
      if (qd[l].cwiseAbs().maxCoeff() == 0.0) continue;
      detail::add_tap(taps, latency * N + l + i, c, c, t * qd[l]);
    }
  }
  const auto fir = fir_mimo_to_ss(taps, p.sample_period);
  const auto rate_h = series(append(identity_system(c, p.sample_period), discretized_filter(p)), fir);
  const auto lifted = lift(rate_h, N);

  // lifted outputs are [z_h; y_h] per sub-sample
  std::vector<Eigen::Index> rows;
  for (Eigen::Index j = 0; j < c; ++j) rows.push_back(j);
  for (int s = 0; s < N; ++s)
    for (Eigen::Index j = 0; j < c; ++j) rows.push_back(s * 2 * c + c + j);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < 2 * c; ++j) cols.push_back(j);

  return {PartitionedSystem(select_io(lifted.inner, rows, cols), c, c * N, c, c), q, N, latency};
}

}  // namespace relay

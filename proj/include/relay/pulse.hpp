#pragma once

// Baseband signal machinery: the sampled square-root raised-cosine pulse,
// pulse-shaped synthesis (upsample then FIR), peak sampling and exact
// projection onto the shifted pulses, and an OFDM-BPSK symbol source.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "relay/errors.hpp"

namespace relay {

/// Sampled pulse phi(k h), k = 0..support. Doubles as the impulse response
/// of the band-limiting filter P(z).
struct FirPulse {
  std::vector<double> taps;
  int ratio = 1;               // samples per symbol N
  double sample_period = 1.0;  // h

  int support() const { return static_cast<int>(taps.size()) - 1; }
  int center() const { return support() / 2; }
  double symbol_period() const { return ratio * sample_period; }
  double peak() const { return taps[static_cast<std::size_t>(center())]; }

  double energy() const {
    double e = 0.0;
    for (double t : taps) e += t * t;
    return e;
  }

  /// Correlation of the pulse with itself shifted by `shift` symbols.
  double gram(int shift) const {
    const int lag = std::abs(shift) * ratio;
    double acc = 0.0;
    for (int k = lag; k <= support(); ++k) acc += taps[k] * taps[k - lag];
    return acc;
  }
};

/// Symbol-rate sequence of (in-phase, quadrature) pairs, one column each.
struct SymbolSequence {
  Eigen::Matrix2Xd values;

  Eigen::Index size() const { return values.cols(); }
  double energy() const { return values.squaredNorm(); }

  static SymbolSequence zeros(Eigen::Index n) { return {Eigen::Matrix2Xd::Zero(2, n)}; }
};

/// Rate-h two-channel signal, one column per sample.
struct BasebandSignal {
  Eigen::Matrix2Xd samples;

  Eigen::Index size() const { return samples.cols(); }
  double energy() const { return samples.squaredNorm(); }
};

/// Continuous-time square-root raised-cosine impulse response for roll-off
/// beta and symbol period T, including its limits at t = 0 and |t| = T/(4 beta).
inline double srrc_value(double t, double beta, double symbol_period) {
  using std::numbers::pi;
  const double x = t / symbol_period;
  if (std::abs(x) < 1e-12) return 1.0 - beta + 4.0 * beta / pi;
  const double q = 4.0 * beta * x;
  if (std::abs(std::abs(q) - 1.0) < 1e-12) {
    const double arg = pi / (4.0 * beta);
    return beta / std::sqrt(2.0) * ((1.0 + 2.0 / pi) * std::sin(arg) + (1.0 - 2.0 / pi) * std::cos(arg));
  }
  return (std::sin(pi * x * (1.0 - beta)) + q * std::cos(pi * x * (1.0 + beta))) / (pi * x * (1.0 - q * q));
}

/// Samples the SRRC pulse centred on the support at rate N per symbol and
/// normalizes it to unit l2 energy.
inline FirPulse srrc_taps(double beta, int ratio, int support, double sample_period = 1.0) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("srrc_taps: roll-off must lie in (0, 1]");
  if (ratio < 1) throw ValidationError("srrc_taps: upsampling ratio must be positive");
  if (support <= 0 || support % 2 != 0) throw ValidationError("srrc_taps: support must be a positive even integer");
  if (support < 2 * ratio) throw ValidationError("srrc_taps: support must span at least two symbols");

  FirPulse p;
  p.ratio = ratio;
  p.sample_period = sample_period;
  p.taps.resize(static_cast<std::size_t>(support) + 1);
  const int half = support / 2;
  double e = 0.0;
  for (int k = 0; k <= support; ++k) {
    // symmetric about the centre by construction: |k - half| is all that matters
    const double v = srrc_value(std::abs(k - half), beta, ratio);
    p.taps[k] = v;
    e += v * v;
  }
  const double scale = 1.0 / std::sqrt(e);
  for (double& t : p.taps) t *= scale;
  return p;
}

/// Upsample by N and filter by P(z): out[k] = sum_n s[n] taps[k - nN].
/// Length (len(s) - 1) N + N_p + 1.
inline BasebandSignal synthesize_baseband(const SymbolSequence& symbols, const FirPulse& pulse) {
  if (symbols.size() == 0) return {Eigen::Matrix2Xd(2, 0)};
  const Eigen::Index len = (symbols.size() - 1) * pulse.ratio + pulse.support() + 1;
  BasebandSignal out{Eigen::Matrix2Xd::Zero(2, len)};
  for (Eigen::Index n = 0; n < symbols.size(); ++n) {
    const Eigen::Index base = n * pulse.ratio;
    for (int k = 0; k <= pulse.support(); ++k) out.samples.col(base + k) += pulse.taps[k] * symbols.values.col(n);
  }
  return out;
}

/// Peak sampling: entries[n] = signal[n N + N_p / 2].
inline SymbolSequence matched_sample(const BasebandSignal& signal, const FirPulse& pulse, Eigen::Index count) {
  if (count < 0) throw ValidationError("matched_sample: negative count");
  if (count > 0 && (count - 1) * pulse.ratio + pulse.center() >= signal.size())
    throw DimensionError("matched_sample: signal too short for requested symbol count");
  SymbolSequence out = SymbolSequence::zeros(count);
  for (Eigen::Index n = 0; n < count; ++n) out.values.col(n) = signal.samples.col(n * pulse.ratio + pulse.center());
  return out;
}

/// Inner products with the shifted pulses on the h-grid:
/// entries[n] = sum_k signal[k] taps[k - nN]. Samples past the end count as zero.
inline SymbolSequence exact_project(const BasebandSignal& signal, const FirPulse& pulse, Eigen::Index count) {
  if (count < 0) throw ValidationError("exact_project: negative count");
  SymbolSequence out = SymbolSequence::zeros(count);
  for (Eigen::Index n = 0; n < count; ++n) {
    const Eigen::Index base = n * pulse.ratio;
    for (int k = 0; k <= pulse.support() && base + k < signal.size(); ++k)
      out.values.col(n) += pulse.taps[k] * signal.samples.col(base + k);
  }
  return out;
}

/// OFDM modulation of a BPSK (+-1) stream: per block an inverse DFT of
/// length block_len, a cyclic prefix of guard_len samples, real part on
/// channel 1 and imaginary part on channel 2. The whole sequence is scaled
/// to unit average symbol energy.
inline SymbolSequence ofdm_modulate(std::span<const double> bpsk, int block_len, int guard_len) {
  if (block_len < 1 || (block_len & (block_len - 1)) != 0)
    throw ValidationError("ofdm: block length must be a power of two");
  if (guard_len < 0 || guard_len >= block_len) throw ValidationError("ofdm: guard length must lie in [0, block_len)");
  if (bpsk.size() % static_cast<std::size_t>(block_len) != 0)
    throw DimensionError("ofdm: bit count is not a whole number of blocks");

  using cd = std::complex<double>;
  const Eigen::Index blocks = static_cast<Eigen::Index>(bpsk.size()) / block_len;
  const int frame = block_len + guard_len;
  SymbolSequence out = SymbolSequence::zeros(blocks * frame);

  std::vector<cd> twiddle(block_len);
  for (int k = 0; k < block_len; ++k)
    twiddle[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / block_len);

  std::vector<cd> time(block_len);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const double* freq = bpsk.data() + b * block_len;
    for (int n = 0; n < block_len; ++n) {
      cd acc = 0.0;
      for (int k = 0; k < block_len; ++k) acc += freq[k] * twiddle[(static_cast<long>(k) * n) % block_len];
      time[n] = acc / static_cast<double>(block_len);
    }
    const Eigen::Index base = b * frame;
    for (int i = 0; i < frame; ++i) {
      const cd v = time[(i - guard_len + block_len) % block_len];
      out.values(0, base + i) = v.real();
      out.values(1, base + i) = v.imag();
    }
  }
  const double mean_energy = out.energy() / static_cast<double>(out.size());
  if (mean_energy > 0.0) out.values /= std::sqrt(mean_energy);
  return out;
}

/// Random OFDM-BPSK source. Bits come from std::mt19937_64 seeded with
/// `seed` (its output sequence is fixed by the C++ standard); the top bit
/// of each draw selects +1 or -1.
inline SymbolSequence generate_ofdm_bpsk(int num_blocks, int block_len, int guard_len, std::uint64_t seed) {
  if (num_blocks < 1) throw ValidationError("ofdm: need at least one block");
  std::mt19937_64 rng(seed);
  std::vector<double> bpsk(static_cast<std::size_t>(num_blocks) * block_len);
  for (double& b : bpsk) b = (rng() >> 63) ? 1.0 : -1.0;
  return ofdm_modulate(bpsk, block_len, guard_len);
}

}  // namespace relay

#pragma once

// Discrete-time lifting: regroup a rate-h system into an equivalent system at
// rate N*h whose signals are blocks of N consecutive rate-h samples.

#include <vector>

#include "relay/sysmat.hpp"

namespace relay {

struct LiftedSystem {
  DiscreteStateSpace inner;
  int ratio;
  Eigen::Index base_inputs;
  Eigen::Index base_outputs;
};

/// Block realization
///   [ A^N      | A^{N-1}B  A^{N-2}B ...  B ]
///   [ C        | D         0        ...  0 ]
///   [ CA       | CB        D        ...    ]
///   [ ...                                  ]
///   [ CA^{N-1} | CA^{N-2}B ...           D ]
/// Input and output blocks are ordered oldest sample first.
inline LiftedSystem lift(const DiscreteStateSpace& g, int n_ratio) {
  if (n_ratio < 1) throw ValidationError("lift: ratio must be at least 1");
  const Eigen::Index n = g.states(), m = g.inputs(), p = g.outputs();
  const int N = n_ratio;

  // powers[k] = A^k, k = 0..N
  std::vector<Matrix> powers(N + 1);
  powers[0] = Matrix::Identity(n, n);
  for (int k = 1; k <= N; ++k) powers[k] = g.a() * powers[k - 1];

  Matrix b(n, m * N);
  for (int j = 0; j < N; ++j) b.middleCols(j * m, m) = powers[N - 1 - j] * g.b();

  Matrix c(p * N, n);
  for (int i = 0; i < N; ++i) c.middleRows(i * p, p) = g.c() * powers[i];

  Matrix d = Matrix::Zero(p * N, m * N);
  for (int i = 0; i < N; ++i) {
    d.block(i * p, i * m, p, m) = g.d();
    for (int j = 0; j < i; ++j) d.block(i * p, j * m, p, m) = g.c() * powers[i - j - 1] * g.b();
  }
  return {DiscreteStateSpace(powers[N], b, c, d, g.period() * N), N, m, p};
}

/// Groups consecutive N-tuples of a (channels x K) sequence into a
/// (channels*N x ceil(K/N)) block sequence; a short tail is zero-padded.
inline Matrix block_sequence(const Matrix& x, int n_ratio) {
  if (n_ratio < 1) throw ValidationError("block_sequence: ratio must be at least 1");
  const Eigen::Index ch = x.rows();
  const Eigen::Index blocks = (x.cols() + n_ratio - 1) / n_ratio;
  Matrix out = Matrix::Zero(ch * n_ratio, blocks);
  for (Eigen::Index k = 0; k < x.cols(); ++k) out.block((k % n_ratio) * ch, k / n_ratio, ch, 1) = x.col(k);
  return out;
}

/// Inverse of block_sequence (without removing any padding).
inline Matrix unblock_sequence(const Matrix& blocks, int n_ratio) {
  if (n_ratio < 1) throw ValidationError("unblock_sequence: ratio must be at least 1");
  if (blocks.rows() % n_ratio != 0) throw DimensionError("unblock_sequence: row count not divisible by ratio");
  const Eigen::Index ch = blocks.rows() / n_ratio;
  Matrix out(ch, blocks.cols() * n_ratio);
  for (Eigen::Index k = 0; k < out.cols(); ++k) out.col(k) = blocks.block((k % n_ratio) * ch, k / n_ratio, ch, 1);
  return out;
}

/// Keeps only the input sub-channel carrying the first rate-h sample of each
/// block (the leading base_width lifted input columns), i.e. composes the
/// lifted system with the upsampler-then-block map on its input side.
inline DiscreteStateSpace select_first_subchannel(const LiftedSystem& sys, Eigen::Index base_width) {
  if (base_width < 1 || sys.inner.inputs() != base_width * sys.ratio)
    throw DimensionError("select_first_subchannel: lifted input width is not ratio * base_width");
  std::vector<Eigen::Index> rows(sys.inner.outputs());
  for (Eigen::Index i = 0; i < sys.inner.outputs(); ++i) rows[i] = i;
  std::vector<Eigen::Index> cols(base_width);
  for (Eigen::Index j = 0; j < base_width; ++j) cols[j] = j;
  return select_io(sys.inner, rows, cols);
}

}  // namespace relay

#pragma once

#include <cstdint>
#include <vector>

#include "mstf/geom.hpp"
#include "mstf/rng.hpp"

namespace mstf {

/// Per-step availability of an observed trajectory: 1 = observed, 0 = missing.
/// At least one step is always observed.
struct SequenceMask {
  std::vector<uint8_t> values;

  int len() const { return static_cast<int>(values.size()); }
  int observed_count() const;
};

/// Square 0/1 matrix.
struct Mask2D {
  int len = 0;
  std::vector<uint8_t> v;  // row-major, len * len

  Mask2D() = default;
  explicit Mask2D(int n) : len(n), v(static_cast<size_t>(n) * static_cast<size_t>(n), 0) {}
  uint8_t at(int r, int c) const {
    return v[static_cast<size_t>(r) * static_cast<size_t>(len) + static_cast<size_t>(c)];
  }
  uint8_t& at(int r, int c) {
    return v[static_cast<size_t>(r) * static_cast<size_t>(len) + static_cast<size_t>(c)];
  }
  int row_sum(int r) const;
};

/// One len x len matrix per attention head. Entry (a, b) of the matrix with
/// granularity g is 1 iff g divides (a - b), so every diagonal entry is 1 and
/// each matrix is symmetric.
struct PaddingMaskSet {
  std::vector<int> granularities;
  std::vector<Mask2D> masks;
};

/// Row-wise product of a padding mask with the sequence mask: marks steps
/// that are both within a head's stride pattern and actually observed.
struct ObservationMatrixSet {
  std::vector<Mask2D> masks;
};

/// Per-head, per-query-step count of observed admissible steps.
struct InfoIncrement {
  std::vector<std::vector<int>> sigma;  // [head][step]
};

/// Half-open missing-rate range (lo, hi].
struct MissingInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Draws the number of missing steps k uniformly from the integers with
/// lo*len < k <= hi*len, capped at len - 1 so at least one step stays
/// observed, then zeroes k distinct positions chosen uniformly without
/// replacement. Throws DataError for an interval that admits no valid k.
SequenceMask sample_sequence_mask(int len, MissingInterval interval, Rng& rng);

/// Zeroes the coordinates of masked steps; observed steps pass through
/// bit-identically. Throws DataError on length mismatch.
std::vector<Pt> apply_mask(const std::vector<Pt>& history, const SequenceMask& mask);

PaddingMaskSet build_padding_masks(int len, int n_heads);
/// Padding masks for explicit per-head granularities (ablation uses all 1s).
PaddingMaskSet build_padding_masks(int len, const std::vector<int>& granularities);

ObservationMatrixSet observation_matrices(const SequenceMask& ms, const PaddingMaskSet& mp);

InfoIncrement info_increment(const ObservationMatrixSet& obs);

/// Attention needs every query row to admit at least one key. If combining
/// the masks zeroed an entire row (a missing query step with no observed
/// admissible step), re-enable that row's diagonal. Other rows, and the
/// information increments, are untouched.
Mask2D guard_attention_mask(const Mask2D& m_obs);

}  // namespace mstf

#include "mstf/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mstf/errors.hpp"

namespace mstf {

int SequenceMask::observed_count() const {
  return static_cast<int>(std::count(values.begin(), values.end(), uint8_t{1}));
}

int Mask2D::row_sum(int r) const {
  int s = 0;
  for (int c = 0; c < len; ++c) s += at(r, c);
  return s;
}

SequenceMask sample_sequence_mask(int len, MissingInterval interval, Rng& rng) {
  if (len < 1) throw DataError("sample_sequence_mask: len must be >= 1");
  if (!(interval.lo >= 0.0 && interval.lo < interval.hi && interval.hi < 1.0)) {
    throw DataError("sample_sequence_mask: interval (" + std::to_string(interval.lo) + ", " +
                    std::to_string(interval.hi) + "] is not a valid missing-rate range");
  }
  // k strictly above lo*len, at most hi*len, and at most len-1. The small
  // epsilon absorbs products like 0.3 * 10 that land one ulp off an integer.
  const int k_min = static_cast<int>(std::floor(interval.lo * len + 1e-9)) + 1;
  const int k_max =
      std::min(static_cast<int>(std::floor(interval.hi * len + 1e-9)), len - 1);
  if (k_min > k_max) {
    throw DataError("sample_sequence_mask: interval (" + std::to_string(interval.lo) + ", " +
                    std::to_string(interval.hi) + "] admits no missing count for len " +
                    std::to_string(len));
  }
  const int k = static_cast<int>(rng.uniform_int(k_min, k_max));

  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  std::vector<int> idx(static_cast<size_t>(len));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = static_cast<int>(rng.uniform_int(i, len - 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  SequenceMask m;
  m.values.assign(static_cast<size_t>(len), 1);
  for (int i = 0; i < k; ++i) m.values[static_cast<size_t>(idx[static_cast<size_t>(i)])] = 0;
  return m;
}

std::vector<Pt> apply_mask(const std::vector<Pt>& history, const SequenceMask& mask) {
  if (static_cast<int>(history.size()) != mask.len()) {
    throw DataError("apply_mask: history length " + std::to_string(history.size()) +
                    " != mask length " + std::to_string(mask.len()));
  }
  std::vector<Pt> out(history.size());
  for (size_t i = 0; i < history.size(); ++i) {
    out[i] = mask.values[i] ? history[i] : Pt{0.0, 0.0};
  }
  return out;
}

PaddingMaskSet build_padding_masks(int len, int n_heads) {
  std::vector<int> gran(static_cast<size_t>(n_heads));
  std::iota(gran.begin(), gran.end(), 1);
  return build_padding_masks(len, gran);
}

PaddingMaskSet build_padding_masks(int len, const std::vector<int>& granularities) {
  if (len < 1) throw DataError("build_padding_masks: len must be >= 1");
  if (granularities.empty()) throw DataError("build_padding_masks: need at least one head");
  PaddingMaskSet set;
  set.granularities = granularities;
  set.masks.reserve(granularities.size());
  for (int g : granularities) {
    if (g < 1) throw DataError("build_padding_masks: granularity must be >= 1");
    Mask2D m(len);
    for (int a = 0; a < len; ++a) {
      for (int b = 0; b < len; ++b) {
        m.at(a, b) = (a - b) % g == 0 ? 1 : 0;
      }
    }
    set.masks.push_back(std::move(m));
  }
  return set;
}

ObservationMatrixSet observation_matrices(const SequenceMask& ms, const PaddingMaskSet& mp) {
  ObservationMatrixSet out;
  out.masks.reserve(mp.masks.size());
  for (const Mask2D& pad : mp.masks) {
    if (pad.len != ms.len()) {
      throw DataError("observation_matrices: sequence mask length " + std::to_string(ms.len()) +
                      " != padding mask size " + std::to_string(pad.len));
    }
    Mask2D m(pad.len);
    for (int j = 0; j < pad.len; ++j) {
      for (int l = 0; l < pad.len; ++l) {
        m.at(j, l) = static_cast<uint8_t>(ms.values[static_cast<size_t>(l)] * pad.at(j, l));
      }
    }
    out.masks.push_back(std::move(m));
  }
  return out;
}

InfoIncrement info_increment(const ObservationMatrixSet& obs) {
  InfoIncrement inc;
  inc.sigma.reserve(obs.masks.size());
  for (const Mask2D& m : obs.masks) {
    std::vector<int> row(static_cast<size_t>(m.len));
    for (int j = 0; j < m.len; ++j) row[static_cast<size_t>(j)] = m.row_sum(j);
    inc.sigma.push_back(std::move(row));
  }
  return inc;
}

Mask2D guard_attention_mask(const Mask2D& m_obs) {
  Mask2D out = m_obs;
  for (int j = 0; j < out.len; ++j) {
    if (out.row_sum(j) == 0) out.at(j, j) = 1;
  }
  return out;
}

}  // namespace mstf

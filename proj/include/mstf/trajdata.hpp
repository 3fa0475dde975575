#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstf/geom.hpp"
#include "mstf/masking.hpp"
#include "mstf/rng.hpp"
#include "mstf/tensor.hpp"

namespace mstf {

enum class ManeuverKind { lane_keep, left_change, right_change };

ManeuverKind maneuver_from_string(const std::string& s);
std::string to_string(ManeuverKind k);

struct ManeuverSpec {
  ManeuverKind kind = ManeuverKind::lane_keep;
  double speed_min = 8.0;   // m/s
  double speed_max = 14.0;  // m/s
  double lateral = 3.5;     // m, displacement magnitude; sign comes from kind
  double noise_sigma = 0.0;  // m, i.i.d. per step per coordinate
};

/// Reference frame of a normalized sample: the absolute position that maps
/// to the origin, plus an optional rotation (unused by this pipeline, kept
/// for frame completeness).
struct NormFrame {
  Pt origin;
  double rotation = 0.0;
};

/// One (history, future) pair. Fresh samples are unmasked (all-ones mask)
/// and live in absolute coordinates with an identity frame.
struct Sample {
  std::vector<Pt> history;  // length T_h
  std::vector<Pt> future;   // length T_f
  SequenceMask mask;        // over history
  NormFrame norm;
  int64_t track_id = 0;
};

/// Constant-velocity motion along +x; lane changes add a smoothstep lateral
/// transition of the specified displacement whose midpoint is uniform over
/// the feasible range, so the transition always completes inside the window.
/// Gaussian position noise is added i.i.d. per step.
std::vector<Sample> gen_synthetic(const ManeuverSpec& spec, int count, int t_h, int t_f,
                                  double rate, Rng& rng);

struct IngestReport {
  int64_t rows_total = 0;
  int64_t rows_malformed = 0;
  std::vector<std::string> diagnostics;  // one line per bad row
  int64_t tracks = 0;
  int64_t windows_discarded_gap = 0;
};

/// Sliding windows of length t_h + t_f over each track of a CSV with header
/// columns track_id, frame, x, y (extras ignored). Windows crossing gaps in
/// frame numbering are discarded. Malformed rows are skipped, counted, and
/// reported per row. Missing columns throw DataError.
std::vector<Sample> ingest_csv(const std::string& path, int t_h, int t_f, int stride,
                               IngestReport* report = nullptr);

/// Translates a sample so its last observed history step (per sample.mask)
/// maps to the origin. The frame records the shift; denormalize inverts it.
Sample normalized(const Sample& s);
Pt denormalize(Pt p, const NormFrame& frame);
std::vector<Pt> denormalize(const std::vector<Pt>& pts, const NormFrame& frame);

/// Normalized, masked tensors ready for the model.
struct ModelInput {
  Tensor x_miss;        // T_h x 2, masked steps zeroed, normalized frame
  Tensor future;        // T_f x 2, normalized frame
  SequenceMask mask;
  NormFrame frame;
};
ModelInput prepare_input(const Sample& s, const SequenceMask& mask);

struct SplitIndices {
  std::vector<int> train, val, test;
};

/// Deterministic 70/10/20 split, disjoint by track id.
SplitIndices split_by_track(const std::vector<Sample>& samples, Rng rng,
                            double train_frac = 0.7, double val_frac = 0.1);

std::vector<Sample> take(const std::vector<Sample>& samples, const std::vector<int>& idx);

}  // namespace mstf

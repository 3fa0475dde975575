#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstf/geom.hpp"

namespace mstf {

struct HorizonRmse {
  double seconds = 0.0;
  int steps = 0;
  double value = 0.0;
};

struct MetricReport {
  std::vector<HorizonRmse> rmse_by_horizon;
  double ade = 0.0;
  double fde = 0.0;
  int64_t sample_count = 0;
};

/// Root of the mean (over samples, then over the first horizon_steps) of the
/// squared Euclidean displacement, in absolute meters.
double rmse(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths,
            int horizon_steps);

/// Mean Euclidean displacement over samples and steps.
double ade(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths);

/// Mean final-step Euclidean displacement over samples.
double fde(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths);

/// Full report: RMSE at each whole second up to the prediction horizon (the
/// full horizon is always included), plus ADE and FDE.
MetricReport compute_report(const std::vector<std::vector<Pt>>& preds,
                            const std::vector<std::vector<Pt>>& truths, double rate);

}  // namespace mstf

#include "mstf/metrics.hpp"

#include <cmath>

#include "mstf/errors.hpp"

namespace mstf {

namespace {

void validate_pairs(const std::vector<std::vector<Pt>>& preds,
                    const std::vector<std::vector<Pt>>& truths, int min_len) {
  if (preds.empty()) throw DataError("metrics: empty sample set");
  if (preds.size() != truths.size()) {
    throw DataError("metrics: " + std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(truths.size()) + " ground truths");
  }
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != truths[i].size()) {
      throw DataError("metrics: sample " + std::to_string(i) + " length mismatch");
    }
    if (static_cast<int>(preds[i].size()) < min_len) {
      throw DataError("metrics: sample " + std::to_string(i) + " shorter than horizon " +
                      std::to_string(min_len));
    }
  }
}

}  // namespace

double rmse(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths,
            int horizon_steps) {
  if (horizon_steps < 1) throw DataError("rmse: horizon must be >= 1 steps");
  validate_pairs(preds, truths, horizon_steps);
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    double sample_acc = 0.0;
    for (int t = 0; t < horizon_steps; ++t) {
      sample_acc += sq_norm(preds[i][static_cast<size_t>(t)] - truths[i][static_cast<size_t>(t)]);
    }
    acc += sample_acc / horizon_steps;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double ade(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths) {
  validate_pairs(preds, truths, 1);
  double acc = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    for (size_t t = 0; t < preds[i].size(); ++t) {
      acc += norm(preds[i][t] - truths[i][t]);
      ++n;
    }
  }
  return acc / static_cast<double>(n);
}

double fde(const std::vector<std::vector<Pt>>& preds, const std::vector<std::vector<Pt>>& truths) {
  validate_pairs(preds, truths, 1);
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    acc += norm(preds[i].back() - truths[i].back());
  }
  return acc / static_cast<double>(preds.size());
}

MetricReport compute_report(const std::vector<std::vector<Pt>>& preds,
                            const std::vector<std::vector<Pt>>& truths, double rate) {
  if (rate <= 0.0) throw DataError("compute_report: rate must be positive");
  validate_pairs(preds, truths, 1);
  const int t_f = static_cast<int>(preds[0].size());

  MetricReport rep;
  rep.sample_count = static_cast<int64_t>(preds.size());
  for (int s = 1; static_cast<double>(s) * rate <= t_f + 1e-9; ++s) {
    const int steps = static_cast<int>(std::lround(s * rate));
    rep.rmse_by_horizon.push_back({static_cast<double>(s), steps, rmse(preds, truths, steps)});
  }
  // Always report the full horizon.
  if (rep.rmse_by_horizon.empty() || rep.rmse_by_horizon.back().steps != t_f) {
    rep.rmse_by_horizon.push_back({t_f / rate, t_f, rmse(preds, truths, t_f)});
  }
  rep.ade = ade(preds, truths);
  rep.fde = fde(preds, truths);
  return rep;
}

}  // namespace mstf

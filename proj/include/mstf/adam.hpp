#pragma once

#include <cstdint>
#include <vector>

#include "mstf/tensor.hpp"

namespace mstf {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Moment buffers are
/// shape-congruent with their parameters; the step counter advances by one
/// per successful apply. A non-finite gradient aborts the step before any
/// parameter is touched.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg = {});

  void step();
  void zero_grad();
  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace mstf

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mstf/masking.hpp"
#include "mstf/rng.hpp"
#include "mstf/tensor.hpp"

namespace mstf {

struct ModelConfig {
  int d_model = 64;
  int n_heads = 5;
  int n_layers = 2;
  int t_h = 20;
  int t_f = 30;
  int decoder_hidden = 64;

  /// Per-head key width. d_model need not divide evenly; the concatenated
  /// head output (n_heads * d_k wide) is projected back to d_model.
  int d_k() const { return d_model / n_heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class ModelKind { mstf, vtf };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

/// Fixed sinusoidal positional encoding: row t, column 2c holds
/// sin(t / 10000^(2c/d_model)) and column 2c+1 the matching cosine.
Tensor sinusoidal_positions(int len, int d_model);

/// Softmax over integer information increments (max-subtracted), giving the
/// across-step aggregation weights as a {1, len} row.
Tensor iipa_weights_from_sigma(const std::vector<int>& sigma);

/// The trajectory predictor. kind == mstf uses per-head granularities
/// 1..n_heads and information-increment aggregation weights; kind == vtf is
/// the structurally identical ablation with every head at granularity 1 and
/// plain mean aggregation. Parameter counts are equal for a shared config.
class TrajectoryModel {
 public:
  TrajectoryModel(ModelConfig cfg, ModelKind kind, Rng init);
  /// Explicit per-head granularities (testing hook).
  TrajectoryModel(ModelConfig cfg, ModelKind kind, std::vector<int> granularities, Rng init);

  TrajectoryModel(const TrajectoryModel&) = delete;
  TrajectoryModel& operator=(const TrajectoryModel&) = delete;
  TrajectoryModel(TrajectoryModel&&) = default;

  struct Encoded {
    std::vector<Var> r_m;  // per head, t_h x d_k: per-step motion features
    std::vector<Var> r_c;  // per head, 1 x d_k: across-step continuity vector
  };

  /// Per-step two-layer MLP on the (masked) coordinates plus the fixed
  /// positional encoding.
  Var embed(Tape& t, const Tensor& x_miss);
  Encoded encode(Tape& t, const Tensor& x_miss, const SequenceMask& ms);
  /// Recurrent decoder: state seeded from the fused last-step/continuity
  /// features, emitting t_f offset steps whose cumulative sum is the
  /// prediction in the normalized frame.
  Var decode(Tape& t, const Encoded& enc);
  Var predict(Tape& t, const Tensor& x_miss, const SequenceMask& ms);
  /// Mean squared Euclidean error per future step.
  static Var loss(Tape& t, Var pred, const Tensor& truth);
  Var loss_on(Tape& t, const Tensor& x_miss, const SequenceMask& ms, const Tensor& truth);
  /// Forward-only convenience; returns the t_f x 2 prediction values.
  Tensor predict_positions(const Tensor& x_miss, const SequenceMask& ms);

  // Layer-level hooks used by masking-blindness and closed-form tests.
  std::vector<Var> layer_head_outputs(Tape& t, Var x, int layer,
                                      const std::vector<Tensor>& attn_masks);
  Var layer_forward(Tape& t, Var x, int layer, const std::vector<Tensor>& attn_masks);
  /// Guarded per-head attention masks for a sequence mask, as 0/1 tensors.
  std::vector<Tensor> attention_masks(const SequenceMask& ms) const;
  /// Per-head aggregation weight rows ({1, t_h} each).
  std::vector<Tensor> iipa_weight_rows(const SequenceMask& ms) const;

  std::vector<Parameter*>& parameters() { return registry_; }
  int64_t parameter_count() const;
  const ModelConfig& config() const { return cfg_; }
  ModelKind kind() const { return kind_; }
  const std::vector<int>& granularities() const { return padding_.granularities; }

  void save(const std::string& path) const;
  static TrajectoryModel load(const std::string& path);

 private:
  struct HeadParams {
    Parameter wq, wk, wv;
  };
  struct LayerParams {
    std::vector<HeadParams> heads;
    Parameter attn_w, attn_b;
    Parameter ln1_g, ln1_b;
    Parameter ff_w1, ff_b1, ff_w2, ff_b2;
    Parameter ln2_g, ln2_b;
  };
  struct EmbedParams {
    Parameter w1, b1, w2, b2;
  };
  struct DecoderParams {
    Parameter init_h_w, init_h_b;
    Parameter init_c_w, init_c_b;
    Parameter gates_wx, gates_wh, gates_b;
    Parameter out_w, out_b;
  };

  void init_parameters(Rng init);
  void register_parameters();

  ModelConfig cfg_;
  ModelKind kind_;
  PaddingMaskSet padding_;
  Tensor pos_;
  EmbedParams embed_;
  std::vector<LayerParams> layers_;
  DecoderParams dec_;
  std::vector<Parameter*> registry_;
};

}  // namespace mstf

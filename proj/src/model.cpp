#include "mstf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "mstf/checkpoint.hpp"
#include "mstf/errors.hpp"

namespace mstf {

using nlohmann::json;

void ModelConfig::validate() const {
  if (d_model < 1 || n_heads < 1 || n_layers < 1 || t_h < 1 || t_f < 1 || decoder_hidden < 1) {
    throw ShapeError("ModelConfig: all extents must be >= 1");
  }
  if (d_k() < 1) {
    throw ShapeError("ModelConfig: d_model " + std::to_string(d_model) +
                     " too small for " + std::to_string(n_heads) + " heads");
  }
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "mstf") return ModelKind::mstf;
  if (s == "vtf") return ModelKind::vtf;
  throw DataError("unknown model kind '" + s + "'");
}

std::string to_string(ModelKind k) { return k == ModelKind::mstf ? "mstf" : "vtf"; }

Tensor sinusoidal_positions(int len, int d_model) {
  Tensor pos({len, d_model});
  for (int t = 0; t < len; ++t) {
    for (int c = 0; 2 * c < d_model; ++c) {
      const double angle = t / std::pow(10000.0, 2.0 * c / d_model);
      pos.at(t, 2 * c) = std::sin(angle);
      if (2 * c + 1 < d_model) pos.at(t, 2 * c + 1) = std::cos(angle);
    }
  }
  return pos;
}

Tensor iipa_weights_from_sigma(const std::vector<int>& sigma) {
  if (sigma.empty()) throw ShapeError("iipa_weights_from_sigma: empty sigma");
  const int len = static_cast<int>(sigma.size());
  const int mx = *std::max_element(sigma.begin(), sigma.end());
  Tensor w({1, len});
  double sum = 0.0;
  for (int j = 0; j < len; ++j) {
    w[j] = std::exp(static_cast<double>(sigma[static_cast<size_t>(j)] - mx));
    sum += w[j];
  }
  for (int j = 0; j < len; ++j) w[j] /= sum;
  return w;
}

namespace {

std::vector<int> default_granularities(ModelKind kind, int n_heads) {
  std::vector<int> g(static_cast<size_t>(n_heads), 1);
  if (kind == ModelKind::mstf) std::iota(g.begin(), g.end(), 1);
  return g;
}

Tensor xavier(std::vector<int> shape, Rng& rng) {
  const double fan_in = shape[0];
  const double fan_out = shape[1];
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  return Tensor::uniform(std::move(shape), -bound, bound, rng);
}

}  // namespace

TrajectoryModel::TrajectoryModel(ModelConfig cfg, ModelKind kind, Rng init)
    : TrajectoryModel(std::move(cfg), kind, default_granularities(kind, cfg.n_heads),
                      std::move(init)) {}

TrajectoryModel::TrajectoryModel(ModelConfig cfg, ModelKind kind, std::vector<int> granularities,
                                 Rng init)
    : cfg_(cfg), kind_(kind) {
  cfg_.validate();
  if (static_cast<int>(granularities.size()) != cfg_.n_heads) {
    throw ShapeError("TrajectoryModel: expected " + std::to_string(cfg_.n_heads) +
                     " granularities, got " + std::to_string(granularities.size()));
  }
  padding_ = build_padding_masks(cfg_.t_h, granularities);
  pos_ = sinusoidal_positions(cfg_.t_h, cfg_.d_model);
  init_parameters(init);
  register_parameters();
}

void TrajectoryModel::init_parameters(Rng init) {
  const int d = cfg_.d_model;
  const int dk = cfg_.d_k();
  const int h = cfg_.decoder_hidden;
  const int cat = cfg_.n_heads * dk;
  const int fused = 2 * cat;  // last-step features plus continuity vectors

  embed_.w1 = Parameter("embed.w1", xavier({2, d}, init));
  embed_.b1 = Parameter("embed.b1", Tensor({1, d}));
  embed_.w2 = Parameter("embed.w2", xavier({d, d}, init));
  embed_.b2 = Parameter("embed.b2", Tensor({1, d}));

  layers_.resize(static_cast<size_t>(cfg_.n_layers));
  for (int l = 0; l < cfg_.n_layers; ++l) {
    LayerParams& L = layers_[static_cast<size_t>(l)];
    const std::string p = "enc" + std::to_string(l) + ".";
    L.heads.resize(static_cast<size_t>(cfg_.n_heads));
    for (int i = 0; i < cfg_.n_heads; ++i) {
      const std::string hp = p + "head" + std::to_string(i) + ".";
      L.heads[static_cast<size_t>(i)].wq = Parameter(hp + "wq", xavier({d, dk}, init));
      L.heads[static_cast<size_t>(i)].wk = Parameter(hp + "wk", xavier({d, dk}, init));
      L.heads[static_cast<size_t>(i)].wv = Parameter(hp + "wv", xavier({d, dk}, init));
    }
    L.attn_w = Parameter(p + "attn_out.w", xavier({cat, d}, init));
    L.attn_b = Parameter(p + "attn_out.b", Tensor({1, d}));
    L.ln1_g = Parameter(p + "ln1.gamma", Tensor::full({1, d}, 1.0));
    L.ln1_b = Parameter(p + "ln1.beta", Tensor({1, d}));
    L.ff_w1 = Parameter(p + "ff.w1", xavier({d, d}, init));
    L.ff_b1 = Parameter(p + "ff.b1", Tensor({1, d}));
    L.ff_w2 = Parameter(p + "ff.w2", xavier({d, d}, init));
    L.ff_b2 = Parameter(p + "ff.b2", Tensor({1, d}));
    L.ln2_g = Parameter(p + "ln2.gamma", Tensor::full({1, d}, 1.0));
    L.ln2_b = Parameter(p + "ln2.beta", Tensor({1, d}));
  }

  dec_.init_h_w = Parameter("dec.init_h.w", xavier({fused, h}, init));
  dec_.init_h_b = Parameter("dec.init_h.b", Tensor({1, h}));
  dec_.init_c_w = Parameter("dec.init_c.w", xavier({fused, h}, init));
  dec_.init_c_b = Parameter("dec.init_c.b", Tensor({1, h}));
  dec_.gates_wx = Parameter("dec.gates.wx", xavier({2, 4 * h}, init));
  dec_.gates_wh = Parameter("dec.gates.wh", xavier({h, 4 * h}, init));
  dec_.gates_b = Parameter("dec.gates.b", Tensor({1, 4 * h}));
  dec_.out_w = Parameter("dec.out.w", xavier({h, 2}, init));
  dec_.out_b = Parameter("dec.out.b", Tensor({1, 2}));
}

void TrajectoryModel::register_parameters() {
  registry_.clear();
  registry_.push_back(&embed_.w1);
  registry_.push_back(&embed_.b1);
  registry_.push_back(&embed_.w2);
  registry_.push_back(&embed_.b2);
  for (LayerParams& L : layers_) {
    for (HeadParams& H : L.heads) {
      registry_.push_back(&H.wq);
      registry_.push_back(&H.wk);
      registry_.push_back(&H.wv);
    }
    registry_.push_back(&L.attn_w);
    registry_.push_back(&L.attn_b);
    registry_.push_back(&L.ln1_g);
    registry_.push_back(&L.ln1_b);
    registry_.push_back(&L.ff_w1);
    registry_.push_back(&L.ff_b1);
    registry_.push_back(&L.ff_w2);
    registry_.push_back(&L.ff_b2);
    registry_.push_back(&L.ln2_g);
    registry_.push_back(&L.ln2_b);
  }
  registry_.push_back(&dec_.init_h_w);
  registry_.push_back(&dec_.init_h_b);
  registry_.push_back(&dec_.init_c_w);
  registry_.push_back(&dec_.init_c_b);
  registry_.push_back(&dec_.gates_wx);
  registry_.push_back(&dec_.gates_wh);
  registry_.push_back(&dec_.gates_b);
  registry_.push_back(&dec_.out_w);
  registry_.push_back(&dec_.out_b);
}

int64_t TrajectoryModel::parameter_count() const {
  int64_t n = 0;
  for (const Parameter* p : registry_) n += p->size();
  return n;
}

std::vector<Tensor> TrajectoryModel::attention_masks(const SequenceMask& ms) const {
  ObservationMatrixSet obs = observation_matrices(ms, padding_);
  std::vector<Tensor> out;
  out.reserve(obs.masks.size());
  for (const Mask2D& m : obs.masks) {
    Mask2D guarded = guard_attention_mask(m);
    Tensor t({guarded.len, guarded.len});
    for (int j = 0; j < guarded.len; ++j) {
      for (int l = 0; l < guarded.len; ++l) t.at(j, l) = guarded.at(j, l);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Tensor> TrajectoryModel::iipa_weight_rows(const SequenceMask& ms) const {
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(cfg_.n_heads));
  if (kind_ == ModelKind::vtf) {
    // Plain mean over steps.
    for (int i = 0; i < cfg_.n_heads; ++i) {
      out.push_back(Tensor::full({1, cfg_.t_h}, 1.0 / cfg_.t_h));
    }
    return out;
  }
  InfoIncrement inc = info_increment(observation_matrices(ms, padding_));
  for (const std::vector<int>& sigma : inc.sigma) {
    out.push_back(iipa_weights_from_sigma(sigma));
  }
  return out;
}

Var TrajectoryModel::embed(Tape& t, const Tensor& x_miss) {
  if (x_miss.rank() != 2 || x_miss.rows() != cfg_.t_h || x_miss.cols() != 2) {
    throw ShapeError("embed: expected [" + std::to_string(cfg_.t_h) + "x2], got " +
                     x_miss.shape_str());
  }
  Var x = t.constant(x_miss);
  Var h = relu(linear(x, t.leaf(embed_.w1), t.leaf(embed_.b1)));
  Var e = linear(h, t.leaf(embed_.w2), t.leaf(embed_.b2));
  return add(e, t.constant(pos_));
}

std::vector<Var> TrajectoryModel::layer_head_outputs(Tape& t, Var x, int layer,
                                                     const std::vector<Tensor>& attn_masks) {
  LayerParams& L = layers_.at(static_cast<size_t>(layer));
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg_.d_k()));
  std::vector<Var> heads;
  heads.reserve(L.heads.size());
  for (size_t i = 0; i < L.heads.size(); ++i) {
    Var q = matmul(x, t.leaf(L.heads[i].wq));
    Var k = matmul(x, t.leaf(L.heads[i].wk));
    Var v = matmul(x, t.leaf(L.heads[i].wv));
    Var att = masked_softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_dk), attn_masks[i]);
    heads.push_back(matmul(att, v));
  }
  return heads;
}

Var TrajectoryModel::layer_forward(Tape& t, Var x, int layer,
                                   const std::vector<Tensor>& attn_masks) {
  LayerParams& L = layers_.at(static_cast<size_t>(layer));
  std::vector<Var> heads = layer_head_outputs(t, x, layer, attn_masks);
  Var proj = linear(concat(heads, 1), t.leaf(L.attn_w), t.leaf(L.attn_b));
  Var x1 = layer_norm_rows(add(x, proj), t.leaf(L.ln1_g), t.leaf(L.ln1_b));
  Var ff = linear(relu(linear(x1, t.leaf(L.ff_w1), t.leaf(L.ff_b1))), t.leaf(L.ff_w2),
                  t.leaf(L.ff_b2));
  return layer_norm_rows(add(x1, ff), t.leaf(L.ln2_g), t.leaf(L.ln2_b));
}

TrajectoryModel::Encoded TrajectoryModel::encode(Tape& t, const Tensor& x_miss,
                                                 const SequenceMask& ms) {
  if (ms.len() != cfg_.t_h) {
    throw ShapeError("encode: mask length " + std::to_string(ms.len()) + " != t_h " +
                     std::to_string(cfg_.t_h));
  }
  const std::vector<Tensor> masks = attention_masks(ms);
  Var x = embed(t, x_miss);
  for (int l = 0; l + 1 < cfg_.n_layers; ++l) x = layer_forward(t, x, l, masks);

  Encoded enc;
  // The final block exposes its per-head outputs; its fused tail is not
  // consumed by anything downstream.
  enc.r_m = layer_head_outputs(t, x, cfg_.n_layers - 1, masks);
  const std::vector<Tensor> weights = iipa_weight_rows(ms);
  enc.r_c.reserve(enc.r_m.size());
  for (size_t i = 0; i < enc.r_m.size(); ++i) {
    enc.r_c.push_back(matmul(t.constant(weights[i]), enc.r_m[i]));
  }
  return enc;
}

Var TrajectoryModel::decode(Tape& t, const Encoded& enc) {
  if (enc.r_m.size() != static_cast<size_t>(cfg_.n_heads) || enc.r_m.size() != enc.r_c.size()) {
    throw ShapeError("decode: encoder output has wrong head count");
  }
  std::vector<Var> pieces;
  pieces.reserve(2 * enc.r_m.size());
  for (size_t i = 0; i < enc.r_m.size(); ++i) {
    pieces.push_back(slice(enc.r_m[i], 0, cfg_.t_h - 1, 1));
    pieces.push_back(enc.r_c[i]);
  }
  Var fused = concat(pieces, 1);  // 1 x (2 * n_heads * d_k)
  Var h = linear(fused, t.leaf(dec_.init_h_w), t.leaf(dec_.init_h_b));
  Var c = linear(fused, t.leaf(dec_.init_c_w), t.leaf(dec_.init_c_b));

  const int hw = cfg_.decoder_hidden;
  Var x_in = t.constant(Tensor({1, 2}));
  std::vector<Var> offsets;
  offsets.reserve(static_cast<size_t>(cfg_.t_f));
  for (int step = 0; step < cfg_.t_f; ++step) {
    Var gates = add_rowvec(add(matmul(x_in, t.leaf(dec_.gates_wx)),
                               matmul(h, t.leaf(dec_.gates_wh))),
                           t.leaf(dec_.gates_b));
    Var gi = sigmoid(slice(gates, 1, 0, hw));
    Var gf = sigmoid(slice(gates, 1, hw, hw));
    Var gg = mstf::tanh(slice(gates, 1, 2 * hw, hw));
    Var go = sigmoid(slice(gates, 1, 3 * hw, hw));
    c = add(mul(gf, c), mul(gi, gg));
    h = mul(go, mstf::tanh(c));
    Var off = linear(h, t.leaf(dec_.out_w), t.leaf(dec_.out_b));
    offsets.push_back(off);
    x_in = off;
  }
  return cumsum_rows(concat(offsets, 0));
}

Var TrajectoryModel::predict(Tape& t, const Tensor& x_miss, const SequenceMask& ms) {
  return decode(t, encode(t, x_miss, ms));
}

Var TrajectoryModel::loss(Tape& t, Var pred, const Tensor& truth) {
  if (!pred.value().same_shape(truth)) {
    throw ShapeError("loss: prediction " + pred.value().shape_str() + " vs truth " +
                     truth.shape_str());
  }
  Var d = sub(pred, t.constant(truth));
  return scale(sum_all(mul(d, d)), 1.0 / truth.rows());
}

Var TrajectoryModel::loss_on(Tape& t, const Tensor& x_miss, const SequenceMask& ms,
                             const Tensor& truth) {
  return loss(t, predict(t, x_miss, ms), truth);
}

Tensor TrajectoryModel::predict_positions(const Tensor& x_miss, const SequenceMask& ms) {
  Tape t;
  return predict(t, x_miss, ms).value();
}

void TrajectoryModel::save(const std::string& path) const {
  json meta;
  meta["format_version"] = 1;
  meta["kind"] = to_string(kind_);
  meta["granularities"] = padding_.granularities;
  meta["model"] = {
      {"d_model", cfg_.d_model},       {"n_heads", cfg_.n_heads},
      {"n_layers", cfg_.n_layers},     {"t_h", cfg_.t_h},
      {"t_f", cfg_.t_f},               {"decoder_hidden", cfg_.decoder_hidden},
  };
  save_checkpoint(path, meta.dump(), registry_);
}

TrajectoryModel TrajectoryModel::load(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ck.meta);
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + path + "': bad metadata: " + e.what());
  }
  if (!meta.contains("format_version") || meta["format_version"].get<int>() != 1) {
    throw DataError("checkpoint '" + path + "': missing or unsupported format_version");
  }
  ModelConfig cfg;
  const json& m = meta.at("model");
  cfg.d_model = m.at("d_model").get<int>();
  cfg.n_heads = m.at("n_heads").get<int>();
  cfg.n_layers = m.at("n_layers").get<int>();
  cfg.t_h = m.at("t_h").get<int>();
  cfg.t_f = m.at("t_f").get<int>();
  cfg.decoder_hidden = m.at("decoder_hidden").get<int>();
  ModelKind kind = model_kind_from_string(meta.at("kind").get<std::string>());
  std::vector<int> gran = meta.at("granularities").get<std::vector<int>>();

  TrajectoryModel model(cfg, kind, gran, Rng(0));
  if (ck.blocks.size() != model.registry_.size()) {
    throw DataError("checkpoint '" + path + "': expected " +
                    std::to_string(model.registry_.size()) + " parameter blocks, got " +
                    std::to_string(ck.blocks.size()));
  }
  for (size_t i = 0; i < ck.blocks.size(); ++i) {
    Parameter& p = *model.registry_[i];
    auto& [name, value] = ck.blocks[i];
    if (name != p.name) {
      throw DataError("checkpoint '" + path + "': block '" + name + "' where '" + p.name +
                      "' was expected");
    }
    if (!value.same_shape(p.value)) {
      throw DataError("checkpoint '" + path + "': block '" + name + "' has shape " +
                      value.shape_str() + ", expected " + p.value.shape_str());
    }
    p.value = value;
  }
  return model;
}

}  // namespace mstf

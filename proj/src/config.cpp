#include "mstf/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "mstf/errors.hpp"

namespace mstf {

using nlohmann::json;

namespace {

void expect_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
  if (!j.is_object()) throw DataError("config: " + ctx + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw DataError("config: unknown key '" + key + "' in " + ctx);
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  if (epochs < 0) throw DataError("config: epochs must be >= 0");
  if (batch_size < 1) throw DataError("config: batch_size must be >= 1");
  if (learning_rate <= 0.0) throw DataError("config: learning_rate must be positive");
  if (intervals.empty()) throw DataError("config: at least one missing-rate interval");
  for (const MissingInterval& iv : intervals) {
    if (!(iv.lo >= 0.0 && iv.lo < iv.hi && iv.hi < 1.0)) {
      throw DataError("config: interval (" + std::to_string(iv.lo) + ", " +
                      std::to_string(iv.hi) + "] must satisfy 0 <= lo < hi < 1");
    }
  }
  std::vector<MissingInterval> sorted = intervals;
  std::sort(sorted.begin(), sorted.end(),
            [](const MissingInterval& a, const MissingInterval& b) { return a.lo < b.lo; });
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].lo < sorted[i - 1].hi - 1e-12) {
      throw DataError("config: intervals overlap");
    }
  }
  if (dataset.rate <= 0.0) throw DataError("config: dataset.rate must be positive");
  if (dataset.type == DatasetSpec::Type::synthetic) {
    if (dataset.count < 1) throw DataError("config: dataset.count must be >= 1");
    if (dataset.speed_min <= 0.0 || dataset.speed_max < dataset.speed_min) {
      throw DataError("config: dataset speed range must be positive");
    }
    if (dataset.noise_sigma < 0.0) throw DataError("config: dataset.noise_sigma must be >= 0");
    static const std::set<std::string> kinds = {"lane-keep", "left-change", "right-change",
                                                "lane-change", "mixed"};
    if (!kinds.count(dataset.maneuver)) {
      throw DataError("config: unknown maneuver '" + dataset.maneuver + "'");
    }
  } else {
    if (dataset.path.empty()) throw DataError("config: dataset.path required for csv datasets");
    if (dataset.stride < 1) throw DataError("config: dataset.stride must be >= 1");
  }
  if (out_dir.empty()) throw DataError("config: out_dir must not be empty");
}

ExperimentConfig parse_experiment_config(const json& j) {
  expect_keys(j,
              {"dataset", "model", "intervals", "epochs", "batch_size", "learning_rate", "seed",
               "out_dir"},
              "top level");
  ExperimentConfig cfg;

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    expect_keys(d,
                {"type", "maneuver", "count", "speed_min", "speed_max", "lateral", "noise_sigma",
                 "path", "stride", "rate"},
                "dataset");
    std::string type = "synthetic";
    read_if(d, "type", type);
    if (type == "synthetic") {
      cfg.dataset.type = DatasetSpec::Type::synthetic;
    } else if (type == "csv") {
      cfg.dataset.type = DatasetSpec::Type::csv;
    } else {
      throw DataError("config: dataset.type must be 'synthetic' or 'csv'");
    }
    read_if(d, "maneuver", cfg.dataset.maneuver);
    read_if(d, "count", cfg.dataset.count);
    read_if(d, "speed_min", cfg.dataset.speed_min);
    read_if(d, "speed_max", cfg.dataset.speed_max);
    read_if(d, "lateral", cfg.dataset.lateral);
    read_if(d, "noise_sigma", cfg.dataset.noise_sigma);
    read_if(d, "path", cfg.dataset.path);
    read_if(d, "stride", cfg.dataset.stride);
    read_if(d, "rate", cfg.dataset.rate);
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    expect_keys(m, {"d_model", "n_heads", "n_layers", "t_h", "t_f", "decoder_hidden"}, "model");
    read_if(m, "d_model", cfg.model.d_model);
    read_if(m, "n_heads", cfg.model.n_heads);
    read_if(m, "n_layers", cfg.model.n_layers);
    read_if(m, "t_h", cfg.model.t_h);
    read_if(m, "t_f", cfg.model.t_f);
    read_if(m, "decoder_hidden", cfg.model.decoder_hidden);
  }

  if (j.contains("intervals")) {
    cfg.intervals.clear();
    for (const json& iv : j.at("intervals")) {
      if (!iv.is_array() || iv.size() != 2) {
        throw DataError("config: each interval must be [lo, hi]");
      }
      cfg.intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
    }
  }

  read_if(j, "epochs", cfg.epochs);
  read_if(j, "batch_size", cfg.batch_size);
  read_if(j, "learning_rate", cfg.learning_rate);
  read_if(j, "seed", cfg.seed);
  read_if(j, "out_dir", cfg.out_dir);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("config: cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError("config '" + path + "': " + e.what());
  }
  return parse_experiment_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json d;
  d["rate"] = cfg.dataset.rate;
  if (cfg.dataset.type == DatasetSpec::Type::synthetic) {
    d["type"] = "synthetic";
    d["maneuver"] = cfg.dataset.maneuver;
    d["count"] = cfg.dataset.count;
    d["speed_min"] = cfg.dataset.speed_min;
    d["speed_max"] = cfg.dataset.speed_max;
    d["lateral"] = cfg.dataset.lateral;
    d["noise_sigma"] = cfg.dataset.noise_sigma;
  } else {
    d["type"] = "csv";
    d["path"] = cfg.dataset.path;
    d["stride"] = cfg.dataset.stride;
  }
  json m = {{"d_model", cfg.model.d_model},
            {"n_heads", cfg.model.n_heads},
            {"n_layers", cfg.model.n_layers},
            {"t_h", cfg.model.t_h},
            {"t_f", cfg.model.t_f},
            {"decoder_hidden", cfg.model.decoder_hidden}};
  json ivs = json::array();
  for (const MissingInterval& iv : cfg.intervals) ivs.push_back({iv.lo, iv.hi});
  return json{{"dataset", d},
              {"model", m},
              {"intervals", ivs},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"seed", cfg.seed},
              {"out_dir", cfg.out_dir}};
}

}  // namespace mstf

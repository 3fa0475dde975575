#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mstf/masking.hpp"
#include "mstf/model.hpp"

namespace mstf {

struct DatasetSpec {
  enum class Type { synthetic, csv };
  Type type = Type::synthetic;

  // synthetic
  std::string maneuver = "lane-change";  // lane-keep|left-change|right-change|lane-change|mixed
  int count = 2000;
  double speed_min = 8.0;
  double speed_max = 14.0;
  double lateral = 3.5;
  double noise_sigma = 0.05;

  // csv
  std::string path;
  int stride = 50;

  double rate = 10.0;  // samples per second
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelConfig model;
  std::vector<MissingInterval> intervals = {{0.0, 0.3}, {0.3, 0.6}, {0.6, 0.9}};
  int epochs = 60;
  int batch_size = 64;
  double learning_rate = 1e-4;
  uint64_t seed = 1;
  std::string out_dir = "runs/out";

  void validate() const;  // throws DataError
};

/// Parses and validates; unknown keys anywhere are rejected.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace mstf

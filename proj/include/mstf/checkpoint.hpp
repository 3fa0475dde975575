#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mstf/tensor.hpp"

namespace mstf {

/// Named tensor blocks plus a free-form metadata string (JSON in practice).
/// The binary layout is versioned, little-endian, with per-block shape
/// headers; save/load round-trips are bit-exact.
struct Checkpoint {
  uint32_t version = 1;
  std::string meta;
  std::vector<std::pair<std::string, Tensor>> blocks;
};

void save_checkpoint(const std::string& path, const std::string& meta,
                     std::span<Parameter* const> params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mstf

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plaae::gradcheck {

// Central-difference audit of the reverse-mode gradients, layer type by layer
// type, on randomized small instances. Every parameter coordinate is probed
// with h = 1e-5 and compared at relative error |a-n| / max(|a|,|n|,1).

struct LayerReport {
  std::string layer;
  int instances = 0;
  int64_t coords = 0;    // coordinates compared across all instances
  double max_rel = 0.0;
  bool pass = false;
};

struct SuiteReport {
  std::vector<LayerReport> layers;
  double tolerance = 1e-4;
  bool pass = false;
};

// conv1d, conv1d_dilated, conv1d_strided, convt1d, layer_norm, weight_norm,
// relu, leaky_relu, tanh, avg_pool, stft_magnitude, multi_stft.
const std::vector<std::string>& layer_names();

LayerReport check_layer(const std::string& layer, int instances, uint64_t seed);

SuiteReport run_suite(int instances_per_layer, uint64_t seed);

}  // namespace plaae::gradcheck

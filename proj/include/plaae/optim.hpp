#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plaae/tensor.hpp"

namespace plaae::optim {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

// First/second moments keyed by parameter name, so state survives
// checkpointing by name and never depends on traversal order.
struct AdamState {
  int64_t step = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

struct ParamRef {
  std::string name;
  Tensor* tensor = nullptr;
};

// One bias-corrected Adam update over every listed tensor, reading each
// tensor's grad array (an unallocated grad counts as all zeros and still
// decays the moments). Increments state.step exactly once per call; moments
// are allocated on first sight of a name and must keep their size afterwards.
void adam_step(const std::vector<ParamRef>& params, AdamState& state,
               const AdamConfig& cfg);

// Joint L2 norm over every grad array in the list.
double grad_l2_norm(const std::vector<ParamRef>& params);

// Scales all grads by max_norm/norm when norm exceeds max_norm; returns the
// pre-clip norm. Disabled clipping is expressed by not calling this.
double clip_grad_norm(const std::vector<ParamRef>& params, double max_norm);

}  // namespace plaae::optim

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plaae/model.hpp"
#include "plaae/optim.hpp"

namespace plaae::checkpoint {

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> data;
};

// Everything a training run needs to resume: model config and weights, the
// global step, the sampler's generator state, and (by naming convention,
// "opt_g.<param>.m" / ".v" and "opt_d.…") optimizer moments.
struct Snapshot {
  int schema_version = 1;
  model::ModelConfig config;
  int64_t step = 0;
  std::array<uint64_t, 4> rng_state{0, 0, 0, 0};
  std::vector<NamedTensor> tensors;
};

// On disk: one JSON header line (config, step, rng state, tensor table with
// element offsets), a newline, then every tensor's doubles as raw
// little-endian 64-bit words in table order. The encoding is bijective, so
// save -> load -> save reproduces the file byte for byte.
void save_checkpoint(const std::string& path, const Snapshot& snap);
Snapshot load_checkpoint(const std::string& path);

const NamedTensor* find_tensor(const Snapshot& snap, const std::string& name);

// Captures every model parameter under its visit_params name.
Snapshot snapshot_model(model::PlaaeModel& m, int64_t step);

// Writes snapshot tensors back into an already-built model; every parameter
// must be present (io error) with its exact shape (shape error). Extra
// tensors, such as optimizer moments, are ignored.
void restore_model(model::PlaaeModel& m, const Snapshot& snap);

// Optimizer moments ride along as flat tensors under `prefix`. Extraction
// takes the step from snap.step, so Adam bias correction resumes exactly.
void append_adam_state(Snapshot& snap, const std::string& prefix,
                       const optim::AdamState& st);
optim::AdamState extract_adam_state(const Snapshot& snap, const std::string& prefix);

}  // namespace plaae::checkpoint

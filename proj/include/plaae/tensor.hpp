#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "plaae/error.hpp"

namespace plaae {

// Dense double-precision tensor. `grad` is empty until a backward pass (or
// an optimizer) needs it; when present it has the same element count as data.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp) : shape(std::move(shp)), data(numel_of(shape), 0.0) {}
  Tensor(std::vector<int> shp, std::vector<double> values) : shape(std::move(shp)), data(std::move(values)) {
    if (static_cast<size_t>(numel_of(shape)) != data.size())
      raise(ErrorKind::shape, "tensor data length does not match shape");
  }

  static int64_t numel_of(const std::vector<int>& shp) {
    int64_t n = 1;
    for (int d : shp) {
      if (d <= 0) raise(ErrorKind::shape, "tensor dimensions must be positive");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool is_scalar() const { return data.size() == 1; }

  // 2-D accessors for the common [channels x time] layout.
  double& at(int c, int t) { return data[static_cast<size_t>(c) * dim(1) + t]; }
  double at(int c, int t) const { return data[static_cast<size_t>(c) * dim(1) + t]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace plaae

#pragma once

#include <cstdint>
#include <vector>

#include "plaae/kernels.hpp"
#include "plaae/tensor.hpp"

namespace plaae {

// Immediate-mode reverse-differentiation graph over exactly the layer set the
// models need. Values are computed at node creation; backward() walks nodes in
// reverse creation order and accumulates gradients (fan-out sums naturally).
//
// param() binds an external Tensor: trainable params receive gradients in the
// tensor's own grad array; frozen params (trainable=false) pass gradients
// through to their op inputs but collect none themselves.

class Graph {
 public:
  struct Value {
    int idx = -1;
    bool valid() const { return idx >= 0; }
  };

  Value constant(Tensor t);
  Value param(Tensor& p, bool trainable = true);

  // x: [C_in×T], w: [C_out×C_in×K], b: [C_out]. Causal left zero-padding.
  Value conv1d(Value x, Value w, Value b, int dilation = 1, int stride = 1);
  // Non-overlapping transposed conv, stride == kernel: w: [C_out×C_in×S].
  Value convt1d(Value x, Value w, Value b);
  // Normalizes over channels per time step. x: [C×T], gain/bias: [C].
  Value layer_norm(Value x, Value gain, Value bias, double eps = 1e-5);
  // w[o,:] = g[o] · v[o,:]/‖v[o,:]‖; norm over all trailing dims of v.
  Value weight_norm(Value v, Value g);

  Value relu(Value x);
  Value leaky_relu(Value x, double slope);
  Value tanh_(Value x);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value sub_const(Value x, double c);
  Value scale(Value x, double c);
  Value square(Value x);
  Value sqrt_(Value x);
  Value abs_(Value x);
  // log(max(x, floor)); gradient is zero where the floor is active.
  Value log_floor(Value x, double floor_val);
  Value sum(Value x);
  Value mean(Value x);
  Value avg_pool(Value x, int factor);
  // Magnitude spectrogram [fft/2+1 × frames], frame t over samples [t·hop, t·hop+win).
  Value stft_magnitude(Value x, int fft_size, int win_len, int hop, const std::vector<double>& window);

  const Tensor& val(Value v) const;
  const std::vector<double>& grad(Value v) const;
  bool needs_grad(Value v) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int64_t value_elements() const;  // total stored doubles, for memory accounting

  // Seeds d(seed)/d(seed) = seed_grad (seed must be a single element) and
  // accumulates into trainable params' tensor grads. May be called repeatedly;
  // node-level grads persist until zero_grads().
  void backward(Value seed, double seed_grad = 1.0);
  void zero_grads();

 private:
  enum class Op : uint8_t {
    constant, param, conv, convt, lnorm, wnorm, relu, lrelu, tanh_, add, sub,
    sub_const, scale, square, sqrt_, abs_, log_floor, sum, mean, pool, stftmag
  };
  struct Node {
    Op op;
    bool needs_grad = false;
    int a = -1, b = -1, c = -1;
    Tensor val;
    std::vector<double> grad;       // allocated lazily in backward
    std::vector<double> aux;        // op-specific saved state
    double p0 = 0.0;
    int i0 = 0, i1 = 0, i2 = 0;
    Tensor* bound = nullptr;        // param only
    bool trainable = false;
  };

  Node& at(Value v);
  const Node& at(Value v) const;
  Value push(Node&& n);
  std::vector<double>& grad_buf(int idx);
  void backward_node(int idx);

  std::vector<Node> nodes_;
};

}  // namespace plaae

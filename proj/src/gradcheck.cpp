#include "plaae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "plaae/dsp.hpp"
#include "plaae/error.hpp"
#include "plaae/graph.hpp"
#include "plaae/losses.hpp"
#include "plaae/rng.hpp"
#include "plaae/tensor.hpp"

namespace plaae::gradcheck {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;

Tensor rand_tensor(rng::Stream& s, std::vector<int> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = scale * s.gauss();
  return t;
}

// Keeps elementwise kinks (relu, leaky_relu) away from zero so central
// differences stay valid.
Tensor rand_tensor_off_zero(rng::Stream& s, std::vector<int> shape, double min_abs = 0.15) {
  Tensor t = rand_tensor(s, std::move(shape));
  for (double& v : t.data)
    if (std::fabs(v) < min_abs) v = v < 0.0 ? v - min_abs : v + min_abs;
  return t;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1.0});
}

// One randomized instance: parameters plus a scalar-valued graph builder.
struct Instance {
  std::vector<Tensor*> params;
  std::function<Graph::Value(Graph&)> build;
};

// Backward once, then sweep every parameter coordinate with fresh forward
// evaluations; nothing from backward() enters the reference side.
void audit_instance(const Instance& inst, LayerReport& report) {
  for (Tensor* p : inst.params) p->grad.clear();
  Graph g;
  const Graph::Value loss = inst.build(g);
  if (g.val(loss).data.size() != 1) raise(ErrorKind::shape, "gradcheck loss must be scalar");
  g.backward(loss);
  std::vector<std::vector<double>> analytic;
  for (Tensor* p : inst.params) {
    if (p->grad.size() != p->data.size())
      raise(ErrorKind::shape, "gradcheck parameter received no gradient");
    analytic.push_back(p->grad);
  }
  for (size_t pi = 0; pi < inst.params.size(); ++pi) {
    Tensor* p = inst.params[pi];
    for (size_t j = 0; j < p->data.size(); ++j) {
      const double keep = p->data[j];
      p->data[j] = keep + kStep;
      Graph gp;
      const double lp = gp.val(inst.build(gp)).data[0];
      p->data[j] = keep - kStep;
      Graph gm;
      const double lm = gm.val(inst.build(gm)).data[0];
      p->data[j] = keep;
      const double fd = (lp - lm) / (2.0 * kStep);
      report.max_rel = std::max(report.max_rel, rel_err(analytic[pi][j], fd));
      report.coords += 1;
    }
  }
  for (Tensor* p : inst.params) p->grad.clear();
}

// Mean-square readout gives every output position its own cotangent, so
// transposition bugs cannot cancel under a uniform upstream gradient.
Graph::Value mean_square(Graph& g, Graph::Value y) { return g.mean(g.square(y)); }

void check_conv(rng::Stream& s, LayerReport& report, int dilation_cap, int stride_cap) {
  const int cin = 1 + static_cast<int>(s.below(4));
  const int cout = 1 + static_cast<int>(s.below(4));
  const int k = 1 + static_cast<int>(s.below(5));
  const int dilation = dilation_cap > 1 ? 2 + static_cast<int>(s.below(dilation_cap - 1)) : 1;
  const int stride = stride_cap > 1 ? 2 + static_cast<int>(s.below(stride_cap - 1)) : 1;
  const int t = stride * (2 + static_cast<int>(s.below(5))) + (k - 1) * dilation;
  Tensor x = rand_tensor(s, {cin, t});
  Tensor w = rand_tensor(s, {cout, cin, k}, 0.5);
  Tensor b = rand_tensor(s, {cout}, 0.2);
  Instance inst;
  inst.params = {&x, &w, &b};
  inst.build = [&x, &w, &b, dilation, stride](Graph& g) {
    return mean_square(g, g.conv1d(g.param(x), g.param(w), g.param(b), dilation, stride));
  };
  audit_instance(inst, report);
}

void check_convt(rng::Stream& s, LayerReport& report) {
  const int cin = 1 + static_cast<int>(s.below(4));
  const int cout = 1 + static_cast<int>(s.below(4));
  const int stride = 2 + static_cast<int>(s.below(4));
  const int t = 2 + static_cast<int>(s.below(7));
  Tensor x = rand_tensor(s, {cin, t});
  Tensor w = rand_tensor(s, {cout, cin, stride}, 0.5);
  Tensor b = rand_tensor(s, {cout}, 0.2);
  Instance inst;
  inst.params = {&x, &w, &b};
  inst.build = [&x, &w, &b](Graph& g) {
    return mean_square(g, g.convt1d(g.param(x), g.param(w), g.param(b)));
  };
  audit_instance(inst, report);
}

void check_layer_norm(rng::Stream& s, LayerReport& report) {
  const int c = 2 + static_cast<int>(s.below(5));
  const int t = 1 + static_cast<int>(s.below(8));
  Tensor x = rand_tensor(s, {c, t});
  Tensor gain = rand_tensor(s, {c}, 0.7);
  Tensor bias = rand_tensor(s, {c}, 0.3);
  Instance inst;
  inst.params = {&x, &gain, &bias};
  inst.build = [&x, &gain, &bias](Graph& g) {
    return mean_square(g, g.layer_norm(g.param(x), g.param(gain), g.param(bias)));
  };
  audit_instance(inst, report);
}

void check_weight_norm(rng::Stream& s, LayerReport& report) {
  const int cin = 1 + static_cast<int>(s.below(3));
  const int cout = 1 + static_cast<int>(s.below(3));
  const int k = 1 + static_cast<int>(s.below(3));
  const int t = k + 2 + static_cast<int>(s.below(6));
  Tensor v = rand_tensor_off_zero(s, {cout, cin, k});  // keep ‖v‖ well away from 0
  Tensor gm = rand_tensor(s, {cout}, 0.8);
  Tensor b = rand_tensor(s, {cout}, 0.2);
  const Tensor x = rand_tensor(s, {cin, t});
  Instance inst;
  inst.params = {&v, &gm, &b};
  inst.build = [&v, &gm, &b, x](Graph& g) {
    const Graph::Value w = g.weight_norm(g.param(v), g.param(gm));
    return mean_square(g, g.conv1d(g.constant(Tensor(x.shape, x.data)), w, g.param(b)));
  };
  audit_instance(inst, report);
}

void check_elementwise(rng::Stream& s, LayerReport& report, const std::string& which) {
  const int c = 1 + static_cast<int>(s.below(3));
  const int t = 2 + static_cast<int>(s.below(10));
  Tensor x = which == "tanh" ? rand_tensor(s, {c, t}) : rand_tensor_off_zero(s, {c, t});
  Instance inst;
  inst.params = {&x};
  inst.build = [&x, which](Graph& g) {
    const Graph::Value in = g.param(x);
    const Graph::Value y = which == "relu"         ? g.relu(in)
                           : which == "leaky_relu" ? g.leaky_relu(in, 0.2)
                                                   : g.tanh_(in);
    return mean_square(g, y);
  };
  audit_instance(inst, report);
}

void check_avg_pool(rng::Stream& s, LayerReport& report) {
  const int c = 1 + static_cast<int>(s.below(3));
  const int factor = 2 + static_cast<int>(s.below(3));
  const int t = factor * (2 + static_cast<int>(s.below(5)));
  Tensor x = rand_tensor(s, {c, t});
  Instance inst;
  inst.params = {&x};
  inst.build = [&x, factor](Graph& g) { return mean_square(g, g.avg_pool(g.param(x), factor)); };
  audit_instance(inst, report);
}

void check_stft(rng::Stream& s, LayerReport& report) {
  const int fft = 16 << s.below(2);  // 16 or 32
  const int win = fft / 2 + static_cast<int>(s.below(fft / 2));
  const int hop = 1 + static_cast<int>(s.below(win));
  const int t = win + hop * (1 + static_cast<int>(s.below(3)));
  const std::vector<double> window = dsp::hann_window(win);
  Tensor x = rand_tensor(s, {1, t});
  Instance inst;
  inst.params = {&x};
  inst.build = [&x, fft, win, hop, window](Graph& g) {
    return mean_square(g, g.stft_magnitude(g.param(x), fft, win, hop, window));
  };
  audit_instance(inst, report);
}

void check_multi_stft(rng::Stream& s, LayerReport& report) {
  const int t = 96 + static_cast<int>(s.below(64));
  Tensor est = rand_tensor(s, {1, t}, 0.4);
  std::vector<double> ref(static_cast<size_t>(t));
  for (double& v : ref) v = 0.4 * s.gauss();
  losses::MultiStftConfig cfg;
  cfg.resolutions = {{16, 4, 8}, {32, 8, 16}, {64, 16, 32}};
  Instance inst;
  inst.params = {&est};
  inst.build = [&est, ref, cfg](Graph& g) {
    return losses::multi_stft_loss_graph(g, ref, g.param(est), cfg);
  };
  audit_instance(inst, report);
}

}  // namespace

const std::vector<std::string>& layer_names() {
  static const std::vector<std::string> names = {
      "conv1d",     "conv1d_dilated", "conv1d_strided", "convt1d",
      "layer_norm", "weight_norm",    "relu",           "leaky_relu",
      "tanh",       "avg_pool",       "stft_magnitude", "multi_stft"};
  return names;
}

LayerReport check_layer(const std::string& layer, int instances, uint64_t seed) {
  if (instances < 1) raise(ErrorKind::config, "gradcheck needs at least one instance");
  const auto& names = layer_names();
  if (std::find(names.begin(), names.end(), layer) == names.end())
    raise(ErrorKind::config, "unknown gradcheck layer: " + layer);

  LayerReport report;
  report.layer = layer;
  report.instances = instances;
  for (int i = 0; i < instances; ++i) {
    rng::Stream s(seed ^ rng::hash_string(layer), std::to_string(i));
    if (layer == "conv1d") check_conv(s, report, 1, 1);
    else if (layer == "conv1d_dilated") check_conv(s, report, 5, 1);
    else if (layer == "conv1d_strided") check_conv(s, report, 1, 4);
    else if (layer == "convt1d") check_convt(s, report);
    else if (layer == "layer_norm") check_layer_norm(s, report);
    else if (layer == "weight_norm") check_weight_norm(s, report);
    else if (layer == "relu" || layer == "leaky_relu" || layer == "tanh")
      check_elementwise(s, report, layer);
    else if (layer == "avg_pool") check_avg_pool(s, report);
    else if (layer == "stft_magnitude") check_stft(s, report);
    else check_multi_stft(s, report);
  }
  report.pass = report.max_rel < kTolerance;
  return report;
}

SuiteReport run_suite(int instances_per_layer, uint64_t seed) {
  SuiteReport suite;
  suite.tolerance = kTolerance;
  suite.pass = true;
  for (const std::string& layer : layer_names()) {
    suite.layers.push_back(check_layer(layer, instances_per_layer, seed));
    suite.pass = suite.pass && suite.layers.back().pass;
  }
  return suite;
}

}  // namespace plaae::gradcheck

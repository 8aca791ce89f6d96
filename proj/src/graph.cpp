#include "plaae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "plaae/error.hpp"
#include "plaae/fft.hpp"

namespace plaae {

namespace {

void check_2d(const Tensor& t, const char* what) {
  if (t.shape.size() != 2) raise(ErrorKind::shape, std::string(what) + " must be 2-D [channels x time], got " + shape_str(t.shape));
}

}  // namespace

Graph::Node& Graph::at(Value v) {
  if (v.idx < 0 || v.idx >= static_cast<int>(nodes_.size())) raise(ErrorKind::shape, "invalid graph value handle");
  return nodes_[v.idx];
}

const Graph::Node& Graph::at(Value v) const {
  if (v.idx < 0 || v.idx >= static_cast<int>(nodes_.size())) raise(ErrorKind::shape, "invalid graph value handle");
  return nodes_[v.idx];
}

Graph::Value Graph::push(Node&& n) {
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

std::vector<double>& Graph::grad_buf(int idx) {
  Node& n = nodes_[idx];
  if (n.grad.empty()) n.grad.assign(n.val.data.size(), 0.0);
  return n.grad;
}

const Tensor& Graph::val(Value v) const { return at(v).val; }

const std::vector<double>& Graph::grad(Value v) const { return at(v).grad; }

bool Graph::needs_grad(Value v) const { return at(v).needs_grad; }

int64_t Graph::value_elements() const {
  int64_t n = 0;
  for (const Node& nd : nodes_) n += static_cast<int64_t>(nd.val.data.size()) + nd.aux.size();
  return n;
}

Graph::Value Graph::constant(Tensor t) {
  Node n;
  n.op = Op::constant;
  n.val = std::move(t);
  return push(std::move(n));
}

Graph::Value Graph::param(Tensor& p, bool trainable) {
  Node n;
  n.op = Op::param;
  n.val = Tensor(p.shape, p.data);
  n.bound = &p;
  n.trainable = trainable;
  n.needs_grad = trainable;
  return push(std::move(n));
}

Graph::Value Graph::conv1d(Value x, Value w, Value b, int dilation, int stride) {
  const Tensor& xv = at(x).val;
  const Tensor& wv = at(w).val;
  const Tensor& bv = at(b).val;
  check_2d(xv, "conv input");
  if (wv.shape.size() != 3) raise(ErrorKind::shape, "conv weights must be [out x in x kernel], got " + shape_str(wv.shape));
  if (wv.shape[1] != xv.shape[0])
    raise(ErrorKind::shape, "conv weight in_channels " + std::to_string(wv.shape[1]) + " vs input channels " + std::to_string(xv.shape[0]));
  if (static_cast<int>(bv.data.size()) != wv.shape[0])
    raise(ErrorKind::shape, "conv bias size " + std::to_string(bv.data.size()) + " vs out_channels " + std::to_string(wv.shape[0]));
  if (dilation < 1 || stride < 1) raise(ErrorKind::config, "conv dilation and stride must be >= 1");
  kernels::ConvDims d{xv.shape[0], wv.shape[0], wv.shape[2], dilation, stride, xv.shape[1]};
  Node n;
  n.op = Op::conv;
  n.a = x.idx;
  n.b = w.idx;
  n.c = b.idx;
  n.i0 = dilation;
  n.i1 = stride;
  n.needs_grad = at(x).needs_grad || at(w).needs_grad || at(b).needs_grad;
  n.val = Tensor({d.out_ch, d.out_len()});
  kernels::conv1d_forward(d, xv.data.data(), wv.data.data(), bv.data.data(), n.val.data.data());
  return push(std::move(n));
}

Graph::Value Graph::convt1d(Value x, Value w, Value b) {
  const Tensor& xv = at(x).val;
  const Tensor& wv = at(w).val;
  const Tensor& bv = at(b).val;
  check_2d(xv, "transposed conv input");
  if (wv.shape.size() != 3) raise(ErrorKind::shape, "transposed conv weights must be [out x in x stride], got " + shape_str(wv.shape));
  if (wv.shape[1] != xv.shape[0])
    raise(ErrorKind::shape, "transposed conv weight in_channels " + std::to_string(wv.shape[1]) + " vs input channels " + std::to_string(xv.shape[0]));
  if (static_cast<int>(bv.data.size()) != wv.shape[0])
    raise(ErrorKind::shape, "transposed conv bias size mismatch");
  kernels::ConvTDims d{xv.shape[0], wv.shape[0], wv.shape[2], xv.shape[1]};
  Node n;
  n.op = Op::convt;
  n.a = x.idx;
  n.b = w.idx;
  n.c = b.idx;
  n.needs_grad = at(x).needs_grad || at(w).needs_grad || at(b).needs_grad;
  n.val = Tensor({d.out_ch, d.out_len()});
  kernels::convt1d_forward(d, xv.data.data(), wv.data.data(), bv.data.data(), n.val.data.data());
  return push(std::move(n));
}

Graph::Value Graph::layer_norm(Value x, Value gain, Value bias, double eps) {
  const Tensor& xv = at(x).val;
  const Tensor& gv = at(gain).val;
  const Tensor& bv = at(bias).val;
  check_2d(xv, "layer_norm input");
  const int C = xv.shape[0], T = xv.shape[1];
  if (static_cast<int>(gv.data.size()) != C || static_cast<int>(bv.data.size()) != C)
    raise(ErrorKind::shape, "layer_norm gain/bias must have one entry per channel");
  Node n;
  n.op = Op::lnorm;
  n.a = x.idx;
  n.b = gain.idx;
  n.c = bias.idx;
  n.p0 = eps;
  n.needs_grad = at(x).needs_grad || at(gain).needs_grad || at(bias).needs_grad;
  n.val = Tensor({C, T});
  n.aux.resize(2 * static_cast<size_t>(T));
  kernels::layer_norm_forward(C, T, xv.data.data(), gv.data.data(), bv.data.data(), eps,
                              n.val.data.data(), n.aux.data(), n.aux.data() + T);
  return push(std::move(n));
}

Graph::Value Graph::weight_norm(Value v, Value g) {
  const Tensor& vv = at(v).val;
  const Tensor& gv = at(g).val;
  if (vv.shape.empty()) raise(ErrorKind::shape, "weight_norm direction must be shaped");
  const int out = vv.shape[0];
  if (static_cast<int>(gv.data.size()) != out)
    raise(ErrorKind::shape, "weight_norm magnitude must have one scalar per output channel");
  const int64_t block = static_cast<int64_t>(vv.data.size()) / out;
  Node n;
  n.op = Op::wnorm;
  n.a = v.idx;
  n.b = g.idx;
  n.needs_grad = at(v).needs_grad || at(g).needs_grad;
  n.val = Tensor(vv.shape);
  n.aux.resize(out);
  for (int o = 0; o < out; ++o) {
    const double* vo = vv.data.data() + o * block;
    double ss = 0.0;
    for (int64_t j = 0; j < block; ++j) ss += vo[j] * vo[j];
    const double norm = std::sqrt(ss);
    if (norm < 1e-12)
      raise(ErrorKind::numeric, "weight_norm direction norm " + std::to_string(norm) + " below 1e-12 guard at output channel " + std::to_string(o));
    n.aux[o] = norm;
    const double s = gv.data[o] / norm;
    double* wo = n.val.data.data() + o * block;
    for (int64_t j = 0; j < block; ++j) wo[j] = s * vo[j];
  }
  return push(std::move(n));
}

Graph::Value Graph::relu(Value x) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::relu;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = xv.data[j] > 0.0 ? xv.data[j] : 0.0;
  return push(std::move(n));
}

Graph::Value Graph::leaky_relu(Value x, double slope) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::lrelu;
  n.a = x.idx;
  n.p0 = slope;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = xv.data[j] > 0.0 ? xv.data[j] : slope * xv.data[j];
  return push(std::move(n));
}

Graph::Value Graph::tanh_(Value x) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::tanh_;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = std::tanh(xv.data[j]);
  return push(std::move(n));
}

Graph::Value Graph::add(Value a, Value b) {
  const Tensor& av = at(a).val;
  const Tensor& bv = at(b).val;
  if (!av.same_shape(bv)) raise(ErrorKind::shape, "add shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  Node n;
  n.op = Op::add;
  n.a = a.idx;
  n.b = b.idx;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val = Tensor(av.shape);
  for (size_t j = 0; j < av.data.size(); ++j) n.val.data[j] = av.data[j] + bv.data[j];
  return push(std::move(n));
}

Graph::Value Graph::sub(Value a, Value b) {
  const Tensor& av = at(a).val;
  const Tensor& bv = at(b).val;
  if (!av.same_shape(bv)) raise(ErrorKind::shape, "sub shape mismatch: " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  Node n;
  n.op = Op::sub;
  n.a = a.idx;
  n.b = b.idx;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  n.val = Tensor(av.shape);
  for (size_t j = 0; j < av.data.size(); ++j) n.val.data[j] = av.data[j] - bv.data[j];
  return push(std::move(n));
}

Graph::Value Graph::sub_const(Value x, double c) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::sub_const;
  n.a = x.idx;
  n.p0 = c;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = xv.data[j] - c;
  return push(std::move(n));
}

Graph::Value Graph::scale(Value x, double c) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::scale;
  n.a = x.idx;
  n.p0 = c;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = c * xv.data[j];
  return push(std::move(n));
}

Graph::Value Graph::square(Value x) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::square;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = xv.data[j] * xv.data[j];
  return push(std::move(n));
}

Graph::Value Graph::sqrt_(Value x) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::sqrt_;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) {
    if (xv.data[j] < 0.0) raise(ErrorKind::numeric, "sqrt of negative value " + std::to_string(xv.data[j]));
    n.val.data[j] = std::sqrt(xv.data[j]);
  }
  return push(std::move(n));
}

Graph::Value Graph::abs_(Value x) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::abs_;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = std::fabs(xv.data[j]);
  return push(std::move(n));
}

Graph::Value Graph::log_floor(Value x, double floor_val) {
  const Tensor& xv = at(x).val;
  if (floor_val <= 0.0) raise(ErrorKind::config, "log_floor requires a positive floor");
  Node n;
  n.op = Op::log_floor;
  n.a = x.idx;
  n.p0 = floor_val;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor(xv.shape);
  for (size_t j = 0; j < xv.data.size(); ++j) n.val.data[j] = std::log(xv.data[j] > floor_val ? xv.data[j] : floor_val);
  return push(std::move(n));
}

Graph::Value Graph::sum(Value x) {
  const Tensor& xv = at(x).val;
  Node n;
  n.op = Op::sum;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  double acc = 0.0;
  for (double v : xv.data) acc += v;
  n.val = Tensor({1}, {acc});
  return push(std::move(n));
}

Graph::Value Graph::mean(Value x) {
  const Tensor& xv = at(x).val;
  if (xv.data.empty()) raise(ErrorKind::shape, "mean of empty tensor");
  Node n;
  n.op = Op::mean;
  n.a = x.idx;
  n.needs_grad = at(x).needs_grad;
  double acc = 0.0;
  for (double v : xv.data) acc += v;
  n.val = Tensor({1}, {acc / static_cast<double>(xv.data.size())});
  return push(std::move(n));
}

Graph::Value Graph::avg_pool(Value x, int factor) {
  const Tensor& xv = at(x).val;
  check_2d(xv, "avg_pool input");
  if (factor < 1) raise(ErrorKind::config, "avg_pool factor must be >= 1");
  const int C = xv.shape[0], T = xv.shape[1];
  if (T / factor < 1) raise(ErrorKind::length, "avg_pool input shorter than one block");
  Node n;
  n.op = Op::pool;
  n.a = x.idx;
  n.i0 = factor;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor({C, T / factor});
  kernels::avg_pool_forward(C, T, factor, xv.data.data(), n.val.data.data());
  return push(std::move(n));
}

Graph::Value Graph::stft_magnitude(Value x, int fft_size, int win_len, int hop, const std::vector<double>& window) {
  const Tensor& xv = at(x).val;
  const int T = static_cast<int>(xv.data.size());
  if (static_cast<int>(window.size()) != win_len) raise(ErrorKind::config, "window length mismatch");
  if (win_len > fft_size) raise(ErrorKind::config, "window longer than fft size");
  if (hop < 1) raise(ErrorKind::config, "hop must be >= 1");
  if (T < win_len)
    raise(ErrorKind::length, "signal length " + std::to_string(T) + " shorter than analysis window " + std::to_string(win_len));
  const int frames = (T - win_len) / hop + 1;
  const int bins = fft_size / 2 + 1;
  Node n;
  n.op = Op::stftmag;
  n.a = x.idx;
  n.i0 = fft_size;
  n.i1 = win_len;
  n.i2 = hop;
  n.needs_grad = at(x).needs_grad;
  n.val = Tensor({bins, frames});
  n.aux.resize(window.size() + 2 * static_cast<size_t>(bins) * frames);
  std::copy(window.begin(), window.end(), n.aux.begin());
  double* re = n.aux.data() + win_len;
  double* im = re + static_cast<int64_t>(bins) * frames;
  const FftPlan plan = make_fft_plan(fft_size);
  std::vector<std::complex<double>> buf(fft_size);
  for (int f = 0; f < frames; ++f) {
    const double* seg = xv.data.data() + static_cast<int64_t>(f) * hop;
    for (int j = 0; j < win_len; ++j) buf[j] = {seg[j] * window[j], 0.0};
    for (int j = win_len; j < fft_size; ++j) buf[j] = {0.0, 0.0};
    fft(plan, buf.data(), false);
    for (int k = 0; k < bins; ++k) {
      re[static_cast<int64_t>(k) * frames + f] = buf[k].real();
      im[static_cast<int64_t>(k) * frames + f] = buf[k].imag();
      n.val.data[static_cast<size_t>(k) * frames + f] = std::hypot(buf[k].real(), buf[k].imag());
    }
  }
  return push(std::move(n));
}

void Graph::zero_grads() {
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

void Graph::backward(Value seed, double seed_grad) {
  Node& s = at(seed);
  if (s.val.data.size() != 1) raise(ErrorKind::shape, "backward seed must be a scalar value");
  if (!s.needs_grad) return;
  grad_buf(seed.idx)[0] += seed_grad;
  for (int i = seed.idx; i >= 0; --i) {
    if (!nodes_[i].needs_grad || nodes_[i].grad.empty()) continue;
    backward_node(i);
  }
}

void Graph::backward_node(int idx) {
  Node& n = nodes_[idx];
  const std::vector<double>& gy = n.grad;
  auto in_needs = [&](int i) { return i >= 0 && nodes_[i].needs_grad; };
  auto gptr = [&](int i) -> double* { return in_needs(i) ? grad_buf(i).data() : nullptr; };

  switch (n.op) {
    case Op::constant:
      break;
    case Op::param:
      if (n.trainable && n.bound) {
        n.bound->ensure_grad();
        for (size_t j = 0; j < gy.size(); ++j) n.bound->grad[j] += gy[j];
      }
      break;
    case Op::conv: {
      const Tensor& xv = nodes_[n.a].val;
      const Tensor& wv = nodes_[n.b].val;
      kernels::ConvDims d{xv.shape[0], wv.shape[0], wv.shape[2], n.i0, n.i1, xv.shape[1]};
      kernels::conv1d_backward(d, xv.data.data(), wv.data.data(), gy.data(), gptr(n.a), gptr(n.b), gptr(n.c));
      break;
    }
    case Op::convt: {
      const Tensor& xv = nodes_[n.a].val;
      const Tensor& wv = nodes_[n.b].val;
      kernels::ConvTDims d{xv.shape[0], wv.shape[0], wv.shape[2], xv.shape[1]};
      kernels::convt1d_backward(d, xv.data.data(), wv.data.data(), gy.data(), gptr(n.a), gptr(n.b), gptr(n.c));
      break;
    }
    case Op::lnorm: {
      const Tensor& xv = nodes_[n.a].val;
      const int C = xv.shape[0], T = xv.shape[1];
      kernels::layer_norm_backward(C, T, xv.data.data(), nodes_[n.b].val.data.data(), n.aux.data(),
                                   n.aux.data() + T, gy.data(), gptr(n.a), gptr(n.b), gptr(n.c));
      break;
    }
    case Op::wnorm: {
      const Tensor& vv = nodes_[n.a].val;
      const Tensor& gv = nodes_[n.b].val;
      const int out = vv.shape[0];
      const int64_t block = static_cast<int64_t>(vv.data.size()) / out;
      double* gvdir = gptr(n.a);
      double* gmag = gptr(n.b);
      for (int o = 0; o < out; ++o) {
        const double* vo = vv.data.data() + o * block;
        const double* gw = gy.data() + o * block;
        const double norm = n.aux[o];
        double udot = 0.0;  // (v/‖v‖)·gw
        for (int64_t j = 0; j < block; ++j) udot += vo[j] * gw[j];
        udot /= norm;
        if (gmag) gmag[o] += udot;
        if (gvdir) {
          const double s = gv.data[o] / norm;
          for (int64_t j = 0; j < block; ++j) gvdir[o * block + j] += s * (gw[j] - vo[j] / norm * udot);
        }
      }
      break;
    }
    case Op::relu: {
      const Tensor& xv = nodes_[n.a].val;
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) gx[j] += xv.data[j] > 0.0 ? gy[j] : 0.0;
      break;
    }
    case Op::lrelu: {
      const Tensor& xv = nodes_[n.a].val;
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) gx[j] += xv.data[j] > 0.0 ? gy[j] : n.p0 * gy[j];
      break;
    }
    case Op::tanh_: {
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) gx[j] += gy[j] * (1.0 - n.val.data[j] * n.val.data[j]);
      break;
    }
    case Op::add: {
      double* ga = gptr(n.a);
      double* gb = gptr(n.b);
      if (ga)
        for (size_t j = 0; j < gy.size(); ++j) ga[j] += gy[j];
      if (gb)
        for (size_t j = 0; j < gy.size(); ++j) gb[j] += gy[j];
      break;
    }
    case Op::sub: {
      double* ga = gptr(n.a);
      double* gb = gptr(n.b);
      if (ga)
        for (size_t j = 0; j < gy.size(); ++j) ga[j] += gy[j];
      if (gb)
        for (size_t j = 0; j < gy.size(); ++j) gb[j] -= gy[j];
      break;
    }
    case Op::sub_const:
    case Op::scale: {
      double* gx = gptr(n.a);
      const double c = n.op == Op::scale ? n.p0 : 1.0;
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) gx[j] += c * gy[j];
      break;
    }
    case Op::square: {
      const Tensor& xv = nodes_[n.a].val;
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) gx[j] += gy[j] * 2.0 * xv.data[j];
      break;
    }
    case Op::sqrt_: {
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) gx[j] += gy[j] * 0.5 / (n.val.data[j] > 1e-150 ? n.val.data[j] : 1e-150);
      break;
    }
    case Op::abs_: {
      const Tensor& xv = nodes_[n.a].val;
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j) {
          const double s = xv.data[j] > 0.0 ? 1.0 : (xv.data[j] < 0.0 ? -1.0 : 0.0);
          gx[j] += gy[j] * s;
        }
      break;
    }
    case Op::log_floor: {
      const Tensor& xv = nodes_[n.a].val;
      double* gx = gptr(n.a);
      if (gx)
        for (size_t j = 0; j < gy.size(); ++j)
          if (xv.data[j] > n.p0) gx[j] += gy[j] / xv.data[j];
      break;
    }
    case Op::sum: {
      double* gx = gptr(n.a);
      if (gx) {
        const double g = gy[0];
        const size_t m = nodes_[n.a].val.data.size();
        for (size_t j = 0; j < m; ++j) gx[j] += g;
      }
      break;
    }
    case Op::mean: {
      double* gx = gptr(n.a);
      if (gx) {
        const size_t m = nodes_[n.a].val.data.size();
        const double g = gy[0] / static_cast<double>(m);
        for (size_t j = 0; j < m; ++j) gx[j] += g;
      }
      break;
    }
    case Op::pool: {
      const Tensor& xv = nodes_[n.a].val;
      double* gx = gptr(n.a);
      if (gx) kernels::avg_pool_backward(xv.shape[0], xv.shape[1], n.i0, gy.data(), gx);
      break;
    }
    case Op::stftmag: {
      double* gx = gptr(n.a);
      if (!gx) break;
      const int fft_size = n.i0, win_len = n.i1, hop = n.i2;
      const int bins = n.val.shape[0], frames = n.val.shape[1];
      const double* window = n.aux.data();
      const double* re = n.aux.data() + win_len;
      const double* im = re + static_cast<int64_t>(bins) * frames;
      const FftPlan plan = make_fft_plan(fft_size);
      std::vector<std::complex<double>> buf(fft_size);
      // dL/dx[t0+j] = Re(Σ_{k≤N/2} G[k] e^{+i2πk·j/N}) · w[j], with
      // G[k] = gy[k]·(re+i·im)/mag; frame order fixed for determinism.
      for (int f = 0; f < frames; ++f) {
        std::fill(buf.begin(), buf.end(), std::complex<double>{0.0, 0.0});
        for (int k = 0; k < bins; ++k) {
          const double g = gy[static_cast<size_t>(k) * frames + f];
          if (g == 0.0) continue;
          const double r = re[static_cast<int64_t>(k) * frames + f];
          const double iq = im[static_cast<int64_t>(k) * frames + f];
          const double mag = n.val.data[static_cast<size_t>(k) * frames + f];
          if (mag > 1e-150) buf[k] = {g * r / mag, g * iq / mag};
        }
        fft(plan, buf.data(), true);
        double* gseg = gx + static_cast<int64_t>(f) * hop;
        for (int j = 0; j < win_len; ++j) gseg[j] += buf[j].real() * window[j];
      }
      break;
    }
  }
}

}  // namespace plaae

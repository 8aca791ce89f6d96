#include "plaae/optim.hpp"

#include <cmath>

#include "plaae/error.hpp"

namespace plaae::optim {

namespace {

std::vector<double>& moment_slot(std::map<std::string, std::vector<double>>& store,
                                 const std::string& name, size_t n) {
  std::vector<double>& slot = store[name];
  if (slot.empty()) slot.assign(n, 0.0);
  if (slot.size() != n)
    raise(ErrorKind::shape, "optimizer state for '" + name + "' holds " +
                                std::to_string(slot.size()) + " values, parameter has " +
                                std::to_string(n));
  return slot;
}

}  // namespace

void adam_step(const std::vector<ParamRef>& params, AdamState& state,
               const AdamConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (const ParamRef& p : params) {
    Tensor& t = *p.tensor;
    const size_t n = t.data.size();
    std::vector<double>& m = moment_slot(state.m, p.name, n);
    std::vector<double>& v = moment_slot(state.v, p.name, n);
    const bool has_grad = t.grad.size() == n;
    for (size_t j = 0; j < n; ++j) {
      const double g = has_grad ? t.grad[j] : 0.0;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      t.data[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double grad_l2_norm(const std::vector<ParamRef>& params) {
  double sq = 0.0;
  for (const ParamRef& p : params)
    for (double g : p.tensor->grad) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<ParamRef>& params, double max_norm) {
  if (max_norm <= 0.0) raise(ErrorKind::config, "clip threshold must be positive");
  const double norm = grad_l2_norm(params);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const ParamRef& p : params)
      for (double& g : p.tensor->grad) g *= scale;
  }
  return norm;
}

}  // namespace plaae::optim

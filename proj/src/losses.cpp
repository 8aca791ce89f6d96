#include "plaae/losses.hpp"

#include <algorithm>
#include <cmath>

#include "plaae/error.hpp"

namespace plaae::losses {

namespace {

constexpr double kMagFloor = 1e-5;  // floor inside the log of L_MAG
constexpr double kScGuard = 1e-8;   // silent-reference guard in L_SC

void check_pair(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est) {
  if (ref.samples.size() != est.samples.size())
    raise(ErrorKind::length, "loss operands differ in length: " + std::to_string(ref.samples.size()) + " vs " +
                                 std::to_string(est.samples.size()));
}

void check_cfg(const MultiStftConfig& cfg) {
  if (cfg.resolutions.empty()) raise(ErrorKind::config, "multi-stft needs at least one resolution");
  if (cfg.alpha < 0.0) raise(ErrorKind::config, "alpha must be >= 0");
}

dsp::StftConfig to_stft(const Resolution& r) {
  dsp::StftConfig cfg;
  cfg.fft_size = r.fft_size;
  cfg.hop_length = r.hop;
  cfg.window_length = r.window_length;
  return cfg;
}

double frobenius(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.data) acc += v * v;
  return std::sqrt(acc);
}

// Summing in value-sorted order makes the total independent of input order.
double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

}  // namespace

MultiStftConfig canonical_multi_stft() {
  MultiStftConfig cfg;
  cfg.resolutions = {{1024, 120, 600}, {2048, 240, 1200}, {512, 50, 240}};
  cfg.alpha = 1.0;
  return cfg;
}

double lsgan_discriminator_loss(const std::vector<Tensor>& scores_real, const std::vector<Tensor>& scores_fake) {
  if (scores_real.empty() || scores_real.size() != scores_fake.size())
    raise(ErrorKind::shape, "discriminator loss needs matching non-empty score lists");
  double total = 0.0;
  for (size_t i = 0; i < scores_real.size(); ++i) {
    double mr = 0.0, mf = 0.0;
    for (double v : scores_real[i].data) mr += (v - 1.0) * (v - 1.0);
    for (double v : scores_fake[i].data) mf += v * v;
    total += 0.5 * mr / scores_real[i].data.size() + 0.5 * mf / scores_fake[i].data.size();
  }
  return total / scores_real.size();
}

double lsgan_generator_adv_loss(const std::vector<Tensor>& scores_fake) {
  if (scores_fake.empty()) raise(ErrorKind::shape, "generator adversarial loss needs at least one score map");
  double total = 0.0;
  for (const Tensor& s : scores_fake) {
    double m = 0.0;
    for (double v : s.data) m += (v - 1.0) * (v - 1.0);
    total += m / s.data.size();
  }
  return total / scores_fake.size();
}

double spectral_convergence(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est, const Resolution& res) {
  check_pair(ref, est);
  const Tensor mr = dsp::magnitude(dsp::stft(ref, to_stft(res)));
  const Tensor me = dsp::magnitude(dsp::stft(est, to_stft(res)));
  double num = 0.0;
  for (size_t j = 0; j < mr.data.size(); ++j) num += (mr.data[j] - me.data[j]) * (mr.data[j] - me.data[j]);
  return std::sqrt(num) / std::max(frobenius(mr), kScGuard);
}

double log_magnitude_loss(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est, const Resolution& res) {
  check_pair(ref, est);
  const Tensor mr = dsp::magnitude(dsp::stft(ref, to_stft(res)));
  const Tensor me = dsp::magnitude(dsp::stft(est, to_stft(res)));
  double acc = 0.0;
  for (size_t j = 0; j < mr.data.size(); ++j)
    acc += std::fabs(std::log(std::max(mr.data[j], kMagFloor)) - std::log(std::max(me.data[j], kMagFloor)));
  return acc / mr.data.size();
}

double multi_stft_loss(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est, const MultiStftConfig& cfg) {
  check_cfg(cfg);
  std::vector<double> per_res;
  per_res.reserve(cfg.resolutions.size());
  for (const Resolution& r : cfg.resolutions)
    per_res.push_back(spectral_convergence(ref, est, r) + log_magnitude_loss(ref, est, r));
  return sorted_sum(std::move(per_res)) / cfg.resolutions.size();
}

double generator_total_loss(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est,
                            const std::vector<Tensor>& scores_fake, const MultiStftConfig& cfg) {
  return lsgan_generator_adv_loss(scores_fake) + cfg.alpha * multi_stft_loss(ref, est, cfg);
}

Graph::Value multi_stft_loss_graph(Graph& g, const std::vector<double>& ref, Graph::Value est,
                                   const MultiStftConfig& cfg) {
  check_cfg(cfg);
  dsp::AudioBuffer ref_buf;
  ref_buf.samples = ref;
  std::vector<Graph::Value> per_res;
  for (const Resolution& r : cfg.resolutions) {
    const Tensor mr = dsp::magnitude(dsp::stft(ref_buf, to_stft(r)));
    Tensor log_mr(mr.shape);
    for (size_t j = 0; j < mr.data.size(); ++j) log_mr.data[j] = std::log(std::max(mr.data[j], kMagFloor));
    const double denom = std::max(frobenius(mr), kScGuard);

    const auto me = g.stft_magnitude(est, r.fft_size, r.window_length, r.hop, dsp::hann_window(r.window_length));
    const auto diff = g.sub(me, g.constant(Tensor(mr.shape, mr.data)));
    const auto sc = g.scale(g.sqrt_(g.sum(g.square(diff))), 1.0 / denom);
    const auto mag = g.mean(g.abs_(g.sub(g.log_floor(me, kMagFloor), g.constant(std::move(log_mr)))));
    per_res.push_back(g.add(sc, mag));
  }
  // Same value-sorted combination as the plain version.
  std::sort(per_res.begin(), per_res.end(),
            [&](Graph::Value a, Graph::Value b) { return g.val(a).data[0] < g.val(b).data[0]; });
  Graph::Value total = per_res[0];
  for (size_t i = 1; i < per_res.size(); ++i) total = g.add(total, per_res[i]);
  return g.scale(total, 1.0 / cfg.resolutions.size());
}

Graph::Value lsgan_discriminator_loss_graph(Graph& g, const std::vector<Graph::Value>& scores_real,
                                            const std::vector<Graph::Value>& scores_fake) {
  if (scores_real.empty() || scores_real.size() != scores_fake.size())
    raise(ErrorKind::shape, "discriminator loss needs matching non-empty score lists");
  Graph::Value total{};
  for (size_t i = 0; i < scores_real.size(); ++i) {
    const auto lr = g.mean(g.square(g.sub_const(scores_real[i], 1.0)));
    const auto lf = g.mean(g.square(scores_fake[i]));
    const auto both = g.add(g.scale(lr, 0.5), g.scale(lf, 0.5));
    total = i == 0 ? both : g.add(total, both);
  }
  return g.scale(total, 1.0 / scores_real.size());
}

Graph::Value lsgan_generator_adv_loss_graph(Graph& g, const std::vector<Graph::Value>& scores_fake) {
  if (scores_fake.empty()) raise(ErrorKind::shape, "generator adversarial loss needs at least one score map");
  Graph::Value total{};
  for (size_t i = 0; i < scores_fake.size(); ++i) {
    const auto l = g.mean(g.square(g.sub_const(scores_fake[i], 1.0)));
    total = i == 0 ? l : g.add(total, l);
  }
  return g.scale(total, 1.0 / scores_fake.size());
}

}  // namespace plaae::losses

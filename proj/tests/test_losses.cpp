#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "plaae/dsp.hpp"
#include "plaae/error.hpp"
#include "plaae/graph.hpp"
#include "plaae/losses.hpp"
#include "plaae/rng.hpp"

using namespace plaae;
using losses::MultiStftConfig;
using losses::Resolution;

namespace {

Tensor filled(const std::vector<int>& shape, double v) {
  Tensor t(shape);
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

Tensor rand_scores(rng::Stream& s, const std::vector<int>& shape, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.data) v = s.uniform(lo, hi);
  return t;
}

dsp::AudioBuffer rand_audio(rng::Stream& s, int n, double amp) {
  dsp::AudioBuffer a;
  a.samples.resize(n);
  for (double& v : a.samples) v = s.uniform(-amp, amp);
  return a;
}

}  // namespace

TEST_CASE("discriminator loss is zero for a perfect discriminator and one half for an all-zero one") {
  std::vector<Tensor> real = {filled({1, 7}, 1.0), filled({1, 13}, 1.0), filled({1, 4}, 1.0)};
  std::vector<Tensor> fake = {filled({1, 7}, 0.0), filled({1, 13}, 0.0), filled({1, 4}, 0.0)};
  CHECK(losses::lsgan_discriminator_loss(real, fake) == 0.0);

  std::vector<Tensor> zeros_r = {filled({1, 7}, 0.0), filled({1, 13}, 0.0), filled({1, 4}, 0.0)};
  CHECK(losses::lsgan_discriminator_loss(zeros_r, fake) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("generator adversarial loss is zero for fakes scored one and one for fakes scored zero") {
  std::vector<Tensor> ones = {filled({1, 9}, 1.0), filled({1, 3}, 1.0)};
  std::vector<Tensor> zeros = {filled({1, 9}, 0.0), filled({1, 3}, 0.0)};
  CHECK(losses::lsgan_generator_adv_loss(ones) == 0.0);
  CHECK(losses::lsgan_generator_adv_loss(zeros) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lsgan losses on random score maps match the mean-square formula per discriminator") {
  rng::Stream s(411);
  // Different map sizes per discriminator: equal weight per discriminator, not per element.
  std::vector<Tensor> real = {rand_scores(s, {1, 7}, -2, 2), rand_scores(s, {1, 29}, -2, 2),
                              rand_scores(s, {1, 3}, -2, 2)};
  std::vector<Tensor> fake = {rand_scores(s, {1, 7}, -2, 2), rand_scores(s, {1, 29}, -2, 2),
                              rand_scores(s, {1, 3}, -2, 2)};

  double d_oracle = 0.0, g_oracle = 0.0;
  for (size_t i = 0; i < real.size(); ++i) {
    double mr = 0.0, mf = 0.0, mg = 0.0;
    for (double v : real[i].data) mr += (v - 1.0) * (v - 1.0);
    for (double v : fake[i].data) mf += v * v;
    for (double v : fake[i].data) mg += (v - 1.0) * (v - 1.0);
    d_oracle += 0.5 * mr / real[i].data.size() + 0.5 * mf / fake[i].data.size();
    g_oracle += mg / fake[i].data.size();
  }
  d_oracle /= real.size();
  g_oracle /= real.size();

  CHECK(losses::lsgan_discriminator_loss(real, fake) == doctest::Approx(d_oracle).epsilon(1e-14));
  CHECK(losses::lsgan_generator_adv_loss(fake) == doctest::Approx(g_oracle).epsilon(1e-14));
}

TEST_CASE("graph lsgan losses match the plain values and their gradients pass finite differences") {
  rng::Stream s(907);
  std::vector<Tensor> real = {rand_scores(s, {1, 5}, -1.5, 1.5), rand_scores(s, {1, 11}, -1.5, 1.5)};
  std::vector<Tensor> fake = {rand_scores(s, {1, 5}, -1.5, 1.5), rand_scores(s, {1, 11}, -1.5, 1.5)};

  auto build_d = [&](std::vector<Tensor>& r, std::vector<Tensor>& f) {
    Graph g;
    std::vector<Graph::Value> vr, vf;
    for (auto& t : r) vr.push_back(g.param(t));
    for (auto& t : f) vf.push_back(g.param(t));
    return g.val(losses::lsgan_discriminator_loss_graph(g, vr, vf)).data[0];
  };
  CHECK(build_d(real, fake) == doctest::Approx(losses::lsgan_discriminator_loss(real, fake)).epsilon(1e-14));

  {
    Graph g;
    std::vector<Graph::Value> vf;
    for (auto& t : fake) vf.push_back(g.param(t));
    const auto loss = losses::lsgan_generator_adv_loss_graph(g, vf);
    CHECK(g.val(loss).data[0] == doctest::Approx(losses::lsgan_generator_adv_loss(fake)).epsilon(1e-14));

    for (auto& t : fake) t.zero_grad();
    g.backward(loss);
    const double h = 1e-6;
    for (auto& t : fake)
      for (size_t j = 0; j < t.data.size(); ++j) {
        const double keep = t.data[j];
        t.data[j] = keep + h;
        const double up = losses::lsgan_generator_adv_loss(fake);
        t.data[j] = keep - h;
        const double dn = losses::lsgan_generator_adv_loss(fake);
        t.data[j] = keep;
        const double fd = (up - dn) / (2 * h);
        CHECK(t.grad[j] == doctest::Approx(fd).epsilon(1e-6));
      }
  }

  {
    for (auto& t : real) t.zero_grad();
    for (auto& t : fake) t.zero_grad();
    Graph g;
    std::vector<Graph::Value> vr, vf;
    for (auto& t : real) vr.push_back(g.param(t));
    for (auto& t : fake) vf.push_back(g.param(t));
    g.backward(losses::lsgan_discriminator_loss_graph(g, vr, vf));
    const double h = 1e-6;
    auto fd_check = [&](Tensor& t) {
      for (size_t j = 0; j < t.data.size(); ++j) {
        const double keep = t.data[j];
        t.data[j] = keep + h;
        const double up = losses::lsgan_discriminator_loss(real, fake);
        t.data[j] = keep - h;
        const double dn = losses::lsgan_discriminator_loss(real, fake);
        t.data[j] = keep;
        CHECK(t.grad[j] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-6));
      }
    };
    for (auto& t : real) fd_check(t);
    for (auto& t : fake) fd_check(t);
  }
}

TEST_CASE("spectral terms vanish when the estimate equals the reference") {
  rng::Stream s(12);
  const dsp::AudioBuffer ref = rand_audio(s, 1400, 0.6);
  const Resolution res{1024, 120, 600};
  CHECK(losses::spectral_convergence(ref, ref, res) == 0.0);
  CHECK(losses::log_magnitude_loss(ref, ref, res) == 0.0);
  CHECK(losses::multi_stft_loss(ref, ref, losses::canonical_multi_stft()) == 0.0);
}

TEST_CASE("doubling the estimate gives spectral convergence exactly one") {
  rng::Stream s(13);
  const dsp::AudioBuffer ref = rand_audio(s, 1400, 0.4);
  dsp::AudioBuffer est = ref;
  for (double& v : est.samples) v *= 2.0;
  for (const Resolution& res : losses::canonical_multi_stft().resolutions)
    CHECK(losses::spectral_convergence(ref, est, res) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scaling the estimate by e shifts the log magnitude loss by exactly one") {
  rng::Stream s(14);
  const dsp::AudioBuffer ref = rand_audio(s, 1400, 0.3);
  dsp::AudioBuffer est = ref;
  for (double& v : est.samples) v *= std::exp(1.0);

  for (const Resolution& res : losses::canonical_multi_stft().resolutions) {
    dsp::StftConfig sc;
    sc.fft_size = res.fft_size;
    sc.hop_length = res.hop;
    sc.window_length = res.window_length;
    const Tensor mags = dsp::magnitude(dsp::stft(ref, sc));
    const double min_mag = *std::min_element(mags.data.begin(), mags.data.end());
    REQUIRE(min_mag > 1e-4);  // every bin well above the log floor, so the shift is uniform
    CHECK(losses::log_magnitude_loss(ref, est, res) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("spectral convergence and log magnitude match brute-force oracles on a random pair") {
  rng::Stream s(15);
  const dsp::AudioBuffer ref = rand_audio(s, 1500, 0.5);
  const dsp::AudioBuffer est = rand_audio(s, 1500, 0.5);
  const Resolution res{512, 50, 240};

  dsp::StftConfig sc;
  sc.fft_size = res.fft_size;
  sc.hop_length = res.hop;
  sc.window_length = res.window_length;
  const Tensor mr = dsp::magnitude(dsp::stft(ref, sc));
  const Tensor me = dsp::magnitude(dsp::stft(est, sc));

  double num = 0.0, den = 0.0, mag = 0.0;
  for (size_t j = 0; j < mr.data.size(); ++j) {
    num += (mr.data[j] - me.data[j]) * (mr.data[j] - me.data[j]);
    den += mr.data[j] * mr.data[j];
    mag += std::fabs(std::log(std::max(mr.data[j], 1e-5)) - std::log(std::max(me.data[j], 1e-5)));
  }
  CHECK(losses::spectral_convergence(ref, est, res) ==
        doctest::Approx(std::sqrt(num) / std::max(std::sqrt(den), 1e-8)).epsilon(1e-10));
  CHECK(losses::log_magnitude_loss(ref, est, res) == doctest::Approx(mag / mr.data.size()).epsilon(1e-10));
}

TEST_CASE("multi stft with one resolution reduces to that resolution's term sum") {
  rng::Stream s(16);
  const dsp::AudioBuffer ref = rand_audio(s, 1300, 0.5);
  const dsp::AudioBuffer est = rand_audio(s, 1300, 0.5);
  MultiStftConfig cfg;
  cfg.resolutions = {{1024, 120, 600}};
  const double expect =
      losses::spectral_convergence(ref, est, cfg.resolutions[0]) + losses::log_magnitude_loss(ref, est, cfg.resolutions[0]);
  CHECK(losses::multi_stft_loss(ref, est, cfg) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("multi stft across three resolutions equals the mean of independent per-resolution values") {
  rng::Stream s(17);
  const dsp::AudioBuffer ref = rand_audio(s, 2000, 0.5);
  const dsp::AudioBuffer est = rand_audio(s, 2000, 0.5);
  const MultiStftConfig cfg = losses::canonical_multi_stft();

  double acc = 0.0;
  for (const Resolution& r : cfg.resolutions)
    acc += losses::spectral_convergence(ref, est, r) + losses::log_magnitude_loss(ref, est, r);
  CHECK(losses::multi_stft_loss(ref, est, cfg) == doctest::Approx(acc / 3.0).epsilon(1e-12));
}

TEST_CASE("permuting the resolution list leaves multi stft bit-identical") {
  rng::Stream s(18);
  const dsp::AudioBuffer ref = rand_audio(s, 2000, 0.5);
  const dsp::AudioBuffer est = rand_audio(s, 2000, 0.5);

  MultiStftConfig cfg = losses::canonical_multi_stft();
  const double base = losses::multi_stft_loss(ref, est, cfg);

  std::vector<Resolution> rs = cfg.resolutions;
  std::rotate(rs.begin(), rs.begin() + 1, rs.end());
  MultiStftConfig rot = cfg;
  rot.resolutions = rs;
  CHECK(losses::multi_stft_loss(ref, est, rot) == base);

  MultiStftConfig rev = cfg;
  std::reverse(rev.resolutions.begin(), rev.resolutions.end());
  CHECK(losses::multi_stft_loss(ref, est, rev) == base);
}

TEST_CASE("graph multi stft matches the plain value and its gradient passes finite differences") {
  rng::Stream s(19);
  const dsp::AudioBuffer ref = rand_audio(s, 1300, 0.5);
  Tensor est({1300});
  for (double& v : est.data) v = s.uniform(-0.5, 0.5);
  const MultiStftConfig cfg = losses::canonical_multi_stft();

  Graph g;
  const auto v_est = g.param(est);
  const auto loss = losses::multi_stft_loss_graph(g, ref.samples, v_est, cfg);

  dsp::AudioBuffer est_buf;
  est_buf.samples = est.data;
  CHECK(g.val(loss).data[0] == doctest::Approx(losses::multi_stft_loss(ref, est_buf, cfg)).epsilon(1e-12));

  est.zero_grad();
  g.backward(loss);
  REQUIRE(est.grad.size() == est.data.size());

  // The plain loss equals the graph value to machine precision, so central
  // differences of the plain function are a valid oracle for the backward pass.
  rng::Stream pick(20);
  const double h = 1e-5;
  for (int probe = 0; probe < 40; ++probe) {
    const size_t j = pick.below(est.data.size());
    const double keep = est.data[j];
    est_buf.samples[j] = keep + h;
    const double up = losses::multi_stft_loss(ref, est_buf, cfg);
    est_buf.samples[j] = keep - h;
    const double dn = losses::multi_stft_loss(ref, est_buf, cfg);
    est_buf.samples[j] = keep;
    const double fd = (up - dn) / (2 * h);
    const double rel = std::fabs(est.grad[j] - fd) / std::max({std::fabs(est.grad[j]), std::fabs(fd), 1.0});
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("generator total combines the adversarial and spectral terms with the alpha weight") {
  rng::Stream s(21);
  const dsp::AudioBuffer ref = rand_audio(s, 1300, 0.5);
  const dsp::AudioBuffer est = rand_audio(s, 1300, 0.5);
  std::vector<Tensor> fake = {rand_scores(s, {1, 6}, -1, 1), rand_scores(s, {1, 17}, -1, 1)};

  MultiStftConfig cfg = losses::canonical_multi_stft();
  const double adv = losses::lsgan_generator_adv_loss(fake);
  const double mstft = losses::multi_stft_loss(ref, est, cfg);

  CHECK(losses::generator_total_loss(ref, est, fake, cfg) == doctest::Approx(adv + mstft).epsilon(1e-14));

  cfg.alpha = 0.0;
  CHECK(losses::generator_total_loss(ref, est, fake, cfg) == doctest::Approx(adv).epsilon(1e-14));

  cfg.alpha = 2.5;
  CHECK(losses::generator_total_loss(ref, est, fake, cfg) == doctest::Approx(adv + 2.5 * mstft).epsilon(1e-14));
}

TEST_CASE("losses stay non-negative on random inputs") {
  rng::Stream s(22);
  for (int trial = 0; trial < 5; ++trial) {
    const dsp::AudioBuffer ref = rand_audio(s, 1250, 0.7);
    const dsp::AudioBuffer est = rand_audio(s, 1250, 0.7);
    std::vector<Tensor> real = {rand_scores(s, {1, 8}, -3, 3)};
    std::vector<Tensor> fake = {rand_scores(s, {1, 8}, -3, 3)};
    CHECK(losses::lsgan_discriminator_loss(real, fake) >= 0.0);
    CHECK(losses::lsgan_generator_adv_loss(fake) >= 0.0);
    CHECK(losses::multi_stft_loss(ref, est, losses::canonical_multi_stft()) >= 0.0);
  }
}

TEST_CASE("silent reference engages the epsilon guard instead of dividing by zero") {
  dsp::AudioBuffer ref;
  ref.samples.assign(1300, 0.0);
  rng::Stream s(23);
  const dsp::AudioBuffer est = rand_audio(s, 1300, 0.5);
  const double sc = losses::spectral_convergence(ref, est, {1024, 120, 600});
  CHECK(std::isfinite(sc));
  CHECK(sc >= 0.0);
}

TEST_CASE("canonical configuration carries three resolutions and alpha one") {
  const MultiStftConfig cfg = losses::canonical_multi_stft();
  REQUIRE(cfg.resolutions.size() == 3);
  CHECK(cfg.alpha == 1.0);
  CHECK(cfg.resolutions[0].fft_size == 1024);
  CHECK(cfg.resolutions[0].hop == 120);
  CHECK(cfg.resolutions[0].window_length == 600);
  CHECK(cfg.resolutions[1].fft_size == 2048);
  CHECK(cfg.resolutions[1].hop == 240);
  CHECK(cfg.resolutions[1].window_length == 1200);
  CHECK(cfg.resolutions[2].fft_size == 512);
  CHECK(cfg.resolutions[2].hop == 50);
  CHECK(cfg.resolutions[2].window_length == 240);
}

TEST_CASE("losses reject mismatched operands and invalid configuration") {
  rng::Stream s(24);
  const dsp::AudioBuffer a = rand_audio(s, 1300, 0.5);
  const dsp::AudioBuffer b = rand_audio(s, 1400, 0.5);
  CHECK_THROWS_AS(losses::spectral_convergence(a, b, {1024, 120, 600}), Error);
  CHECK_THROWS_AS(losses::log_magnitude_loss(a, b, {1024, 120, 600}), Error);

  MultiStftConfig empty;
  CHECK_THROWS_AS(losses::multi_stft_loss(a, a, empty), Error);

  MultiStftConfig neg = losses::canonical_multi_stft();
  neg.alpha = -0.5;
  CHECK_THROWS_AS(losses::multi_stft_loss(a, a, neg), Error);

  const dsp::AudioBuffer tiny = rand_audio(s, 1100, 0.5);  // shorter than the 1200-sample window
  CHECK_THROWS_AS(losses::multi_stft_loss(tiny, tiny, losses::canonical_multi_stft()), Error);

  std::vector<Tensor> one = {filled({1, 4}, 0.5)};
  std::vector<Tensor> two = {filled({1, 4}, 0.5), filled({1, 4}, 0.5)};
  CHECK_THROWS_AS(losses::lsgan_discriminator_loss(one, two), Error);
  CHECK_THROWS_AS(losses::lsgan_discriminator_loss({}, {}), Error);
  CHECK_THROWS_AS(losses::lsgan_generator_adv_loss({}), Error);
}

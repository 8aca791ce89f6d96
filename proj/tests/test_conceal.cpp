#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "plaae/conceal.hpp"
#include "plaae/dsp.hpp"
#include "plaae/error.hpp"
#include "plaae/model.hpp"
#include "plaae/packetsim.hpp"
#include "plaae/rng.hpp"

using namespace plaae;
using conceal::SpliceConfig;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

dsp::AudioBuffer rand_audio(rng::Stream& s, int n) {
  dsp::AudioBuffer a;
  a.samples.resize(static_cast<size_t>(n));
  for (double& v : a.samples) v = s.uniform(-0.8, 0.8);
  return a;
}

packetsim::LossMask mask_of(int packets, int packet_length, const std::vector<int>& lost) {
  packetsim::LossMask m;
  m.packet_length = packet_length;
  m.bits.assign(static_cast<size_t>(packets), false);
  for (int i : lost) m.bits[static_cast<size_t>(i)] = true;
  return m;
}

// Small geometry for fast end-to-end runs: hop 4, packets of 8 samples.
model::ModelConfig tiny_config() {
  model::ModelConfig cfg;
  cfg.encoder = {3, 3, 3, 5, 8, 6};
  cfg.decoder.strides = {2, 2};
  cfg.decoder.residual_layers_per_block = {1, 1};
  cfg.decoder.residual_channels = 4;
  cfg.discriminator.kernels = {3};
  cfg.discriminator.strides = {1};
  cfg.discriminator.channels = {2};
  cfg.discriminator.pool_factors = {1};
  cfg.frontend.n_mels = 4;
  cfg.frontend.hop = 4;
  cfg.frontend.window = 8;
  cfg.frontend.fft_size = 16;
  return cfg;
}

SpliceConfig tiny_splice() {
  SpliceConfig cfg;
  cfg.fade_length = 4;
  cfg.extra_frames = 2;
  cfg.phase_search_window = 4;
  return cfg;
}

int brute_force_shift(const std::vector<double>& pred, const std::vector<double>& anchor,
                      int window) {
  const int n = static_cast<int>(anchor.size());
  double ea = 0.0;
  for (double v : anchor) ea += v * v;
  if (ea < 1e-10) return 0;
  int best = 0;
  double best_score = -2.0;
  for (int s = 0; s < window && s + n <= static_cast<int>(pred.size()); ++s) {
    double dot = 0.0, ep = 0.0;
    for (int i = 0; i < n; ++i) {
      dot += anchor[static_cast<size_t>(i)] * pred[static_cast<size_t>(s + i)];
      ep += pred[static_cast<size_t>(s + i)] * pred[static_cast<size_t>(s + i)];
    }
    if (ep < 1e-10) continue;
    const double score = dot / std::sqrt(ea * ep);
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("an all-clear mask returns the input bit-exactly") {
  const model::ModelConfig mc = tiny_config();
  rng::Stream init(11);
  const model::PlaaeModel m = model::build_model(mc, init);
  rng::Stream s(1);
  const dsp::AudioBuffer audio = rand_audio(s, 400);
  const packetsim::LossMask mask = mask_of(50, 8, {});

  conceal::GapStats stats;
  const dsp::AudioBuffer out = conceal::conceal_stream(audio, mask, m, tiny_splice(), &stats);
  CHECK(same_bits(out.samples, audio.samples));
  CHECK(stats.gap_count == 0);
  CHECK(stats.lost_packets == 0);
  CHECK(stats.concealed_samples == 0);
  CHECK_FALSE(stats.short_history);
}

TEST_CASE("a fully lost signal is the model prediction end to end") {
  const model::ModelConfig mc = tiny_config();
  rng::Stream init(11);
  const model::PlaaeModel m = model::build_model(mc, init);
  rng::Stream s(2);
  const dsp::AudioBuffer audio = rand_audio(s, 400);
  std::vector<int> all;
  for (int i = 0; i < 50; ++i) all.push_back(i);
  const packetsim::LossMask mask = mask_of(50, 8, all);

  conceal::GapStats stats;
  const dsp::AudioBuffer out = conceal::conceal_stream(audio, mask, m, tiny_splice(), &stats);
  const dsp::AudioBuffer lossy = packetsim::apply_mask(audio, mask).lossy;
  const dsp::AudioBuffer pred = model::conceal_forward(m, lossy, mask);
  REQUIRE(out.length() == 400);
  REQUIRE(pred.length() == 400);
  CHECK(same_bits(out.samples, pred.samples));
  CHECK(stats.gap_count == 1);
  CHECK(stats.short_history);
  REQUIRE(stats.shifts.size() == 1);
  CHECK(stats.shifts[0] == 0);
}

TEST_CASE("a single gap touches exactly the gap and its fades") {
  const model::ModelConfig mc = tiny_config();
  rng::Stream init(11);
  const model::PlaaeModel m = model::build_model(mc, init);
  rng::Stream s(3);
  const int L = 8, packets = 50, len = L * packets;
  const dsp::AudioBuffer clean = rand_audio(s, len);
  // Six consecutive packets lost, mirroring the longest burst class.
  const packetsim::LossMask mask = mask_of(packets, L, {20, 21, 22, 23, 24, 25});
  const dsp::AudioBuffer received = packetsim::apply_mask(clean, mask).lossy;

  const SpliceConfig cfg = tiny_splice();
  conceal::GapStats stats;
  const dsp::AudioBuffer out = conceal::conceal_stream(received, mask, m, cfg, &stats);
  REQUIRE(out.length() == len);

  const int gap_start = 20 * L, gap_end = 26 * L;
  int in_gap_diffs = 0;
  for (int t = 0; t < len; ++t) {
    const bool touched = t >= gap_start - cfg.fade_length && t < gap_end + cfg.fade_length;
    if (!touched) {
      CHECK(out.samples[static_cast<size_t>(t)] == received.samples[static_cast<size_t>(t)]);
    } else if (t >= gap_start && t < gap_end) {
      in_gap_diffs += out.samples[static_cast<size_t>(t)] != received.samples[static_cast<size_t>(t)];
    }
  }
  // The received gap is silence; the model's fill is generically nonzero.
  CHECK(in_gap_diffs > (gap_end - gap_start) * 9 / 10);
  CHECK(stats.gap_count == 1);
  CHECK(stats.lost_packets == 6);
  CHECK(stats.concealed_samples <= (gap_end - gap_start) + 2 * cfg.fade_length);
  CHECK(stats.concealed_samples >= gap_end - gap_start);
}

TEST_CASE("fifty random masks stay bit-exact outside gap and fade regions") {
  const model::ModelConfig mc = tiny_config();
  rng::Stream init(11);
  const model::PlaaeModel m = model::build_model(mc, init);
  const SpliceConfig cfg = tiny_splice();
  rng::Stream s(99);

  for (int trial = 0; trial < 50; ++trial) {
    const int packets = 20 + static_cast<int>(s.below(30));
    const int len = packets * 8 + static_cast<int>(s.below(8));
    const dsp::AudioBuffer clean = rand_audio(s, len);
    packetsim::LossProtocol proto;
    proto.drop_probability = 0.2;
    proto.gap_length_packets = 1 + static_cast<int>(s.below(3));
    proto.seed = s.next_u64();
    const packetsim::LossMask mask = packetsim::inject_losses(packets, proto);
    packetsim::LossMask sized = mask;
    sized.packet_length = 8;
    const dsp::AudioBuffer received = packetsim::apply_mask(clean, sized).lossy;

    const dsp::AudioBuffer out = conceal::conceal_stream(received, sized, m, cfg, nullptr);
    REQUIRE(out.length() == len);

    std::vector<bool> touchable(static_cast<size_t>(len), false);
    for (int p = 0; p < packets; ++p) {
      if (!sized.bits[static_cast<size_t>(p)]) continue;
      const int a = std::max(0, p * 8 - cfg.fade_length);
      const int b = std::min(len, (p + 1) * 8 + cfg.fade_length);
      for (int t = a; t < b; ++t) touchable[static_cast<size_t>(t)] = true;
    }
    for (int t = 0; t < len; ++t)
      if (!touchable[static_cast<size_t>(t)])
        REQUIRE(out.samples[static_cast<size_t>(t)] == received.samples[static_cast<size_t>(t)]);
  }
}

TEST_CASE("concealment is deterministic for a fixed model, mask, and signal") {
  const model::ModelConfig mc = tiny_config();
  rng::Stream init(11);
  const model::PlaaeModel m = model::build_model(mc, init);
  rng::Stream s(5);
  const dsp::AudioBuffer audio = rand_audio(s, 320);
  const packetsim::LossMask mask = mask_of(40, 8, {7, 8, 20});

  const dsp::AudioBuffer a = conceal::conceal_stream(audio, mask, m, tiny_splice(), nullptr);
  const dsp::AudioBuffer b = conceal::conceal_stream(audio, mask, m, tiny_splice(), nullptr);
  CHECK(same_bits(a.samples, b.samples));
}

TEST_CASE("a prediction that continues the anchor aligns with shift zero") {
  std::vector<double> anchor(32), pred(64);
  for (int i = 0; i < 32; ++i) anchor[static_cast<size_t>(i)] = std::sin(0.3 * i) + 0.1;
  for (int i = 0; i < 64; ++i) pred[static_cast<size_t>(i)] = std::sin(0.3 * i) + 0.1;
  CHECK(conceal::phase_align(pred, anchor, 16) == 0);
}

TEST_CASE("a sinusoid delayed by seven samples is recovered exactly") {
  // 200 Hz at 16 kHz: one period is 80 samples, so a window under 80 has a
  // unique correlation peak.
  const double w = 2.0 * 3.14159265358979323846 * 200.0 / 16000.0;
  std::vector<double> anchor(160), pred(400);
  for (int i = 0; i < 160; ++i) anchor[static_cast<size_t>(i)] = std::sin(w * i);
  for (int i = 0; i < 400; ++i) pred[static_cast<size_t>(i)] = std::sin(w * (i - 7));
  CHECK(conceal::phase_align(pred, anchor, 79) == 7);
  CHECK(brute_force_shift(pred, anchor, 79) == 7);
}

TEST_CASE("silent anchors and silent predictions pin the shift at zero") {
  const std::vector<double> zeros(64, 0.0);
  std::vector<double> tone(64);
  for (int i = 0; i < 64; ++i) tone[static_cast<size_t>(i)] = std::sin(0.2 * i);
  CHECK(conceal::phase_align(tone, zeros, 16) == 0);
  CHECK(conceal::phase_align(zeros, tone, 16) == 0);
  const std::vector<double> faint(64, 1e-8);
  CHECK(conceal::phase_align(tone, faint, 16) == 0);
}

TEST_CASE("phase alignment matches an exhaustive correlation scan") {
  rng::Stream s(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 16 + static_cast<int>(s.below(48));
    const int window = 8 + static_cast<int>(s.below(40));
    std::vector<double> anchor(static_cast<size_t>(n)), pred(static_cast<size_t>(n + window + 16));
    for (double& v : anchor) v = s.uniform(-1.0, 1.0);
    for (double& v : pred) v = s.uniform(-1.0, 1.0);
    CHECK(conceal::phase_align(pred, anchor, window) == brute_force_shift(pred, anchor, window));
  }
}

TEST_CASE("the cross fade ramp is linear and hits both endpoints") {
  const std::vector<double> ones(4, 1.0), zeros(4, 0.0);
  const std::vector<double> out = conceal::cross_fade(ones, zeros, 4);
  REQUIRE(out.size() == 4);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(out[3] == 0.0);

  rng::Stream s(7);
  std::vector<double> seg(16);
  for (double& v : seg) v = s.uniform(-1.0, 1.0);
  const std::vector<double> same = conceal::cross_fade(seg, seg, 16);
  for (size_t i = 0; i < seg.size(); ++i)
    CHECK(same[i] == doctest::Approx(seg[i]).epsilon(1e-14));

  CHECK_THROWS_AS(conceal::cross_fade(ones, zeros, 1), Error);
  CHECK_THROWS_AS(conceal::cross_fade(ones, std::vector<double>(3, 0.0), 4), Error);
  CHECK_THROWS_AS(conceal::cross_fade(ones, zeros, 3), Error);
}

TEST_CASE("faded output jumps are bounded by the segment jumps plus the gap term") {
  rng::Stream s(13);
  for (int trial = 0; trial < 25; ++trial) {
    const int fade = 4 + static_cast<int>(s.below(60));
    std::vector<double> real(static_cast<size_t>(fade)), pred(static_cast<size_t>(fade));
    for (double& v : real) v = s.uniform(-1.0, 1.0);
    for (double& v : pred) v = s.uniform(-1.0, 1.0);
    const std::vector<double> out = conceal::cross_fade(real, pred, fade);

    double max_jump = 0.0, max_gap = 0.0;
    for (int n = 1; n < fade; ++n) {
      max_jump = std::max(max_jump, std::abs(real[static_cast<size_t>(n)] - real[static_cast<size_t>(n - 1)]));
      max_jump = std::max(max_jump, std::abs(pred[static_cast<size_t>(n)] - pred[static_cast<size_t>(n - 1)]));
    }
    for (int n = 0; n < fade; ++n)
      max_gap = std::max(max_gap, std::abs(real[static_cast<size_t>(n)] - pred[static_cast<size_t>(n)]));
    const double bound = max_jump + max_gap / (fade - 1.0) + 1e-12;
    for (int n = 1; n < fade; ++n)
      CHECK(std::abs(out[static_cast<size_t>(n)] - out[static_cast<size_t>(n - 1)]) <= bound);
  }
}

TEST_CASE("zero fill equals the simulator's masked output") {
  rng::Stream s(21);
  const dsp::AudioBuffer audio = rand_audio(s, 3210);
  packetsim::LossMask mask = mask_of(10, 320, {2, 3, 7});

  const dsp::AudioBuffer filled = conceal::baseline_zero_fill(audio, mask);
  const dsp::AudioBuffer masked = packetsim::apply_mask(audio, mask).lossy;
  CHECK(same_bits(filled.samples, masked.samples));

  const packetsim::LossMask clear = mask_of(10, 320, {});
  CHECK(same_bits(conceal::baseline_zero_fill(audio, clear).samples, audio.samples));

  std::vector<int> all;
  for (int i = 0; i < 10; ++i) all.push_back(i);
  const dsp::AudioBuffer silent = conceal::baseline_zero_fill(audio, mask_of(10, 320, all));
  for (int t = 0; t < 3200; ++t) CHECK(silent.samples[static_cast<size_t>(t)] == 0.0);
}

TEST_CASE("frame repeat replays the last received packet cyclically") {
  rng::Stream s(22);
  const int L = 320;
  const dsp::AudioBuffer audio = rand_audio(s, L * 12);
  const packetsim::LossMask mask = mask_of(12, L, {5, 6});

  const dsp::AudioBuffer out = conceal::baseline_repeat_frame(audio, mask);
  REQUIRE(out.length() == audio.length());
  // Both lost packets replay packet 4 verbatim.
  for (int k = 0; k < L; ++k) {
    CHECK(out.samples[static_cast<size_t>(5 * L + k)] == audio.samples[static_cast<size_t>(4 * L + k)]);
    CHECK(out.samples[static_cast<size_t>(6 * L + k)] == audio.samples[static_cast<size_t>(4 * L + k)]);
  }
  // Untouched away from the gap and its fades.
  for (int t = 0; t < 5 * L - 80; ++t)
    CHECK(out.samples[static_cast<size_t>(t)] == audio.samples[static_cast<size_t>(t)]);
  for (int t = 7 * L + 80; t < audio.length(); ++t)
    CHECK(out.samples[static_cast<size_t>(t)] == audio.samples[static_cast<size_t>(t)]);
}

TEST_CASE("frame repeat is near-perfect on a packet-periodic signal") {
  const int L = 320;
  dsp::AudioBuffer audio;
  audio.samples.resize(static_cast<size_t>(L * 10));
  for (int t = 0; t < audio.length(); ++t)
    audio.samples[static_cast<size_t>(t)] = std::sin(2.0 * 3.14159265358979323846 * (t % L) / L);
  const packetsim::LossMask mask = mask_of(10, L, {4, 5, 6});

  const dsp::AudioBuffer out = conceal::baseline_repeat_frame(audio, mask);
  for (int t = 0; t < audio.length(); ++t)
    CHECK(out.samples[static_cast<size_t>(t)] ==
          doctest::Approx(audio.samples[static_cast<size_t>(t)]).epsilon(1e-12));
}

TEST_CASE("a leading gap with no history stays silent under frame repeat") {
  rng::Stream s(23);
  const dsp::AudioBuffer audio = rand_audio(s, 320 * 6);
  const packetsim::LossMask mask = mask_of(6, 320, {0, 1});

  const dsp::AudioBuffer out = conceal::baseline_repeat_frame(audio, mask);
  for (int t = 0; t < 2 * 320; ++t) CHECK(out.samples[static_cast<size_t>(t)] == 0.0);
  for (int t = 2 * 320 + 80; t < audio.length(); ++t)
    CHECK(out.samples[static_cast<size_t>(t)] == audio.samples[static_cast<size_t>(t)]);
}

TEST_CASE("splice configs and mismatched masks are rejected") {
  SpliceConfig bad = tiny_splice();
  bad.fade_length = 1;
  CHECK_THROWS_AS(conceal::validate(bad, 8, 4), Error);
  bad = tiny_splice();
  bad.fade_length = 9;
  CHECK_THROWS_AS(conceal::validate(bad, 8, 4), Error);
  bad = tiny_splice();
  bad.extra_frames = 0;
  CHECK_THROWS_AS(conceal::validate(bad, 8, 4), Error);
  bad = tiny_splice();
  bad.phase_search_window = -1;
  CHECK_THROWS_AS(conceal::validate(bad, 8, 4), Error);
  CHECK_NOTHROW(conceal::validate(SpliceConfig{}, 320, 160));

  const model::ModelConfig mc = tiny_config();
  rng::Stream init(11);
  const model::PlaaeModel m = model::build_model(mc, init);
  rng::Stream s(1);
  const dsp::AudioBuffer audio = rand_audio(s, 400);
  const packetsim::LossMask wrong = mask_of(10, 8, {});
  CHECK_THROWS_AS(conceal::conceal_stream(audio, wrong, m, tiny_splice(), nullptr), Error);
  try {
    conceal::conceal_stream(audio, wrong, m, tiny_splice(), nullptr);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::length);
  }
}

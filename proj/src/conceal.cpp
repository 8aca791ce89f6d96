#include "plaae/conceal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "plaae/error.hpp"

namespace plaae::conceal {

namespace {

constexpr double kSilentEnergy = 1e-10;

struct Run {
  int first = 0;  // first lost packet
  int last = 0;   // one past the last lost packet
};

std::vector<Run> lost_runs(const packetsim::LossMask& mask) {
  std::vector<Run> runs;
  const int n = mask.packet_count();
  int i = 0;
  while (i < n) {
    if (!mask.bits[static_cast<size_t>(i)]) {
      ++i;
      continue;
    }
    Run r{i, i};
    while (r.last < n && mask.bits[static_cast<size_t>(r.last)]) ++r.last;
    runs.push_back(r);
    i = r.last;
  }
  return runs;
}

void check_mask_fits(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask) {
  const int expect = packetsim::packetize(audio.length(), mask.packet_length);
  if (mask.packet_count() != expect)
    raise(ErrorKind::length,
          "mask holds " + std::to_string(mask.packet_count()) + " packets, audio of " +
              std::to_string(audio.length()) + " samples packetizes to " + std::to_string(expect));
}

}  // namespace

void validate(const SpliceConfig& cfg, int packet_length, int hop) {
  if (cfg.fade_length < 2 || cfg.fade_length > packet_length)
    raise(ErrorKind::config, "fade_length must lie in [2, packet_length]");
  if (cfg.extra_frames < 1 || cfg.extra_frames * hop < cfg.fade_length)
    raise(ErrorKind::config, "extra_frames * hop must cover fade_length");
  if (cfg.phase_search_window < 0)
    raise(ErrorKind::config, "phase_search_window must be non-negative");
}

int phase_align(const std::vector<double>& prediction, const std::vector<double>& last_real,
                int search_window) {
  const int n = static_cast<int>(last_real.size());
  if (n == 0 || search_window <= 0) return 0;

  double real_energy = 0.0;
  for (double v : last_real) real_energy += v * v;
  if (real_energy < kSilentEnergy) return 0;

  int best = 0;
  double best_score = -2.0;  // below any reachable correlation
  for (int s = 0; s < search_window; ++s) {
    if (s + n > static_cast<int>(prediction.size())) break;
    double dot = 0.0, pred_energy = 0.0;
    for (int i = 0; i < n; ++i) {
      const double p = prediction[static_cast<size_t>(s + i)];
      dot += last_real[static_cast<size_t>(i)] * p;
      pred_energy += p * p;
    }
    if (pred_energy < kSilentEnergy) continue;
    const double score = dot / std::sqrt(real_energy * pred_energy);
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  }
  return best;
}

std::vector<double> cross_fade(const std::vector<double>& from_segment,
                               const std::vector<double>& to_segment, int fade_length) {
  if (fade_length < 2) raise(ErrorKind::config, "fade_length must be at least 2");
  if (from_segment.size() != to_segment.size())
    raise(ErrorKind::length, "cross_fade segments must be equal length");
  if (static_cast<int>(from_segment.size()) > fade_length)
    raise(ErrorKind::length, "cross_fade segments longer than the fade");

  std::vector<double> out(from_segment.size());
  const double denom = static_cast<double>(fade_length - 1);
  for (size_t i = 0; i < out.size(); ++i) {
    const double w = static_cast<double>(i) / denom;
    out[i] = (1.0 - w) * from_segment[i] + w * to_segment[i];
  }
  return out;
}

dsp::AudioBuffer conceal_stream(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask,
                                const model::PlaaeModel& m, const SpliceConfig& cfg,
                                GapStats* stats) {
  const int L = mask.packet_length;
  const int hop = m.cfg.frontend.hop;
  validate(cfg, L, hop);
  check_mask_fits(audio, mask);

  GapStats local;
  const std::vector<Run> runs = lost_runs(mask);
  local.gap_count = static_cast<int>(runs.size());
  local.lost_packets = mask.loss_count();
  local.short_history = !runs.empty() && runs.front().first == 0;

  if (runs.empty()) {
    if (stats) *stats = local;
    return audio;
  }

  // The model always sees the canonical zero-filled stream, so whatever the
  // caller's buffer holds inside lost packets cannot leak into the output.
  const dsp::AudioBuffer lossy = packetsim::apply_mask(audio, mask).lossy;
  const dsp::AudioBuffer pred = model::conceal_forward(m, lossy, mask);
  const int len = audio.length();
  const int pred_len = pred.length();
  const auto pred_at = [&](int i) {
    return (i >= 0 && i < pred_len) ? pred.samples[static_cast<size_t>(i)] : 0.0;
  };

  dsp::AudioBuffer out = audio;
  const int fade = cfg.fade_length;
  int claimed = 0;  // first index the next onset fade may write

  for (const Run& run : runs) {
    const int gap_start = run.first * L;
    const int gap_end = std::min(run.last * L, len);

    int shift = 0;
    if (run.first > 0 && cfg.phase_search_window > 0 && gap_start >= hop) {
      const int hist_start = gap_start - hop;
      const std::vector<double> last_real(out.samples.begin() + hist_start,
                                          out.samples.begin() + gap_start);
      const int seg_end = std::min(pred_len, gap_start + cfg.phase_search_window);
      std::vector<double> pred_seg;
      for (int t = hist_start; t < seg_end; ++t) pred_seg.push_back(pred_at(t));
      shift = phase_align(pred_seg, last_real, cfg.phase_search_window);
    }
    local.shifts.push_back(shift);

    for (int t = gap_start; t < gap_end; ++t)
      out.samples[static_cast<size_t>(t)] = pred_at(t + shift);
    local.concealed_samples += gap_end - gap_start;

    if (run.first > 0) {
      const int onset = gap_start - fade;  // non-negative: fade <= L <= gap_start
      std::vector<double> from(audio.samples.begin() + onset, audio.samples.begin() + gap_start);
      std::vector<double> to;
      for (int t = onset; t < gap_start; ++t) to.push_back(pred_at(t + shift));
      const std::vector<double> blended = cross_fade(from, to, fade);
      // A closing fade from the previous gap keeps any samples it already
      // wrote; the ramp position still counts from the nominal fade start.
      for (int t = std::max(onset, claimed); t < gap_start; ++t) {
        out.samples[static_cast<size_t>(t)] = blended[static_cast<size_t>(t - onset)];
        local.concealed_samples += 1;
      }
    }

    if (gap_end < len) {
      const int tail = std::min(fade, len - gap_end);
      std::vector<double> from, to;
      for (int t = gap_end; t < gap_end + tail; ++t) from.push_back(pred_at(t + shift));
      to.assign(audio.samples.begin() + gap_end, audio.samples.begin() + gap_end + tail);
      const std::vector<double> blended = cross_fade(from, to, fade);
      for (int t = gap_end; t < gap_end + tail; ++t)
        out.samples[static_cast<size_t>(t)] = blended[static_cast<size_t>(t - gap_end)];
      local.concealed_samples += tail;
      claimed = gap_end + tail;
    } else {
      claimed = gap_end;
    }
  }

  if (stats) *stats = std::move(local);
  return out;
}

dsp::AudioBuffer baseline_zero_fill(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask) {
  check_mask_fits(audio, mask);
  return packetsim::apply_mask(audio, mask).lossy;
}

dsp::AudioBuffer baseline_repeat_frame(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask,
                                       const SpliceConfig& cfg) {
  const int L = mask.packet_length;
  if (cfg.fade_length < 2 || cfg.fade_length > L)
    raise(ErrorKind::config, "fade_length must lie in [2, packet_length]");
  check_mask_fits(audio, mask);

  dsp::AudioBuffer out = audio;
  const int len = audio.length();
  const int fade = cfg.fade_length;
  int claimed = 0;

  for (const Run& run : lost_runs(mask)) {
    const int gap_start = run.first * L;
    const int gap_end = std::min(run.last * L, len);

    // The fill replays the last received packet, extended cyclically in both
    // directions so the onset fade sees the signal it is already playing. A
    // leading gap has nothing to replay and stays silent.
    const bool has_history = run.first > 0;
    const int pack_start = has_history ? (run.first - 1) * L : 0;
    const auto fill_at = [&](int t) {
      if (!has_history) return 0.0;
      int k = (t - gap_start) % L;
      if (k < 0) k += L;
      return audio.samples[static_cast<size_t>(pack_start + k)];
    };

    for (int t = gap_start; t < gap_end; ++t) out.samples[static_cast<size_t>(t)] = fill_at(t);

    if (has_history) {
      const int onset = std::max({gap_start - fade, 0, claimed});
      for (int t = onset; t < gap_start; ++t) {
        const double w = static_cast<double>(t - (gap_start - fade)) / (fade - 1.0);
        out.samples[static_cast<size_t>(t)] =
            (1.0 - w) * audio.samples[static_cast<size_t>(t)] + w * fill_at(t);
      }
    }

    if (gap_end < len) {
      const int tail = std::min(fade, len - gap_end);
      for (int t = gap_end; t < gap_end + tail; ++t) {
        const double w = static_cast<double>(t - gap_end) / (fade - 1.0);
        out.samples[static_cast<size_t>(t)] =
            (1.0 - w) * fill_at(t) + w * audio.samples[static_cast<size_t>(t)];
      }
      claimed = gap_end + tail;
    } else {
      claimed = gap_end;
    }
  }
  return out;
}

}  // namespace plaae::conceal

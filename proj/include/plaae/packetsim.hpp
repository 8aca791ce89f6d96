#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plaae/dsp.hpp"

namespace plaae::packetsim {

// Per-packet loss pattern. 320 samples = one 20 ms packet at 16 kHz.
struct LossMask {
  std::vector<bool> bits;  // true = lost
  int packet_length = 320;

  int packet_count() const { return static_cast<int>(bits.size()); }
  int loss_count() const;
};

struct LossProtocol {
  double drop_probability = 0.1;
  int gap_length_packets = 1;  // 1, 2, 3, or 6 packets = 20, 40, 60, 120 ms
  uint64_t seed = 0;
};

// floor(len / L); a trailing remainder shorter than one packet is never dropped.
int packetize(int n_samples, int packet_length);

// Left-to-right scan. A gap may start at packet i only when packet i-1 is not
// lost (so independent loss events never adjoin); an eligible packet starts a
// gap with probability drop_probability. A gap that would run past the last
// packet is skipped. Deterministic for a fixed seed.
LossMask inject_losses(int packet_count, const LossProtocol& protocol);

struct MaskedAudio {
  dsp::AudioBuffer lossy;      // lost packets zero-filled, kept samples untouched
  std::vector<double> flags;   // one per analysis frame, 1.0 = window overlaps a loss
};

// Flags follow the default analysis layout: frame t covers [t*160, t*160+320).
MaskedAudio apply_mask(const dsp::AudioBuffer& audio, const LossMask& mask);

// flag[t] = 1 iff [t*hop + offset, t*hop + offset + window) intersects any lost
// packet. offset lets a shifted analysis front-end reuse the same rule.
std::vector<double> flag_frames(const LossMask& mask, int n_frames, int window, int hop, int offset);

// Run-length text for sidecars: "<count>k" kept / "<count>l" lost, e.g. "12k2l36k".
std::string mask_to_rle(const LossMask& mask);
LossMask mask_from_rle(const std::string& rle, int packet_length);

std::string mask_sidecar_json(const LossMask& mask, const LossProtocol& protocol);
LossMask mask_from_sidecar_json(const std::string& text, LossProtocol* protocol_out = nullptr);

// One evaluation scenario: 1 s of received history and the 120 ms that follow.
struct Scenario {
  std::string utterance_id;
  int start = 0;  // sample offset of the past segment within the utterance
  std::vector<double> past;
  std::vector<double> future;
};

// One seeded scenario per utterance; utterances shorter than 1.12 s are skipped.
std::vector<Scenario> make_prediction_scenarios(
    const std::vector<std::pair<std::string, dsp::AudioBuffer>>& corpus, uint64_t seed);

}  // namespace plaae::packetsim

#pragma once

#include <vector>

#include "plaae/dsp.hpp"
#include "plaae/model.hpp"
#include "plaae/packetsim.hpp"

namespace plaae::conceal {

// Splicing parameters. The canonical fade covers a quarter packet; the model
// keeps predicting for extra_frames past each gap so the closing fade has
// synthetic material to blend out of.
struct SpliceConfig {
  int fade_length = 80;
  int extra_frames = 2;
  int phase_search_window = 160;
};

// Config errors: fade_length in [2, packet_length], extra_frames * hop must
// cover fade_length, phase_search_window non-negative.
void validate(const SpliceConfig& cfg, int packet_length, int hop);

// Shift in [0, search_window) maximizing the normalized cross-correlation of
// last_real against prediction[shift .. shift + |last_real|). Ties take the
// smallest shift. Near-silent last_real (energy < 1e-10) pins the shift to 0,
// as do candidates whose prediction window is near-silent.
int phase_align(const std::vector<double>& prediction, const std::vector<double>& last_real,
                int search_window);

// Linear blend from the first segment into the second with weights
// w[n] = n / (fade_length - 1): out[n] = (1-w)*from[n] + w*to[n]. Segments
// must be equal length and no longer than fade_length; a shorter pair keeps
// the same ramp and simply stops early (a fade truncated at signal end).
std::vector<double> cross_fade(const std::vector<double>& from_segment,
                               const std::vector<double>& to_segment, int fade_length);

struct GapStats {
  int gap_count = 0;
  int lost_packets = 0;
  int concealed_samples = 0;     // gap bodies plus every faded sample
  std::vector<int> shifts;       // phase shift chosen per gap, in order
  bool short_history = false;    // first gap opens the stream: no real anchor
};

// Full pipeline: one model pass over the zero-filled stream, then per maximal
// lost run a phase-aligned splice with onset and closing fades. Samples
// outside gap and fade regions are bit-identical to the input; length is
// preserved. Earlier fades win where a closing fade and the next onset fade
// would overlap.
dsp::AudioBuffer conceal_stream(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask,
                                const model::PlaaeModel& m, const SpliceConfig& cfg,
                                GapStats* stats = nullptr);

// Lost packets stay zero: the reconstruction floor.
dsp::AudioBuffer baseline_zero_fill(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask);

// Each gap replays the last received packet cyclically, faded at both edges.
// A gap with no history is left as silence.
dsp::AudioBuffer baseline_repeat_frame(const dsp::AudioBuffer& audio, const packetsim::LossMask& mask,
                                       const SpliceConfig& cfg = SpliceConfig{});

}  // namespace plaae::conceal

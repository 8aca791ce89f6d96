#pragma once

#include <vector>

#include "plaae/tensor.hpp"

namespace plaae::dsp {

struct AudioBuffer {
  std::vector<double> samples;  // [-1, 1]
  int sample_rate = 16000;

  int length() const { return static_cast<int>(samples.size()); }
};

struct StftConfig {
  int fft_size = 1024;
  int window_length = 320;  // 20 ms at 16 kHz
  int hop_length = 160;     // 50% overlap
};

struct MelConfig {
  int n_mels = 80;
  double f_min = 0.0;
  double f_max = 8000.0;
  StftConfig stft;
};

// Complex spectrogram, bin-major: re[k·n_frames + f]. Frame f covers samples
// [f·hop, f·hop + window); no centering, the feature stream stays causal.
struct Spectrogram {
  int n_bins = 0;
  int n_frames = 0;
  std::vector<double> re, im;
};

// Periodic Hann: w[n] = 0.5 - 0.5·cos(2πn/L), so w[0] = 0 and w[L/2] = 1.
std::vector<double> hann_window(int length);

int stft_frames(int n_samples, const StftConfig& cfg);  // floor((len-win)/hop)+1
Spectrogram stft(const AudioBuffer& audio, const StftConfig& cfg);

Tensor magnitude(const Spectrogram& spec);

// Rows are unnormalized triangles on the mel scale 2595·log10(1 + f/700),
// shape [n_mels x fft/2+1].
Tensor mel_filterbank(const MelConfig& cfg, int sample_rate);

// log(mel power + 1e-5), shape [n_mels x frames].
Tensor mel_spectrogram(const AudioBuffer& audio, const MelConfig& cfg);

// Non-overlapping block means; a tail shorter than factor is dropped.
AudioBuffer average_pool_resample(const AudioBuffer& audio, int factor);

}  // namespace plaae::dsp

#include "plaae/dsp.hpp"

#include <cmath>
#include <complex>

#include "plaae/error.hpp"
#include "plaae/fft.hpp"
#include "plaae/kernels.hpp"

namespace plaae::dsp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLogFloor = 1e-5;

void check_stft_config(const StftConfig& cfg) {
  if (cfg.hop_length < 1) raise(ErrorKind::config, "hop_length must be >= 1");
  if (cfg.window_length < 1) raise(ErrorKind::config, "window_length must be >= 1");
  if (cfg.window_length > cfg.fft_size)
    raise(ErrorKind::config, "window_length " + std::to_string(cfg.window_length) + " exceeds fft_size " + std::to_string(cfg.fft_size));
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

std::vector<double> hann_window(int length) {
  if (length < 1) raise(ErrorKind::config, "window length must be >= 1");
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n) w[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / length);
  return w;
}

int stft_frames(int n_samples, const StftConfig& cfg) {
  check_stft_config(cfg);
  if (n_samples < cfg.window_length)
    raise(ErrorKind::length, "signal length " + std::to_string(n_samples) + " shorter than analysis window " +
                                 std::to_string(cfg.window_length));
  return (n_samples - cfg.window_length) / cfg.hop_length + 1;
}

Spectrogram stft(const AudioBuffer& audio, const StftConfig& cfg) {
  const int frames = stft_frames(audio.length(), cfg);
  const int bins = cfg.fft_size / 2 + 1;
  const std::vector<double> window = hann_window(cfg.window_length);
  const FftPlan plan = make_fft_plan(cfg.fft_size);

  Spectrogram spec;
  spec.n_bins = bins;
  spec.n_frames = frames;
  spec.re.resize(static_cast<size_t>(bins) * frames);
  spec.im.resize(static_cast<size_t>(bins) * frames);
  std::vector<std::complex<double>> buf(cfg.fft_size);
  for (int f = 0; f < frames; ++f) {
    const double* seg = audio.samples.data() + static_cast<size_t>(f) * cfg.hop_length;
    for (int n = 0; n < cfg.window_length; ++n) buf[n] = {seg[n] * window[n], 0.0};
    for (int n = cfg.window_length; n < cfg.fft_size; ++n) buf[n] = {0.0, 0.0};
    fft(plan, buf.data(), false);
    for (int k = 0; k < bins; ++k) {
      spec.re[static_cast<size_t>(k) * frames + f] = buf[k].real();
      spec.im[static_cast<size_t>(k) * frames + f] = buf[k].imag();
    }
  }
  return spec;
}

Tensor magnitude(const Spectrogram& spec) {
  Tensor m({spec.n_bins, spec.n_frames});
  for (size_t j = 0; j < m.data.size(); ++j) m.data[j] = std::hypot(spec.re[j], spec.im[j]);
  return m;
}

Tensor mel_filterbank(const MelConfig& cfg, int sample_rate) {
  if (cfg.n_mels < 1) raise(ErrorKind::config, "n_mels must be >= 1");
  if (sample_rate < 1) raise(ErrorKind::config, "sample_rate must be >= 1");
  if (!(cfg.f_min >= 0.0) || !(cfg.f_max > cfg.f_min) || cfg.f_max > sample_rate / 2.0)
    raise(ErrorKind::config, "mel frequency bounds must satisfy 0 <= f_min < f_max <= Nyquist");
  const int bins = cfg.stft.fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int m = 0; m < cfg.n_mels + 2; ++m)
    edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));

  Tensor fb({cfg.n_mels, bins});
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.stft.fft_size;
      double w = 0.0;
      if (f > lo && f < mid)
        w = (f - lo) / (mid - lo);
      else if (f == mid)
        w = 1.0;
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      fb.data[static_cast<size_t>(m) * bins + k] = w;
    }
  }
  return fb;
}

Tensor mel_spectrogram(const AudioBuffer& audio, const MelConfig& cfg) {
  const Spectrogram spec = stft(audio, cfg.stft);
  const Tensor fb = mel_filterbank(cfg, audio.sample_rate);
  Tensor out({cfg.n_mels, spec.n_frames});
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double* fbm = fb.data.data() + static_cast<size_t>(m) * spec.n_bins;
    for (int f = 0; f < spec.n_frames; ++f) {
      double acc = 0.0;
      for (int k = 0; k < spec.n_bins; ++k) {
        const double re = spec.re[static_cast<size_t>(k) * spec.n_frames + f];
        const double im = spec.im[static_cast<size_t>(k) * spec.n_frames + f];
        acc += fbm[k] * (re * re + im * im);
      }
      out.data[static_cast<size_t>(m) * spec.n_frames + f] = std::log(acc + kLogFloor);
    }
  }
  return out;
}

AudioBuffer average_pool_resample(const AudioBuffer& audio, int factor) {
  if (factor < 1) raise(ErrorKind::config, "pooling factor must be >= 1");
  if (audio.length() < factor) raise(ErrorKind::length, "signal shorter than one pooling block");
  AudioBuffer out;
  out.sample_rate = audio.sample_rate / factor;
  out.samples.resize(audio.samples.size() / factor);
  kernels::avg_pool_forward(1, audio.length(), factor, audio.samples.data(), out.samples.data());
  return out;
}

}  // namespace plaae::dsp

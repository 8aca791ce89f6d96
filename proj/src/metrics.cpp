#include "plaae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "plaae/error.hpp"

namespace plaae::metrics {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kCepstralOrder = 13;  // coefficients 1..13 enter the norm
constexpr double kVoicingThreshold = 0.45;
constexpr double kSilenceRms = 1e-4;
// Peaks within this factor of the best count as candidates; the shortest lag
// among them wins, biasing against octave-down picks.
constexpr double kPeakTieFactor = 0.9;

double mcd_scale() { return 10.0 * std::sqrt(2.0) / std::log(10.0); }

// Orthonormal DCT-II of one log-mel column, coefficients 0..order.
std::vector<double> cepstrum(const Tensor& logmel, int frame, int order) {
  const int n_mels = logmel.shape[0];
  std::vector<double> c(static_cast<size_t>(order) + 1, 0.0);
  for (int k = 0; k <= order; ++k) {
    double acc = 0.0;
    for (int n = 0; n < n_mels; ++n)
      acc += logmel.at(n, frame) * std::cos(kPi * k * (2.0 * n + 1.0) / (2.0 * n_mels));
    const double a = k == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
    c[static_cast<size_t>(k)] = a * acc;
  }
  return c;
}

struct Frames {
  int window = 0;
  int hop = 0;
  int count = 0;
};

Frames f0_framing(const dsp::AudioBuffer& audio) {
  Frames f;
  f.window = audio.sample_rate * 25 / 1000;
  f.hop = audio.sample_rate * 10 / 1000;
  f.count = audio.length() >= f.window ? (audio.length() - f.window) / f.hop + 1 : 0;
  return f;
}

std::string format_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> mcd_curve(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec,
                              int horizon_ms) {
  if (horizon_ms <= 0 || horizon_ms % 10 != 0)
    raise(ErrorKind::config, "horizon must be a positive multiple of 10 ms");
  if (ref.sample_rate != rec.sample_rate)
    raise(ErrorKind::config, "sample rates differ");
  if (ref.length() != rec.length())
    raise(ErrorKind::length, "signals must be aligned to the same length");

  dsp::MelConfig mel_cfg;
  mel_cfg.f_max = ref.sample_rate / 2.0;
  const int hop = mel_cfg.stft.hop_length;
  const int window = mel_cfg.stft.window_length;
  const int n_frames = horizon_ms * (ref.sample_rate / 1000) / hop;
  const int horizon_samples = horizon_ms * (ref.sample_rate / 1000);
  if (ref.length() < horizon_samples)
    raise(ErrorKind::length, "signal of " + std::to_string(ref.length()) +
                                 " samples is shorter than the " + std::to_string(horizon_ms) +
                                 " ms horizon");

  const int needed = (n_frames - 1) * hop + window;
  const auto padded = [&](const dsp::AudioBuffer& a) {
    dsp::AudioBuffer p;
    p.sample_rate = a.sample_rate;
    p.samples.assign(a.samples.begin(),
                     a.samples.begin() + std::min(a.length(), needed));
    p.samples.resize(static_cast<size_t>(needed), 0.0);
    return p;
  };
  const Tensor mel_ref = dsp::mel_spectrogram(padded(ref), mel_cfg);
  const Tensor mel_rec = dsp::mel_spectrogram(padded(rec), mel_cfg);

  std::vector<double> curve(static_cast<size_t>(n_frames), 0.0);
  for (int f = 0; f < n_frames; ++f) {
    const std::vector<double> ca = cepstrum(mel_ref, f, kCepstralOrder);
    const std::vector<double> cb = cepstrum(mel_rec, f, kCepstralOrder);
    double sum = 0.0;
    for (int k = 1; k <= kCepstralOrder; ++k) {
      const double d = ca[static_cast<size_t>(k)] - cb[static_cast<size_t>(k)];
      sum += d * d;
    }
    curve[static_cast<size_t>(f)] = mcd_scale() * std::sqrt(sum);
  }
  return curve;
}

std::vector<F0Frame> estimate_f0(const dsp::AudioBuffer& audio) {
  const Frames fr = f0_framing(audio);
  const int lag_min = audio.sample_rate / 400;
  const int lag_max = audio.sample_rate / 60;
  std::vector<F0Frame> out(static_cast<size_t>(fr.count));

  std::vector<double> x(static_cast<size_t>(fr.window));
  std::vector<double> nacf(static_cast<size_t>(lag_max) + 1, 0.0);
  for (int f = 0; f < fr.count; ++f) {
    const int base = f * fr.hop;
    double mean = 0.0;
    for (int i = 0; i < fr.window; ++i)
      mean += audio.samples[static_cast<size_t>(base + i)];
    mean /= fr.window;
    double energy = 0.0;
    for (int i = 0; i < fr.window; ++i) {
      x[static_cast<size_t>(i)] = audio.samples[static_cast<size_t>(base + i)] - mean;
      energy += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    }
    if (std::sqrt(energy / fr.window) < kSilenceRms) continue;

    double best = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      const int m = fr.window - lag;
      double dot = 0.0, e1 = 0.0, e2 = 0.0;
      for (int i = 0; i < m; ++i) {
        dot += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i + lag)];
        e1 += x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        e2 += x[static_cast<size_t>(i + lag)] * x[static_cast<size_t>(i + lag)];
      }
      const double denom = e1 * e2;
      nacf[static_cast<size_t>(lag)] = denom < 1e-20 ? 0.0 : dot / std::sqrt(denom);
      best = std::max(best, nacf[static_cast<size_t>(lag)]);
    }
    if (best < kVoicingThreshold) continue;

    // Shortest local peak within the tie band; the global argmax backstops
    // degenerate shapes with no interior peak.
    int lag_star = -1;
    for (int lag = lag_min + 1; lag < lag_max; ++lag) {
      const double r = nacf[static_cast<size_t>(lag)];
      if (r >= kPeakTieFactor * best && r >= nacf[static_cast<size_t>(lag - 1)] &&
          r >= nacf[static_cast<size_t>(lag + 1)]) {
        lag_star = lag;
        break;
      }
    }
    if (lag_star < 0) {
      for (int lag = lag_min; lag <= lag_max; ++lag)
        if (nacf[static_cast<size_t>(lag)] == best) {
          lag_star = lag;
          break;
        }
    }

    double delta = 0.0;
    if (lag_star > lag_min && lag_star < lag_max) {
      const double rm = nacf[static_cast<size_t>(lag_star - 1)];
      const double r0 = nacf[static_cast<size_t>(lag_star)];
      const double rp = nacf[static_cast<size_t>(lag_star + 1)];
      const double denom = rm - 2.0 * r0 + rp;
      if (std::abs(denom) > 1e-12) delta = std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
    }
    out[static_cast<size_t>(f)].voiced = true;
    out[static_cast<size_t>(f)].f0_hz = audio.sample_rate / (lag_star + delta);
  }
  return out;
}

double f0_rmse(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec) {
  const std::vector<F0Frame> a = estimate_f0(ref);
  const std::vector<F0Frame> b = estimate_f0(rec);
  const int n = static_cast<int>(std::min(a.size(), b.size()));

  std::vector<int> voiced_idx;
  for (int i = 0; i < n; ++i)
    if (b[static_cast<size_t>(i)].voiced) voiced_idx.push_back(i);

  std::vector<double> contour(static_cast<size_t>(n), 0.0);
  if (!voiced_idx.empty()) {
    for (int i = 0; i < n; ++i) {
      if (b[static_cast<size_t>(i)].voiced) {
        contour[static_cast<size_t>(i)] = b[static_cast<size_t>(i)].f0_hz;
        continue;
      }
      const auto next = std::lower_bound(voiced_idx.begin(), voiced_idx.end(), i);
      if (next == voiced_idx.begin()) {
        contour[static_cast<size_t>(i)] = b[static_cast<size_t>(*next)].f0_hz;
      } else if (next == voiced_idx.end()) {
        contour[static_cast<size_t>(i)] = b[static_cast<size_t>(voiced_idx.back())].f0_hz;
      } else {
        const int j1 = *next, j0 = *(next - 1);
        const double w = static_cast<double>(i - j0) / (j1 - j0);
        contour[static_cast<size_t>(i)] = (1.0 - w) * b[static_cast<size_t>(j0)].f0_hz +
                                          w * b[static_cast<size_t>(j1)].f0_hz;
      }
    }
  }

  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (!a[static_cast<size_t>(i)].voiced) continue;
    const double d = a[static_cast<size_t>(i)].f0_hz - contour[static_cast<size_t>(i)];
    sum += d * d;
    count += 1;
  }
  return count == 0 ? 0.0 : std::sqrt(sum / count);
}

double uv_error(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec) {
  const std::vector<F0Frame> a = estimate_f0(ref);
  const std::vector<F0Frame> b = estimate_f0(rec);
  const int n = static_cast<int>(std::min(a.size(), b.size()));
  if (n == 0) return 0.0;
  int disagree = 0;
  for (int i = 0; i < n; ++i)
    disagree += a[static_cast<size_t>(i)].voiced != b[static_cast<size_t>(i)].voiced;
  return static_cast<double>(disagree) / n;
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) raise(ErrorKind::length, "cannot aggregate an empty set");
  Aggregate agg;
  agg.n = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / agg.n;
  if (agg.n == 1) {
    agg.single = true;
    return agg;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
  const double stderr_ = std::sqrt(ss / (agg.n - 1) / agg.n);
  agg.ci95 = 1.96 * stderr_;
  return agg;
}

UtteranceEval evaluate_pair(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec,
                            int horizon_ms) {
  UtteranceEval ev;
  ev.mcd = mcd_curve(ref, rec, horizon_ms);
  double sum = 0.0;
  for (double v : ev.mcd) sum += v;
  ev.mcd_mean = sum / static_cast<double>(ev.mcd.size());
  ev.f0 = f0_rmse(ref, rec);
  ev.uv = uv_error(ref, rec);
  return ev;
}

ConditionReport summarize(const std::string& system, int gap_ms,
                          const std::vector<UtteranceEval>& evals) {
  if (evals.empty()) raise(ErrorKind::length, "cannot summarize an empty condition");
  const size_t offsets = evals.front().mcd.size();
  for (const UtteranceEval& ev : evals)
    if (ev.mcd.size() != offsets)
      raise(ErrorKind::shape, "utterances evaluated over different horizons");

  ConditionReport rep;
  rep.system = system;
  rep.gap_ms = gap_ms;
  rep.n = static_cast<int>(evals.size());
  for (size_t i = 0; i < offsets; ++i) {
    std::vector<double> col;
    for (const UtteranceEval& ev : evals) col.push_back(ev.mcd[i]);
    const Aggregate a = aggregate(col);
    rep.mcd_mean.push_back(a.mean);
    rep.mcd_ci95.push_back(a.ci95);
  }
  std::vector<double> means, f0s, uvs;
  for (const UtteranceEval& ev : evals) {
    means.push_back(ev.mcd_mean);
    f0s.push_back(ev.f0);
    uvs.push_back(ev.uv);
  }
  rep.mcd_overall = aggregate(means);
  rep.f0 = aggregate(f0s);
  rep.uv = aggregate(uvs);
  return rep;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json root = nlohmann::json::array();
  for (const ConditionReport& c : report) {
    nlohmann::json row;
    row["system"] = c.system;
    row["gap_ms"] = c.gap_ms;
    row["n"] = c.n;
    row["single_utterance"] = c.mcd_overall.single;
    nlohmann::json offsets = nlohmann::json::array();
    for (size_t i = 0; i < c.mcd_mean.size(); ++i) offsets.push_back(10 * static_cast<int>(i));
    row["mcd"] = {{"offsets_ms", offsets}, {"mean", c.mcd_mean}, {"ci95", c.mcd_ci95}};
    row["mcd_overall"] = {{"mean", c.mcd_overall.mean}, {"ci95", c.mcd_overall.ci95}};
    row["f0_rmse_hz"] = {{"mean", c.f0.mean}, {"ci95", c.f0.ci95}};
    row["uv_error"] = {{"mean", c.uv.mean}, {"ci95", c.uv.ci95}};
    root.push_back(row);
  }
  return root.dump(2);
}

std::string report_csv(const EvalReport& report) {
  std::string out = "system,gap_ms,offset_ms,mcd_db,f0_rmse_hz,uv_err,ci95,n\n";
  for (const ConditionReport& c : report) {
    const auto emit = [&](int offset_ms, double mcd, double ci) {
      out += c.system + ',' + std::to_string(c.gap_ms) + ',' + std::to_string(offset_ms) + ',' +
             format_num(mcd) + ',' + format_num(c.f0.mean) + ',' + format_num(c.uv.mean) + ',' +
             format_num(ci) + ',' + std::to_string(c.n) + '\n';
    };
    for (size_t i = 0; i < c.mcd_mean.size(); ++i)
      emit(10 * static_cast<int>(i), c.mcd_mean[i], c.mcd_ci95[i]);
    emit(-1, c.mcd_overall.mean, c.mcd_overall.ci95);
  }
  return out;
}

}  // namespace plaae::metrics

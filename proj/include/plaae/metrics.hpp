#pragma once

#include <string>
#include <vector>

#include "plaae/dsp.hpp"

namespace plaae::metrics {

// Mel-cepstral distortion per 10 ms frame. Each 80-bin log-mel column is
// turned into cepstra by an orthonormal DCT-II; the frame's distortion is
// (10*sqrt(2)/ln 10) * ||c_ref - c_rec||_2 over coefficients 1..13, with c0
// (frame energy) excluded. Analysis windows reaching past the signal end are
// right-zero-padded. Signals must be equally long and at least horizon_ms.
std::vector<double> mcd_curve(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec,
                              int horizon_ms);

struct F0Frame {
  bool voiced = false;
  double f0_hz = 0.0;  // 0 when unvoiced
};

// Normalized-autocorrelation pitch tracker: 25 ms frames at a 10 ms hop,
// search range 60-400 Hz, mean-subtracted frames, voicing threshold 0.45 on
// the autocorrelation peak, parabolic peak refinement. Frames with rms below
// 1e-4 are forced unvoiced. Among near-equal peaks the shortest lag wins,
// which suppresses octave-down errors on strongly periodic input.
std::vector<F0Frame> estimate_f0(const dsp::AudioBuffer& audio);

// RMSE in Hz over frames the reference marks voiced. The reconstruction's
// contour is linearly interpolated across its unvoiced frames and held at
// the edges; a reconstruction with no voiced frames counts as a zero
// contour, and a reference with no voiced frames scores 0.
double f0_rmse(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec);

// Fraction of common frames whose voicing decisions disagree.
double uv_error(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec);

struct Aggregate {
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * stderr over utterances; 0 when n == 1
  int n = 0;
  bool single = false;  // one utterance: the interval is degenerate
};

// Mean with a 95% confidence half-width from the sample standard error.
// An empty set is a length error.
Aggregate aggregate(const std::vector<double>& values);

// Everything one (reference, reconstruction) pair contributes to a report.
struct UtteranceEval {
  std::vector<double> mcd;  // dB per 10 ms offset
  double mcd_mean = 0.0;    // mean over the curve
  double f0 = 0.0;
  double uv = 0.0;
};

UtteranceEval evaluate_pair(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& rec,
                            int horizon_ms);

// One evaluated condition: a system at one gap length over n utterances.
struct ConditionReport {
  std::string system;
  int gap_ms = 0;
  std::vector<double> mcd_mean;  // per 10 ms offset
  std::vector<double> mcd_ci95;
  Aggregate mcd_overall;  // over per-utterance curve means
  Aggregate f0;
  Aggregate uv;
  int n = 0;
};

ConditionReport summarize(const std::string& system, int gap_ms,
                          const std::vector<UtteranceEval>& evals);

using EvalReport = std::vector<ConditionReport>;

std::string report_json(const EvalReport& report);

// Columns: system, gap_ms, offset_ms, mcd_db, f0_rmse_hz, uv_err, ci95, n.
// Each condition emits one row per 10 ms offset plus an offset_ms = -1 row
// holding the whole-horizon curve mean. The single ci95 column always belongs
// to that row's mcd_db; the f0 and uv columns repeat the condition-level
// means so every row is self-contained.
std::string report_csv(const EvalReport& report);

}  // namespace plaae::metrics

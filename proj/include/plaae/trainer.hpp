#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "plaae/checkpoint.hpp"
#include "plaae/dsp.hpp"
#include "plaae/losses.hpp"
#include "plaae/model.hpp"
#include "plaae/optim.hpp"
#include "plaae/packetsim.hpp"
#include "plaae/rng.hpp"

namespace plaae::trainer {

// Desk-scale defaults; canonical_config() restores the full-run values
// (batch 48, 1.5M iterations). Everything else is shared between the two.
struct TrainConfig {
  int batch_size = 4;
  double segment_seconds = 1.0;
  int64_t max_iterations = 20000;
  double lr = 3e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double alpha = 1.0;               // weight on the multi-STFT term
  double drop_probability = 0.1;
  uint64_t seed = 1;
  int64_t validation_interval = 1000;
  double d_lr_scale = 1.0;          // discriminator lr = lr * d_lr_scale
  double grad_clip = 0.0;           // joint L2 clip per network; 0 disables
};

TrainConfig canonical_config();

void validate(const TrainConfig& cfg);  // config Error on any broken invariant

// Segment length in samples; validated to be a whole multiple of one packet.
int segment_samples(const TrainConfig& cfg);

// Round-trips every field; unknown keys are rejected so a typo cannot
// silently fall back to a default.
std::string train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

// An empty path marks a synthetic utterance rendered from synth_seed.
struct ManifestEntry {
  std::string utterance_id;
  std::string path;
  std::string split;       // "train", "valid", or "test"
  std::string speaker_id;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  uint64_t synth_seed = 0;
  bool warning_empty = false;
};

// Splits must be named correctly and speaker-disjoint.
void validate(const CorpusManifest& manifest);

// Deterministic synthetic speech: a sawtooth source on a slow F0 random walk,
// two formant resonators, amplitude-modulated noise, and interior pauses.
// Utterances are 2 to 4 s. Speakers are split 70/15/15, speaker-disjoint.
CorpusManifest synth_corpus(int n_utterances, uint64_t seed);

// Renders one utterance; the per-sample F0 truth (0 where unvoiced) makes the
// generator audit itself against the pitch tracker.
dsp::AudioBuffer synth_utterance(const std::string& utterance_id, uint64_t corpus_seed,
                                 std::vector<double>* f0_track = nullptr);

// Scans a directory of 16 kHz mono wavs, sorted by filename. The speaker id
// is the filename up to the first underscore, and the split is a stable hash
// of the speaker, so re-ingesting reproduces the same manifest.
CorpusManifest ingest_wav_corpus(const std::string& directory);

// Cuts leading and trailing silence (10 ms frames under -40 dBFS) down to at
// most 100 ms on each side. All-silent audio is returned unchanged.
dsp::AudioBuffer trim_silence(const dsp::AudioBuffer& audio);

struct Utterance {
  std::string id;
  dsp::AudioBuffer audio;
};

struct LoadedCorpus {
  std::vector<Utterance> train, valid, test;
};

// Renders or reads every entry; file entries are trimmed, synthetic ones are
// used as rendered so their F0 tracks stay aligned.
LoadedCorpus load_corpus(const CorpusManifest& manifest);

struct BatchItem {
  std::vector<double> clean;   // one segment of the reference waveform
  dsp::AudioBuffer lossy;      // zero-filled under the mask
  packetsim::LossMask mask;
  uint64_t mask_seed = 0;
};

struct TrainState {
  TrainConfig cfg;
  losses::MultiStftConfig stft;
  optim::AdamState opt_g, opt_d;
  rng::Stream sampler{0};
  int64_t step = 0;
  double best_val = std::numeric_limits<double>::infinity();
};

TrainState make_state(const TrainConfig& cfg);

// Draws utterance, segment start, gap length (20/40/60/120 ms uniformly), and
// mask seed from the sampler stream, in that order, so one generator state
// pins the whole curriculum.
std::vector<BatchItem> sample_batch(TrainState& st, const LoadedCorpus& corpus);

struct StepRecord {
  int64_t step = 0;
  double vd = 0.0;      // discriminator loss
  double adv = 0.0;     // generator adversarial term
  double mstft = 0.0;   // multi-STFT term, before the alpha weight
  std::optional<double> val_mstft;
};

// One adversarial step: the discriminators update on detached generator
// output first, then the generator updates through the freshly updated,
// frozen discriminators. Non-finite losses raise a numeric Error naming the
// batch's mask seeds.
StepRecord train_step(model::PlaaeModel& m, TrainState& st, const std::vector<BatchItem>& batch);

// Mean multi-STFT distance between each validation utterance and its
// concealment under a per-utterance mask derived statelessly from the config
// seed and the utterance id.
double validation_loss(const model::PlaaeModel& m, const TrainConfig& cfg,
                       const std::vector<Utterance>& valid);

// Model weights, both optimizers' moments, the sampler state, the step
// counter, and the best validation loss, all in one restorable snapshot.
checkpoint::Snapshot snapshot_training(model::PlaaeModel& m, const TrainState& st);
void restore_training(model::PlaaeModel& m, TrainState& st, const checkpoint::Snapshot& snap);

struct RunResult {
  int64_t steps = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::string last_path, best_path, log_path;
};

// Runs to cfg.max_iterations, appending one JSON line per step to
// train_log.jsonl and writing last.ckpt at validation points and at the end,
// best.ckpt whenever validation improves. `progress`, when given, receives a
// short line per logged validation.
RunResult run_training(model::PlaaeModel& m, TrainState& st, const LoadedCorpus& corpus,
                       const std::string& out_dir, std::ostream* progress = nullptr);

}  // namespace plaae::trainer

#include "plaae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "plaae/error.hpp"
#include "plaae/graph.hpp"
#include "plaae/wav.hpp"

namespace plaae::trainer {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr int kSampleRate = 16000;
constexpr int kPacketLength = 320;
constexpr int kBlockLength = 160;         // 10 ms synthesis / VAD frame
constexpr double kSilenceRms = 0.01;      // -40 dBFS
constexpr int kKeepSilenceFrames = 10;    // 100 ms kept on each side
const int kGapChoices[4] = {1, 2, 3, 6};  // 20/40/60/120 ms at L=320

[[noreturn]] void config_error(const std::string& what) { raise(ErrorKind::config, what); }

}  // namespace

TrainConfig canonical_config() {
  TrainConfig cfg;
  cfg.batch_size = 48;
  cfg.max_iterations = 1500000;
  return cfg;
}

int segment_samples(const TrainConfig& cfg) {
  return static_cast<int>(std::llround(cfg.segment_seconds * kSampleRate));
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) config_error("batch_size must be at least 1");
  if (!(cfg.segment_seconds > 0.0) || !std::isfinite(cfg.segment_seconds))
    config_error("segment_seconds must be positive");
  const int seg = segment_samples(cfg);
  if (seg <= 0 || seg % kPacketLength != 0)
    config_error("segment length must be a whole number of 20 ms packets");
  if (cfg.max_iterations < 0) config_error("max_iterations must be non-negative");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) config_error("lr must be positive");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0) config_error("beta1 must lie in [0, 1)");
  if (cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) config_error("beta2 must lie in [0, 1)");
  if (cfg.alpha < 0.0 || !std::isfinite(cfg.alpha)) config_error("alpha must be non-negative");
  if (cfg.drop_probability < 0.0 || cfg.drop_probability >= 1.0)
    config_error("drop_probability must lie in [0, 1)");
  if (cfg.validation_interval < 0) config_error("validation_interval must be non-negative");
  if (!(cfg.d_lr_scale > 0.0) || !std::isfinite(cfg.d_lr_scale))
    config_error("d_lr_scale must be positive");
  if (cfg.grad_clip < 0.0 || !std::isfinite(cfg.grad_clip))
    config_error("grad_clip must be non-negative");
}

std::string train_config_json(const TrainConfig& cfg) {
  ordered_json j;
  j["batch_size"] = cfg.batch_size;
  j["segment_seconds"] = cfg.segment_seconds;
  j["max_iterations"] = cfg.max_iterations;
  j["lr"] = cfg.lr;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["alpha"] = cfg.alpha;
  j["drop_probability"] = cfg.drop_probability;
  j["seed"] = std::to_string(cfg.seed);  // decimal string keeps all 64 bits
  j["validation_interval"] = cfg.validation_interval;
  j["d_lr_scale"] = cfg.d_lr_scale;
  j["grad_clip"] = cfg.grad_clip;
  return j.dump(2);
}

namespace {

uint64_t parse_seed(const json& v) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      config_error("seed must be a decimal string");
    return std::strtoull(s.c_str(), nullptr, 10);
  }
  config_error("seed must be an unsigned integer or a decimal string");
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("bad train config: ") + e.what());
  }
  if (!j.is_object()) config_error("train config must be a JSON object");
  TrainConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "segment_seconds") cfg.segment_seconds = value.get<double>();
      else if (key == "max_iterations") cfg.max_iterations = value.get<int64_t>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "beta1") cfg.beta1 = value.get<double>();
      else if (key == "beta2") cfg.beta2 = value.get<double>();
      else if (key == "alpha") cfg.alpha = value.get<double>();
      else if (key == "drop_probability") cfg.drop_probability = value.get<double>();
      else if (key == "seed") cfg.seed = parse_seed(value);
      else if (key == "validation_interval") cfg.validation_interval = value.get<int64_t>();
      else if (key == "d_lr_scale") cfg.d_lr_scale = value.get<double>();
      else if (key == "grad_clip") cfg.grad_clip = value.get<double>();
      else config_error("unknown train config key: " + key);
    }
  } catch (const json::exception& e) {
    config_error(std::string("bad train config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

void validate(const CorpusManifest& manifest) {
  std::vector<std::pair<std::string, std::string>> speaker_split;
  for (const auto& e : manifest.entries) {
    if (e.utterance_id.empty()) config_error("manifest entry lacks an utterance id");
    if (e.split != "train" && e.split != "valid" && e.split != "test")
      config_error("manifest split for " + e.utterance_id + " must be train, valid, or test");
    if (e.speaker_id.empty()) config_error("manifest entry lacks a speaker id");
    bool seen = false;
    for (const auto& [sp, split] : speaker_split)
      if (sp == e.speaker_id) {
        seen = true;
        if (split != e.split)
          config_error("speaker " + sp + " appears in both " + split + " and " + e.split);
      }
    if (!seen) speaker_split.emplace_back(e.speaker_id, e.split);
  }
}

CorpusManifest synth_corpus(int n_utterances, uint64_t seed) {
  if (n_utterances <= 0) config_error("a synthetic corpus needs at least one utterance");
  const int speakers = n_utterances < 3 ? n_utterances : std::max(3, (n_utterances + 2) / 3);
  const int n_eval = speakers >= 3 ? std::max(1, speakers * 15 / 100) : 0;
  CorpusManifest manifest;
  manifest.synth_seed = seed;
  for (int idx = 0; idx < n_utterances; ++idx) {
    const int sp = idx % speakers;
    ManifestEntry e;
    e.speaker_id = "s" + std::to_string(sp);
    e.utterance_id = e.speaker_id + "_u" + std::to_string(idx);
    e.split = sp >= speakers - n_eval         ? "test"
              : sp >= speakers - 2 * n_eval   ? "valid"
                                              : "train";
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

namespace {

// Two-pole resonator; the (1 - r) output scale keeps the peak gain tame.
struct Resonator {
  double a1 = 0.0, a2 = 0.0, scale = 1.0;
  double y1 = 0.0, y2 = 0.0;
  Resonator(double freq_hz, double bandwidth_hz) {
    const double r = std::exp(-kPi * bandwidth_hz / kSampleRate);
    a1 = 2.0 * r * std::cos(2.0 * kPi * freq_hz / kSampleRate);
    a2 = -r * r;
    scale = 1.0 - r;
  }
  double operator()(double x) {
    const double y = a1 * y1 + a2 * y2 + x;
    y2 = y1;
    y1 = y;
    return scale * y;
  }
};

}  // namespace

dsp::AudioBuffer synth_utterance(const std::string& utterance_id, uint64_t corpus_seed,
                                 std::vector<double>* f0_track) {
  rng::Stream st = rng::utterance_stream(corpus_seed, utterance_id);
  const int len = 32000 + static_cast<int>(st.below(32001));  // 2 to 4 s
  const int n_blocks = (len + kBlockLength - 1) / kBlockLength;

  // Slow F0 random walk, one value per 10 ms block.
  std::vector<double> f0(n_blocks);
  double walk = st.uniform(110.0, 260.0);
  for (int b = 0; b < n_blocks; ++b) {
    walk = std::clamp(walk + st.uniform(-1.5, 1.5), 85.0, 295.0);
    f0[b] = walk;
  }

  Resonator formant1(st.uniform(350.0, 850.0), st.uniform(60.0, 120.0));
  Resonator formant2(st.uniform(1100.0, 2400.0), st.uniform(100.0, 200.0));

  // Interior pauses only: spans stay clear of both ends and of each other.
  std::vector<char> voiced(n_blocks, 1);
  std::vector<std::pair<int, int>> pauses;
  const int n_pauses = 1 + static_cast<int>(st.below(3));
  for (int p = 0; p < n_pauses; ++p) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      const int start = 30 + static_cast<int>(st.below(static_cast<uint64_t>(std::max(1, n_blocks - 70))));
      const int span = 10 + static_cast<int>(st.below(21));
      if (start + span > n_blocks - 30) continue;
      bool clear = true;
      for (const auto& [s0, s1] : pauses)
        if (start < s1 + 20 && s0 < start + span + 20) clear = false;
      if (!clear) continue;
      pauses.emplace_back(start, start + span);
      for (int b = start; b < start + span; ++b) voiced[b] = 0;
      break;
    }
  }

  // Per-block noise floor, occasionally bursting, so spectra are not sterile.
  std::vector<double> namp(n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    namp[b] = voiced[b] ? st.uniform(0.015, 0.04) : st.uniform(0.0, 0.008);
    if (st.below(10) == 0) namp[b] *= 2.5;
  }

  std::vector<double> out(len);
  double phase = 0.0, amp = 1.0;
  for (int t = 0; t < len; ++t) {
    const int b = t / kBlockLength;
    const double target = voiced[b] ? 1.0 : 0.0;
    amp += std::clamp(target - amp, -1.0 / 80.0, 1.0 / 80.0);  // 5 ms ramps
    phase += f0[b] / kSampleRate;
    const double saw = 2.0 * (phase - std::floor(phase)) - 1.0;
    const double x = 0.5 * amp * saw + st.gauss() * namp[b];
    out[t] = 0.35 * x + 0.4 * formant1(x) + 0.25 * formant2(x);
  }

  if (f0_track) {
    f0_track->resize(len);
    for (int t = 0; t < len; ++t) {
      const int b = t / kBlockLength;
      (*f0_track)[t] = voiced[b] ? f0[b] : 0.0;
    }
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 1e-12)
    for (double& v : out) v *= 0.5 / peak;

  dsp::AudioBuffer audio;
  audio.samples = std::move(out);
  audio.sample_rate = kSampleRate;
  return audio;
}

CorpusManifest ingest_wav_corpus(const std::string& directory) {
  if (!fs::is_directory(directory)) config_error(directory + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  CorpusManifest manifest;
  for (const auto& path : files) {
    const wav::WavFile file = wav::read_wav(path.string());
    if (file.sample_rate != kSampleRate)
      config_error(path.string() + ": expected 16 kHz, got " +
                   std::to_string(file.sample_rate) + " Hz");
    const std::string stem = path.stem().string();
    ManifestEntry e;
    e.utterance_id = stem;
    e.path = path.string();
    e.speaker_id = stem.substr(0, stem.find('_'));
    const uint64_t h = rng::hash_string(e.speaker_id) % 20;
    e.split = h < 14 ? "train" : h < 17 ? "valid" : "test";
    manifest.entries.push_back(std::move(e));
  }
  manifest.warning_empty = manifest.entries.empty();
  validate(manifest);
  return manifest;
}

dsp::AudioBuffer trim_silence(const dsp::AudioBuffer& audio) {
  const int len = audio.length();
  const int n_frames = (len + kBlockLength - 1) / kBlockLength;
  if (n_frames == 0) return audio;
  auto loud = [&](int f) {
    const int begin = f * kBlockLength;
    const int end = std::min(len, begin + kBlockLength);
    double ss = 0.0;
    for (int t = begin; t < end; ++t) ss += audio.samples[t] * audio.samples[t];
    return std::sqrt(ss / (end - begin)) >= kSilenceRms;
  };
  int first = 0;
  while (first < n_frames && !loud(first)) ++first;
  if (first == n_frames) return audio;  // nothing above the gate
  int last = n_frames - 1;
  while (last >= 0 && !loud(last)) --last;

  const int start_frame = first > kKeepSilenceFrames ? first - kKeepSilenceFrames : 0;
  const int end_frame = n_frames - 1 - last > kKeepSilenceFrames ? last + 1 + kKeepSilenceFrames : n_frames;
  const int begin = start_frame * kBlockLength;
  const int end = std::min(len, end_frame * kBlockLength);

  dsp::AudioBuffer trimmed;
  trimmed.sample_rate = audio.sample_rate;
  trimmed.samples.assign(audio.samples.begin() + begin, audio.samples.begin() + end);
  return trimmed;
}

LoadedCorpus load_corpus(const CorpusManifest& manifest) {
  validate(manifest);
  LoadedCorpus corpus;
  for (const auto& e : manifest.entries) {
    Utterance u;
    u.id = e.utterance_id;
    if (e.path.empty()) {
      u.audio = synth_utterance(e.utterance_id, manifest.synth_seed);
    } else {
      const wav::WavFile file = wav::read_wav(e.path);
      if (file.sample_rate != kSampleRate)
        config_error(e.path + ": expected 16 kHz, got " + std::to_string(file.sample_rate) + " Hz");
      dsp::AudioBuffer raw;
      raw.samples = file.samples;
      raw.sample_rate = file.sample_rate;
      u.audio = trim_silence(raw);
    }
    auto& split = e.split == "train" ? corpus.train : e.split == "valid" ? corpus.valid : corpus.test;
    split.push_back(std::move(u));
  }
  return corpus;
}

TrainState make_state(const TrainConfig& cfg) {
  validate(cfg);
  TrainState st;
  st.cfg = cfg;
  st.stft = losses::canonical_multi_stft();
  st.stft.alpha = cfg.alpha;
  st.sampler = rng::Stream(cfg.seed, "sampler");
  return st;
}

std::vector<BatchItem> sample_batch(TrainState& st, const LoadedCorpus& corpus) {
  const int seg = segment_samples(st.cfg);
  std::vector<size_t> eligible;
  for (size_t i = 0; i < corpus.train.size(); ++i)
    if (corpus.train[i].audio.length() >= seg) eligible.push_back(i);
  if (eligible.empty()) config_error("no training utterance covers a full segment");

  std::vector<BatchItem> batch;
  batch.reserve(static_cast<size_t>(st.cfg.batch_size));
  const int packets = seg / kPacketLength;
  for (int b = 0; b < st.cfg.batch_size; ++b) {
    const Utterance& u = corpus.train[eligible[st.sampler.below(eligible.size())]];
    const int start = static_cast<int>(st.sampler.below(static_cast<uint64_t>(u.audio.length() - seg) + 1));
    const int gap = kGapChoices[st.sampler.below(4)];
    const uint64_t mask_seed = st.sampler.next_u64();

    packetsim::LossProtocol protocol;
    protocol.drop_probability = st.cfg.drop_probability;
    protocol.gap_length_packets = gap;
    protocol.seed = mask_seed;

    BatchItem item;
    item.mask = packetsim::inject_losses(packets, protocol);
    item.mask_seed = mask_seed;
    item.clean.assign(u.audio.samples.begin() + start, u.audio.samples.begin() + start + seg);
    dsp::AudioBuffer segment;
    segment.samples = item.clean;
    segment.sample_rate = kSampleRate;
    item.lossy = packetsim::apply_mask(segment, item.mask).lossy;
    batch.push_back(std::move(item));
  }
  return batch;
}

namespace {

void param_groups(model::PlaaeModel& m, std::vector<optim::ParamRef>& gen,
                  std::vector<optim::ParamRef>& disc) {
  model::visit_params(m, [&](const std::string& name, Tensor& t) {
    const bool is_gen = name.rfind("enc.", 0) == 0 || name.rfind("dec.", 0) == 0;
    (is_gen ? gen : disc).push_back({name, &t});
  });
}

void zero_param_grads(model::PlaaeModel& m) {
  model::visit_params(m, [](const std::string&, Tensor& t) { t.zero_grad(); });
}

[[noreturn]] void numeric_abort(const char* phase, int64_t step, const std::vector<BatchItem>& batch) {
  std::string msg = std::string("non-finite ") + phase + " loss at step " + std::to_string(step) +
                    "; mask seeds:";
  for (const auto& item : batch) msg += " " + std::to_string(item.mask_seed);
  raise(ErrorKind::numeric, msg);
}

}  // namespace

StepRecord train_step(model::PlaaeModel& m, TrainState& st, const std::vector<BatchItem>& batch) {
  if (batch.empty()) raise(ErrorKind::length, "train_step needs a non-empty batch");
  const int hop = m.cfg.frontend.hop;
  for (const auto& item : batch) {
    if (static_cast<int>(item.clean.size()) != item.lossy.length())
      raise(ErrorKind::length, "clean and lossy segments differ in length");
    if (item.clean.empty() || static_cast<int>(item.clean.size()) % hop != 0)
      raise(ErrorKind::length, "segment must be a whole number of frames");
  }

  st.step += 1;
  zero_param_grads(m);
  const size_t B = batch.size();
  Graph g;

  // Generator forward once per item; the same activations feed both phases.
  std::vector<Graph::Value> est(B);
  for (size_t i = 0; i < B; ++i) {
    const Tensor feats = model::features_from_lossy(m, batch[i].lossy, batch[i].mask);
    est[i] = model::decode_graph(g, m, model::encode_graph(g, m, g.constant(feats), true), true);
  }

  // Discriminator phase: generator output enters detached, as a constant.
  Graph::Value d_sum{};
  std::vector<Graph::Value> sr, sf;
  for (size_t i = 0; i < B; ++i) {
    const Tensor& est_t = g.val(est[i]);
    Tensor real({1, static_cast<int>(batch[i].clean.size())}, batch[i].clean);
    Tensor fake(est_t.shape, est_t.data);
    sr = model::discriminate_graph(g, m, g.constant(std::move(real)), true);
    sf = model::discriminate_graph(g, m, g.constant(std::move(fake)), true);
    const Graph::Value d_i = losses::lsgan_discriminator_loss_graph(g, sr, sf);
    d_sum = i == 0 ? d_i : g.add(d_sum, d_i);
  }
  const Graph::Value d_loss = g.scale(d_sum, 1.0 / static_cast<double>(B));
  const double vd = g.val(d_loss).data[0];
  if (!std::isfinite(vd)) numeric_abort("discriminator", st.step, batch);
  g.backward(d_loss);

  std::vector<optim::ParamRef> gen_params, disc_params;
  param_groups(m, gen_params, disc_params);

  optim::AdamConfig d_adam{st.cfg.lr * st.cfg.d_lr_scale, st.cfg.beta1, st.cfg.beta2};
  if (st.cfg.grad_clip > 0.0) optim::clip_grad_norm(disc_params, st.cfg.grad_clip);
  optim::adam_step(disc_params, st.opt_d, d_adam);

  zero_param_grads(m);
  g.zero_grads();

  // Generator phase: the frozen discriminators are rebuilt after the update
  // above, so their parameter nodes carry the new values.
  double adv = 0.0, mstft = 0.0;
  Graph::Value g_sum{};
  for (size_t i = 0; i < B; ++i) {
    const std::vector<Graph::Value> scores = model::discriminate_graph(g, m, est[i], false);
    const Graph::Value adv_i = losses::lsgan_generator_adv_loss_graph(g, scores);
    const Graph::Value ms_i = losses::multi_stft_loss_graph(g, batch[i].clean, est[i], st.stft);
    adv += g.val(adv_i).data[0];
    mstft += g.val(ms_i).data[0];
    const Graph::Value total_i = g.add(adv_i, g.scale(ms_i, st.cfg.alpha));
    g_sum = i == 0 ? total_i : g.add(g_sum, total_i);
  }
  adv /= static_cast<double>(B);
  mstft /= static_cast<double>(B);
  if (!std::isfinite(adv) || !std::isfinite(mstft)) numeric_abort("generator", st.step, batch);
  const Graph::Value g_loss = g.scale(g_sum, 1.0 / static_cast<double>(B));
  g.backward(g_loss);

  optim::AdamConfig g_adam{st.cfg.lr, st.cfg.beta1, st.cfg.beta2};
  if (st.cfg.grad_clip > 0.0) optim::clip_grad_norm(gen_params, st.cfg.grad_clip);
  optim::adam_step(gen_params, st.opt_g, g_adam);
  zero_param_grads(m);

  StepRecord rec;
  rec.step = st.step;
  rec.vd = vd;
  rec.adv = adv;
  rec.mstft = mstft;
  return rec;
}

double validation_loss(const model::PlaaeModel& m, const TrainConfig& cfg,
                       const std::vector<Utterance>& valid) {
  if (valid.empty()) raise(ErrorKind::length, "validation needs at least one utterance");
  const losses::MultiStftConfig stft = losses::canonical_multi_stft();
  double total = 0.0;
  for (const auto& u : valid) {
    const uint64_t id_hash = rng::hash_string(u.id);
    packetsim::LossProtocol protocol;
    protocol.drop_probability = cfg.drop_probability;
    protocol.gap_length_packets = kGapChoices[id_hash % 4];
    protocol.seed = cfg.seed ^ rng::hash_string("valid") ^ id_hash;
    const int packets = packetsim::packetize(u.audio.length(), kPacketLength);
    const packetsim::LossMask mask = packetsim::inject_losses(packets, protocol);
    const packetsim::MaskedAudio masked = packetsim::apply_mask(u.audio, mask);
    const dsp::AudioBuffer est = model::conceal_forward(m, masked.lossy, mask);
    dsp::AudioBuffer ref;
    ref.sample_rate = u.audio.sample_rate;
    ref.samples.assign(u.audio.samples.begin(), u.audio.samples.begin() + est.length());
    total += losses::multi_stft_loss(ref, est, stft);
  }
  return total / static_cast<double>(valid.size());
}

checkpoint::Snapshot snapshot_training(model::PlaaeModel& m, const TrainState& st) {
  checkpoint::Snapshot snap = checkpoint::snapshot_model(m, st.step);
  snap.rng_state = st.sampler.state();
  checkpoint::append_adam_state(snap, "opt_g", st.opt_g);
  checkpoint::append_adam_state(snap, "opt_d", st.opt_d);
  snap.tensors.push_back({"trainer.best_val", {1}, {st.best_val}});
  return snap;
}

void restore_training(model::PlaaeModel& m, TrainState& st, const checkpoint::Snapshot& snap) {
  checkpoint::restore_model(m, snap);
  st.step = snap.step;
  st.sampler.set_state(snap.rng_state);
  st.opt_g = checkpoint::extract_adam_state(snap, "opt_g");
  st.opt_d = checkpoint::extract_adam_state(snap, "opt_d");
  const checkpoint::NamedTensor* best = checkpoint::find_tensor(snap, "trainer.best_val");
  st.best_val = best && best->data.size() == 1 ? best->data[0]
                                               : std::numeric_limits<double>::infinity();
}

RunResult run_training(model::PlaaeModel& m, TrainState& st, const LoadedCorpus& corpus,
                       const std::string& out_dir, std::ostream* progress) {
  validate(st.cfg);
  if (segment_samples(st.cfg) % m.cfg.frontend.hop != 0)
    config_error("segment length must be a multiple of the model hop");

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  RunResult result;
  result.log_path = (dir / "train_log.jsonl").string();
  result.last_path = (dir / "last.ckpt").string();
  const std::string best_path = (dir / "best.ckpt").string();

  {
    std::ofstream cfg_out(dir / "config.json", std::ios::binary);
    ordered_json combined;
    combined["train"] = ordered_json::parse(train_config_json(st.cfg));
    combined["model"] = ordered_json::parse(model::model_config_json(m.cfg));
    cfg_out << combined.dump(2) << "\n";
    if (!cfg_out) raise(ErrorKind::io, (dir / "config.json").string() + ": cannot write");
  }

  std::ofstream log(result.log_path, std::ios::binary);
  if (!log) raise(ErrorKind::io, result.log_path + ": cannot open for writing");

  while (st.step < st.cfg.max_iterations) {
    const std::vector<BatchItem> batch = sample_batch(st, corpus);
    StepRecord rec = train_step(m, st, batch);

    const bool at_interval =
        st.cfg.validation_interval > 0 && rec.step % st.cfg.validation_interval == 0;
    const bool at_end = rec.step == st.cfg.max_iterations;
    if ((at_interval || at_end) && !corpus.valid.empty()) {
      rec.val_mstft = validation_loss(m, st.cfg, corpus.valid);
      if (*rec.val_mstft < st.best_val) {
        st.best_val = *rec.val_mstft;
        checkpoint::save_checkpoint(best_path, snapshot_training(m, st));
        result.best_path = best_path;
      }
      checkpoint::save_checkpoint(result.last_path, snapshot_training(m, st));
      if (progress)
        *progress << "step " << rec.step << " vd " << rec.vd << " adv " << rec.adv << " mstft "
                  << rec.mstft << " val " << *rec.val_mstft << " best " << st.best_val << "\n";
    }

    ordered_json line;
    line["step"] = rec.step;
    line["vd"] = rec.vd;
    line["adv"] = rec.adv;
    line["mstft"] = rec.mstft;
    if (rec.val_mstft) line["val_mstft"] = *rec.val_mstft;
    log << line.dump() << "\n";
    log.flush();
  }

  checkpoint::save_checkpoint(result.last_path, snapshot_training(m, st));
  if (!log) raise(ErrorKind::io, result.log_path + ": write failed");
  result.steps = st.step;
  result.best_val = st.best_val;
  return result;
}

}  // namespace plaae::trainer

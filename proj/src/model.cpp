#include "plaae/model.hpp"

#include <cmath>

#include <json.hpp>

#include "plaae/error.hpp"
#include "plaae/kernels.hpp"

namespace plaae::model {

namespace {

constexpr double kLnEps = 1e-5;

int stride_product(const std::vector<int>& strides) {
  int p = 1;
  for (int s : strides) p *= s;
  return p;
}

// Same accumulation order as the graph's weight_norm node, so the direct
// inference path and the training graph see bit-identical effective weights.
Tensor materialize_wn(const Tensor& v, const Tensor& g) {
  const int out = v.shape[0];
  const int64_t block = static_cast<int64_t>(v.data.size()) / out;
  Tensor w(v.shape);
  for (int o = 0; o < out; ++o) {
    const double* vo = v.data.data() + o * block;
    double ss = 0.0;
    for (int64_t j = 0; j < block; ++j) ss += vo[j] * vo[j];
    const double norm = std::sqrt(ss);
    if (norm < 1e-12)
      raise(ErrorKind::numeric, "weight_norm direction norm below guard at output channel " + std::to_string(o));
    const double s = g.data[o] / norm;
    double* wo = w.data.data() + o * block;
    for (int64_t j = 0; j < block; ++j) wo[j] = s * vo[j];
  }
  return w;
}

Tensor conv_fwd(const Tensor& w, const Tensor& b, const Tensor& x, int dilation, int stride) {
  if (w.shape[1] != x.shape[0])
    raise(ErrorKind::shape, "conv input has " + std::to_string(x.shape[0]) + " channels, weight expects " +
                                std::to_string(w.shape[1]));
  kernels::ConvDims d{x.shape[0], w.shape[0], w.shape[2], dilation, stride, x.shape[1]};
  Tensor y({w.shape[0], d.out_len()});
  kernels::conv1d_forward(d, x.data.data(), w.data.data(), b.data.data(), y.data.data());
  return y;
}

Tensor convt_fwd(const Tensor& w, const Tensor& b, const Tensor& x, int stride) {
  if (w.shape[1] != x.shape[0])
    raise(ErrorKind::shape, "transposed conv input has " + std::to_string(x.shape[0]) + " channels, weight expects " +
                                std::to_string(w.shape[1]));
  kernels::ConvTDims d{x.shape[0], w.shape[0], stride, x.shape[1]};
  Tensor y({w.shape[0], d.out_len()});
  kernels::convt1d_forward(d, x.data.data(), w.data.data(), b.data.data(), y.data.data());
  return y;
}

Tensor ln_fwd(const LayerNormParams& p, const Tensor& x) {
  const int C = x.shape[0], T = x.shape[1];
  Tensor y({C, T});
  std::vector<double> mean(static_cast<size_t>(T)), istd(static_cast<size_t>(T));
  kernels::layer_norm_forward(C, T, x.data.data(), p.gain.data.data(), p.bias.data.data(), kLnEps, y.data.data(),
                              mean.data(), istd.data());
  return y;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v > 0.0 ? v : 0.0;
}
void lrelu_inplace(Tensor& t, double slope) {
  for (double& v : t.data) v = v > 0.0 ? v : slope * v;
}

void fill_gauss(Tensor& t, double std, rng::Stream& s) {
  for (double& v : t.data) v = std * s.gauss();
}

void init_conv(ConvParams& p, int out, int in, int k, int dilation, int stride, rng::Stream& s) {
  p.w = Tensor({out, in, k});
  p.b = Tensor({out});
  p.dilation = dilation;
  p.stride = stride;
  fill_gauss(p.w, std::sqrt(1.0 / (static_cast<double>(in) * k)), s);
}

void init_wn_norms(Tensor& g, const Tensor& v) {
  const int out = v.shape[0];
  const int64_t block = static_cast<int64_t>(v.data.size()) / out;
  g = Tensor({out});
  for (int o = 0; o < out; ++o) {
    const double* vo = v.data.data() + o * block;
    double ss = 0.0;
    for (int64_t j = 0; j < block; ++j) ss += vo[j] * vo[j];
    g.data[static_cast<size_t>(o)] = std::sqrt(ss);
  }
}

void init_wn_conv(WnConvParams& p, int out, int in, int k, int dilation, int stride, rng::Stream& s) {
  p.v = Tensor({out, in, k});
  p.b = Tensor({out});
  p.dilation = dilation;
  p.stride = stride;
  fill_gauss(p.v, std::sqrt(1.0 / (static_cast<double>(in) * k)), s);
  init_wn_norms(p.g, p.v);
}

void init_wn_convt(WnConvTParams& p, int out, int in, int stride, rng::Stream& s) {
  p.v = Tensor({out, in, stride});
  p.b = Tensor({out});
  p.stride = stride;
  fill_gauss(p.v, std::sqrt(1.0 / (static_cast<double>(in) * stride)), s);
  init_wn_norms(p.g, p.v);
}

void init_ln(LayerNormParams& p, int C) {
  p.gain = Tensor({C});
  p.bias = Tensor({C});
  std::fill(p.gain.data.begin(), p.gain.data.end(), 1.0);
}

// Graph-side helpers mirroring the direct path layer for layer.

Graph::Value wn_weight(Graph& g, WnConvParams& p, bool trainable) {
  return g.weight_norm(g.param(p.v, trainable), g.param(p.g, trainable));
}

Graph::Value residual_layer_graph(Graph& g, ResidualLayer& r, Graph::Value x, bool trainable) {
  auto h = g.layer_norm(x, g.param(r.norm.gain, trainable), g.param(r.norm.bias, trainable), kLnEps);
  h = g.conv1d(h, wn_weight(g, r.conv, trainable), g.param(r.conv.b, trainable), r.conv.dilation, r.conv.stride);
  h = g.relu(h);
  h = g.conv1d(h, wn_weight(g, r.proj, trainable), g.param(r.proj.b, trainable), 1, 1);
  return g.add(x, h);
}

}  // namespace

void validate(const ModelConfig& cfg) {
  const auto& e = cfg.encoder;
  if (e.n_blocks < 1 || e.kernel_size < 1 || e.dilation_base < 1)
    raise(ErrorKind::config, "encoder depth, kernel, and dilation base must be >= 1");
  if (e.input_channels < 2 || e.hidden_channels < 1 || e.embedding_dim < 1)
    raise(ErrorKind::config, "encoder channel counts out of range");
  if (e.input_channels != cfg.frontend.n_mels + 1)
    raise(ErrorKind::config, "encoder expects " + std::to_string(e.input_channels) + " input channels but frontend yields " +
                                 std::to_string(cfg.frontend.n_mels) + " mel bands + 1 flag");

  const auto& d = cfg.decoder;
  if (d.strides.empty() || d.strides.size() != d.residual_layers_per_block.size())
    raise(ErrorKind::config, "decoder strides and residual depths must pair up");
  for (int s : d.strides)
    if (s < 1) raise(ErrorKind::config, "decoder strides must be >= 1");
  for (int r : d.residual_layers_per_block)
    if (r < 0) raise(ErrorKind::config, "residual layer counts must be >= 0");
  if (stride_product(d.strides) != cfg.frontend.hop)
    raise(ErrorKind::config, "decoder stride product " + std::to_string(stride_product(d.strides)) +
                                 " must equal the frame hop " + std::to_string(cfg.frontend.hop));
  if (d.residual_channels < 1 || d.kernel_size < 1 || d.dilation_base < 1)
    raise(ErrorKind::config, "decoder residual configuration out of range");

  const auto& di = cfg.discriminator;
  if (di.kernels.empty() || di.kernels.size() != di.strides.size() || di.kernels.size() != di.channels.size())
    raise(ErrorKind::config, "discriminator kernels, strides, and channels must align");
  for (size_t i = 0; i < di.kernels.size(); ++i)
    if (di.kernels[i] < 1 || di.strides[i] < 1 || di.channels[i] < 1)
      raise(ErrorKind::config, "discriminator layer parameters must be >= 1");
  if (!(di.leaky_slope > 0.0 && di.leaky_slope < 1.0))
    raise(ErrorKind::config, "leaky slope must lie in (0,1)");
  if (di.pool_factors.empty()) raise(ErrorKind::config, "at least one discriminator rate is required");
  for (int f : di.pool_factors)
    if (f < 1) raise(ErrorKind::config, "pool factors must be >= 1");

  const auto& fr = cfg.frontend;
  if (fr.sample_rate < 1 || fr.hop < 1 || fr.window < fr.hop || fr.fft_size < fr.window || fr.n_mels < 1)
    raise(ErrorKind::config, "frontend needs sample_rate >= 1, window >= hop >= 1, fft >= window, n_mels >= 1");
}

std::string model_config_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = cfg.schema_version;
  j["encoder"] = {{"n_blocks", cfg.encoder.n_blocks},
                  {"kernel_size", cfg.encoder.kernel_size},
                  {"dilation_base", cfg.encoder.dilation_base},
                  {"input_channels", cfg.encoder.input_channels},
                  {"hidden_channels", cfg.encoder.hidden_channels},
                  {"embedding_dim", cfg.encoder.embedding_dim}};
  j["decoder"] = {{"strides", cfg.decoder.strides},
                  {"residual_layers_per_block", cfg.decoder.residual_layers_per_block},
                  {"residual_channels", cfg.decoder.residual_channels},
                  {"kernel_size", cfg.decoder.kernel_size},
                  {"dilation_base", cfg.decoder.dilation_base}};
  j["discriminator"] = {{"kernels", cfg.discriminator.kernels},
                        {"strides", cfg.discriminator.strides},
                        {"channels", cfg.discriminator.channels},
                        {"leaky_slope", cfg.discriminator.leaky_slope},
                        {"pool_factors", cfg.discriminator.pool_factors}};
  j["frontend"] = {{"sample_rate", cfg.frontend.sample_rate},
                   {"fft_size", cfg.frontend.fft_size},
                   {"window", cfg.frontend.window},
                   {"hop", cfg.frontend.hop},
                   {"n_mels", cfg.frontend.n_mels}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::io, std::string("model config is not valid json: ") + e.what());
  }
  ModelConfig cfg;
  try {
    if (j.contains("schema_version")) cfg.schema_version = j["schema_version"].get<int>();
    if (cfg.schema_version != 1)
      raise(ErrorKind::config, "unsupported model config schema_version " + std::to_string(cfg.schema_version));
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      if (e.contains("n_blocks")) cfg.encoder.n_blocks = e["n_blocks"].get<int>();
      if (e.contains("kernel_size")) cfg.encoder.kernel_size = e["kernel_size"].get<int>();
      if (e.contains("dilation_base")) cfg.encoder.dilation_base = e["dilation_base"].get<int>();
      if (e.contains("input_channels")) cfg.encoder.input_channels = e["input_channels"].get<int>();
      if (e.contains("hidden_channels")) cfg.encoder.hidden_channels = e["hidden_channels"].get<int>();
      if (e.contains("embedding_dim")) cfg.encoder.embedding_dim = e["embedding_dim"].get<int>();
    }
    if (j.contains("decoder")) {
      const auto& d = j["decoder"];
      if (d.contains("strides")) cfg.decoder.strides = d["strides"].get<std::vector<int>>();
      if (d.contains("residual_layers_per_block"))
        cfg.decoder.residual_layers_per_block = d["residual_layers_per_block"].get<std::vector<int>>();
      if (d.contains("residual_channels")) cfg.decoder.residual_channels = d["residual_channels"].get<int>();
      if (d.contains("kernel_size")) cfg.decoder.kernel_size = d["kernel_size"].get<int>();
      if (d.contains("dilation_base")) cfg.decoder.dilation_base = d["dilation_base"].get<int>();
    }
    if (j.contains("discriminator")) {
      const auto& di = j["discriminator"];
      if (di.contains("kernels")) cfg.discriminator.kernels = di["kernels"].get<std::vector<int>>();
      if (di.contains("strides")) cfg.discriminator.strides = di["strides"].get<std::vector<int>>();
      if (di.contains("channels")) cfg.discriminator.channels = di["channels"].get<std::vector<int>>();
      if (di.contains("leaky_slope")) cfg.discriminator.leaky_slope = di["leaky_slope"].get<double>();
      if (di.contains("pool_factors")) cfg.discriminator.pool_factors = di["pool_factors"].get<std::vector<int>>();
    }
    if (j.contains("frontend")) {
      const auto& fr = j["frontend"];
      if (fr.contains("sample_rate")) cfg.frontend.sample_rate = fr["sample_rate"].get<int>();
      if (fr.contains("fft_size")) cfg.frontend.fft_size = fr["fft_size"].get<int>();
      if (fr.contains("window")) cfg.frontend.window = fr["window"].get<int>();
      if (fr.contains("hop")) cfg.frontend.hop = fr["hop"].get<int>();
      if (fr.contains("n_mels")) cfg.frontend.n_mels = fr["n_mels"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::io, std::string("model config field has the wrong type: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

PlaaeModel build_model(const ModelConfig& cfg, rng::Stream& init) {
  validate(cfg);
  PlaaeModel m;
  m.cfg = cfg;

  const auto& e = cfg.encoder;
  int dil = 1;
  int in_ch = e.input_channels;
  for (int i = 0; i < e.n_blocks; ++i) {
    EncoderBlock blk;
    init_ln(blk.norm, in_ch);
    init_conv(blk.conv, e.hidden_channels, in_ch, e.kernel_size, dil, 1, init);
    m.encoder.blocks.push_back(std::move(blk));
    in_ch = e.hidden_channels;
    dil *= e.dilation_base;
  }
  init_conv(m.encoder.proj, e.embedding_dim, e.hidden_channels, 1, 1, 1, init);

  const auto& d = cfg.decoder;
  int ch = e.embedding_dim;
  for (size_t b = 0; b < d.strides.size(); ++b) {
    DecoderBlock blk;
    init_wn_convt(blk.up, d.residual_channels, ch, d.strides[b], init);
    ch = d.residual_channels;
    int rdil = 1;
    for (int l = 0; l < d.residual_layers_per_block[b]; ++l) {
      ResidualLayer r;
      init_ln(r.norm, ch);
      init_wn_conv(r.conv, ch, ch, d.kernel_size, rdil, 1, init);
      init_wn_conv(r.proj, ch, ch, 1, 1, 1, init);
      blk.layers.push_back(std::move(r));
      rdil *= d.dilation_base;
    }
    m.decoder.blocks.push_back(std::move(blk));
  }
  init_wn_conv(m.decoder.out_proj, 1, ch, 1, 1, 1, init);

  const auto& di = cfg.discriminator;
  for (int f : di.pool_factors) {
    Discriminator disc;
    disc.pool_factor = f;
    int dch = 1;
    for (size_t l = 0; l < di.kernels.size(); ++l) {
      WnConvParams layer;
      init_wn_conv(layer, di.channels[l], dch, di.kernels[l], 1, di.strides[l], init);
      disc.stack.push_back(std::move(layer));
      dch = di.channels[l];
    }
    init_wn_conv(disc.score, 1, dch, 1, 1, 1, init);
    m.discriminators.push_back(std::move(disc));
  }
  return m;
}

void visit_params(PlaaeModel& m, const std::function<void(const std::string&, Tensor&)>& fn) {
  for (size_t i = 0; i < m.encoder.blocks.size(); ++i) {
    auto& b = m.encoder.blocks[i];
    const std::string p = "enc.block" + std::to_string(i);
    fn(p + ".norm.gain", b.norm.gain);
    fn(p + ".norm.bias", b.norm.bias);
    fn(p + ".conv.w", b.conv.w);
    fn(p + ".conv.b", b.conv.b);
  }
  fn("enc.proj.w", m.encoder.proj.w);
  fn("enc.proj.b", m.encoder.proj.b);

  for (size_t bi = 0; bi < m.decoder.blocks.size(); ++bi) {
    auto& b = m.decoder.blocks[bi];
    const std::string p = "dec.block" + std::to_string(bi);
    fn(p + ".up.v", b.up.v);
    fn(p + ".up.g", b.up.g);
    fn(p + ".up.b", b.up.b);
    for (size_t l = 0; l < b.layers.size(); ++l) {
      auto& r = b.layers[l];
      const std::string q = p + ".res" + std::to_string(l);
      fn(q + ".norm.gain", r.norm.gain);
      fn(q + ".norm.bias", r.norm.bias);
      fn(q + ".conv.v", r.conv.v);
      fn(q + ".conv.g", r.conv.g);
      fn(q + ".conv.b", r.conv.b);
      fn(q + ".proj.v", r.proj.v);
      fn(q + ".proj.g", r.proj.g);
      fn(q + ".proj.b", r.proj.b);
    }
  }
  fn("dec.out.v", m.decoder.out_proj.v);
  fn("dec.out.g", m.decoder.out_proj.g);
  fn("dec.out.b", m.decoder.out_proj.b);

  for (size_t di = 0; di < m.discriminators.size(); ++di) {
    auto& disc = m.discriminators[di];
    const std::string p = "disc" + std::to_string(di);
    for (size_t l = 0; l < disc.stack.size(); ++l) {
      const std::string q = p + ".layer" + std::to_string(l);
      fn(q + ".v", disc.stack[l].v);
      fn(q + ".g", disc.stack[l].g);
      fn(q + ".b", disc.stack[l].b);
    }
    fn(p + ".score.v", disc.score.v);
    fn(p + ".score.g", disc.score.g);
    fn(p + ".score.b", disc.score.b);
  }
}

int64_t param_count(const PlaaeModel& m) {
  int64_t n = 0;
  visit_params(const_cast<PlaaeModel&>(m), [&](const std::string&, Tensor& t) { n += t.numel(); });
  return n;
}

int64_t generator_param_count(const PlaaeModel& m) {
  int64_t n = 0;
  visit_params(const_cast<PlaaeModel&>(m), [&](const std::string& name, Tensor& t) {
    if (name.rfind("enc.", 0) == 0 || name.rfind("dec.", 0) == 0) n += t.numel();
  });
  return n;
}

ReceptiveField receptive_field(const EncoderConfig& enc, int hop, int sample_rate) {
  int64_t dil_sum = 0;
  int64_t dil = 1;
  for (int i = 0; i < enc.n_blocks; ++i) {
    dil_sum += dil;
    dil *= enc.dilation_base;
  }
  ReceptiveField rf;
  rf.frames = static_cast<int>(1 + static_cast<int64_t>(enc.kernel_size - 1) * dil_sum);
  rf.seconds = static_cast<double>(rf.frames) * hop / sample_rate;
  return rf;
}

Tensor encode(const PlaaeModel& m, const Tensor& features) {
  if (features.shape.size() != 2 || features.shape[0] != m.cfg.encoder.input_channels)
    raise(ErrorKind::config, "encoder expects " + std::to_string(m.cfg.encoder.input_channels) +
                                 " feature channels, got " + shape_str(features.shape));
  Tensor x = features;
  for (const auto& blk : m.encoder.blocks) {
    Tensor h = ln_fwd(blk.norm, x);
    h = conv_fwd(blk.conv.w, blk.conv.b, h, blk.conv.dilation, blk.conv.stride);
    relu_inplace(h);
    x = std::move(h);
  }
  return conv_fwd(m.encoder.proj.w, m.encoder.proj.b, x, 1, 1);
}

dsp::AudioBuffer decode(const PlaaeModel& m, const Tensor& emb) {
  if (emb.shape.size() != 2 || emb.shape[0] != m.cfg.encoder.embedding_dim)
    raise(ErrorKind::shape, "decoder expects " + std::to_string(m.cfg.encoder.embedding_dim) +
                                " embedding channels, got " + shape_str(emb.shape));
  Tensor x = emb;
  for (const auto& blk : m.decoder.blocks) {
    x = convt_fwd(materialize_wn(blk.up.v, blk.up.g), blk.up.b, x, blk.up.stride);
    for (const auto& r : blk.layers) {
      Tensor h = ln_fwd(r.norm, x);
      h = conv_fwd(materialize_wn(r.conv.v, r.conv.g), r.conv.b, h, r.conv.dilation, r.conv.stride);
      relu_inplace(h);
      h = conv_fwd(materialize_wn(r.proj.v, r.proj.g), r.proj.b, h, 1, 1);
      for (size_t j = 0; j < x.data.size(); ++j) h.data[j] = x.data[j] + h.data[j];
      x = std::move(h);
    }
  }
  Tensor y = conv_fwd(materialize_wn(m.decoder.out_proj.v, m.decoder.out_proj.g), m.decoder.out_proj.b, x, 1, 1);
  dsp::AudioBuffer out;
  out.sample_rate = m.cfg.frontend.sample_rate;
  out.samples.resize(y.data.size());
  for (size_t j = 0; j < y.data.size(); ++j) out.samples[j] = std::tanh(y.data[j]);
  return out;
}

std::vector<double> discriminator_input(const dsp::AudioBuffer& audio, int factor) {
  if (factor == 1) return audio.samples;
  return dsp::average_pool_resample(audio, factor).samples;
}

std::vector<Tensor> discriminate(const PlaaeModel& m, const dsp::AudioBuffer& audio) {
  std::vector<Tensor> scores;
  for (const auto& disc : m.discriminators) {
    std::vector<double> pooled = discriminator_input(audio, disc.pool_factor);
    const int pooled_len = static_cast<int>(pooled.size());
    Tensor x({1, pooled_len}, std::move(pooled));
    for (const auto& layer : disc.stack) {
      x = conv_fwd(materialize_wn(layer.v, layer.g), layer.b, x, layer.dilation, layer.stride);
      lrelu_inplace(x, m.cfg.discriminator.leaky_slope);
    }
    scores.push_back(conv_fwd(materialize_wn(disc.score.v, disc.score.g), disc.score.b, x, 1, 1));
  }
  return scores;
}

Tensor features_from_lossy(const PlaaeModel& m, const dsp::AudioBuffer& lossy, const packetsim::LossMask& mask) {
  const auto& fr = m.cfg.frontend;
  if (lossy.length() < fr.hop)
    raise(ErrorKind::length, "signal of " + std::to_string(lossy.length()) + " samples is shorter than one frame hop");
  const int expected = packetsim::packetize(lossy.length(), mask.packet_length);
  if (mask.packet_count() != expected)
    raise(ErrorKind::length, "mask has " + std::to_string(mask.packet_count()) + " packets but the signal holds " +
                                 std::to_string(expected));

  dsp::AudioBuffer padded;
  padded.sample_rate = lossy.sample_rate;
  const int pad = fr.window - fr.hop;
  padded.samples.assign(static_cast<size_t>(pad), 0.0);
  padded.samples.insert(padded.samples.end(), lossy.samples.begin(), lossy.samples.end());

  dsp::MelConfig mel_cfg;
  mel_cfg.n_mels = fr.n_mels;
  mel_cfg.f_min = 0.0;
  mel_cfg.f_max = fr.sample_rate / 2.0;
  mel_cfg.stft = {fr.fft_size, fr.window, fr.hop};
  const Tensor mel = dsp::mel_spectrogram(padded, mel_cfg);
  const int F = mel.shape[1];

  const std::vector<double> flags = packetsim::flag_frames(mask, F, fr.window, fr.hop, fr.hop - fr.window);

  Tensor features({fr.n_mels + 1, F});
  std::copy(mel.data.begin(), mel.data.end(), features.data.begin());
  std::copy(flags.begin(), flags.end(), features.data.begin() + static_cast<size_t>(fr.n_mels) * F);
  return features;
}

dsp::AudioBuffer conceal_forward(const PlaaeModel& m, const dsp::AudioBuffer& lossy,
                                 const packetsim::LossMask& mask) {
  return decode(m, encode(m, features_from_lossy(m, lossy, mask)));
}

Graph::Value encode_graph(Graph& g, PlaaeModel& m, Graph::Value features, bool trainable) {
  if (g.val(features).shape[0] != m.cfg.encoder.input_channels)
    raise(ErrorKind::config, "encoder expects " + std::to_string(m.cfg.encoder.input_channels) +
                                 " feature channels, got " + shape_str(g.val(features).shape));
  Graph::Value x = features;
  for (auto& blk : m.encoder.blocks) {
    auto h = g.layer_norm(x, g.param(blk.norm.gain, trainable), g.param(blk.norm.bias, trainable), kLnEps);
    h = g.conv1d(h, g.param(blk.conv.w, trainable), g.param(blk.conv.b, trainable), blk.conv.dilation,
                 blk.conv.stride);
    x = g.relu(h);
  }
  return g.conv1d(x, g.param(m.encoder.proj.w, trainable), g.param(m.encoder.proj.b, trainable), 1, 1);
}

Graph::Value decode_graph(Graph& g, PlaaeModel& m, Graph::Value emb, bool trainable) {
  Graph::Value x = emb;
  for (auto& blk : m.decoder.blocks) {
    auto w = g.weight_norm(g.param(blk.up.v, trainable), g.param(blk.up.g, trainable));
    x = g.convt1d(x, w, g.param(blk.up.b, trainable));
    for (auto& r : blk.layers) x = residual_layer_graph(g, r, x, trainable);
  }
  auto y = g.conv1d(x, wn_weight(g, m.decoder.out_proj, trainable), g.param(m.decoder.out_proj.b, trainable), 1, 1);
  return g.tanh_(y);
}

std::vector<Graph::Value> discriminate_graph(Graph& g, PlaaeModel& m, Graph::Value audio, bool trainable) {
  std::vector<Graph::Value> scores;
  for (auto& disc : m.discriminators) {
    Graph::Value x = disc.pool_factor == 1 ? audio : g.avg_pool(audio, disc.pool_factor);
    for (auto& layer : disc.stack) {
      x = g.conv1d(x, wn_weight(g, layer, trainable), g.param(layer.b, trainable), layer.dilation, layer.stride);
      x = g.leaky_relu(x, m.cfg.discriminator.leaky_slope);
    }
    scores.push_back(g.conv1d(x, wn_weight(g, disc.score, trainable), g.param(disc.score.b, trainable), 1, 1));
  }
  return scores;
}

}  // namespace plaae::model

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plaae/dsp.hpp"
#include "plaae/graph.hpp"
#include "plaae/packetsim.hpp"
#include "plaae/rng.hpp"
#include "plaae/tensor.hpp"

namespace plaae::model {

// Causal convolutional encoder over acoustic features. Block i dilates its
// convolution by dilation_base^i, so depth buys an exponential receptive field.
struct EncoderConfig {
  int n_blocks = 5;
  int kernel_size = 3;
  int dilation_base = 3;
  int input_channels = 81;  // 80 mel bands + 1 loss flag
  int hidden_channels = 128;
  int embedding_dim = 128;
};

// Upsampling decoder: per block one non-overlapping transposed convolution
// (stride == kernel, hence causal) followed by causal residual layers whose
// dilation grows as dilation_base^l. The stride product must equal the
// frame hop so frames map exactly onto 160-sample blocks.
struct DecoderConfig {
  std::vector<int> strides = {5, 4, 4, 2};
  std::vector<int> residual_layers_per_block = {1, 2, 3, 4};
  int residual_channels = 64;
  int kernel_size = 3;
  int dilation_base = 3;
};

// One score head per input rate; all three share this architecture.
struct DiscriminatorConfig {
  std::vector<int> kernels = {15, 41, 41, 41, 5, 3};
  std::vector<int> strides = {1, 4, 4, 4, 1, 1};
  std::vector<int> channels = {16, 32, 64, 64, 64, 64};
  double leaky_slope = 0.2;
  std::vector<int> pool_factors = {1, 4, 16};  // 16, 4, and 1 kHz views
};

struct FrontendConfig {
  int sample_rate = 16000;
  int fft_size = 1024;
  int window = 320;  // 20 ms
  int hop = 160;     // 10 ms
  int n_mels = 80;
};

struct ModelConfig {
  int schema_version = 1;
  EncoderConfig encoder;
  DecoderConfig decoder;
  DiscriminatorConfig discriminator;
  FrontendConfig frontend;
};

void validate(const ModelConfig& cfg);  // config Error on any broken invariant

std::string model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Parameter bundles. Weight-normalized layers store direction v and magnitude
// g separately; the effective weight is g[o] * v[o,:] / ||v[o,:]||.
struct LayerNormParams {
  Tensor gain, bias;  // [C]
};
struct ConvParams {
  Tensor w, b;  // w: [out x in x k]
  int dilation = 1;
  int stride = 1;
};
struct WnConvParams {
  Tensor v, g, b;  // v: [out x in x k]
  int dilation = 1;
  int stride = 1;
};
struct WnConvTParams {
  Tensor v, g, b;  // v: [out x in x S], stride == kernel == S
  int stride = 1;
};

struct EncoderBlock {
  LayerNormParams norm;
  ConvParams conv;
};
struct Encoder {
  std::vector<EncoderBlock> blocks;
  ConvParams proj;  // 1x1 to the embedding dimension
};

struct ResidualLayer {
  LayerNormParams norm;
  WnConvParams conv;  // k x dilated
  WnConvParams proj;  // 1x1 back to the residual width
};
struct DecoderBlock {
  WnConvTParams up;
  std::vector<ResidualLayer> layers;
};
struct Decoder {
  std::vector<DecoderBlock> blocks;
  WnConvParams out_proj;  // 1x1 to one channel, then tanh
};

struct Discriminator {
  int pool_factor = 1;
  std::vector<WnConvParams> stack;
  WnConvParams score;  // 1x1 score map, no activation
};

struct PlaaeModel {
  ModelConfig cfg;
  Encoder encoder;
  Decoder decoder;
  std::vector<Discriminator> discriminators;
};

// Gaussian init with std sqrt(1/(in*k)) per weight tensor; weight-normalized
// layers start with g = ||v|| so the initial effective weight equals v.
// Draw order is fixed, so one seed pins every parameter.
PlaaeModel build_model(const ModelConfig& cfg, rng::Stream& init);

// Visits every parameter tensor in a fixed order with a stable dotted name.
void visit_params(PlaaeModel& m, const std::function<void(const std::string&, Tensor&)>& fn);
int64_t param_count(const PlaaeModel& m);
int64_t generator_param_count(const PlaaeModel& m);  // encoder + decoder only

struct ReceptiveField {
  int frames = 0;
  double seconds = 0.0;
};
// 1 + (k-1) * sum of dilations over the frame-rate path (1x1 layers add 0).
ReceptiveField receptive_field(const EncoderConfig& enc, int hop, int sample_rate);

// Direct inference path. Calls the same kernels in the same order as the graph
// builders below, so both produce bit-identical outputs.
Tensor encode(const PlaaeModel& m, const Tensor& features);        // [81xF] -> [ExF]
dsp::AudioBuffer decode(const PlaaeModel& m, const Tensor& emb);   // [ExF] -> F*160 samples
std::vector<Tensor> discriminate(const PlaaeModel& m, const dsp::AudioBuffer& audio);

// Mel features of the lossy waveform plus the loss-flag row. The waveform is
// left-padded by (window - hop) zeros before analysis, so frame t sees samples
// [t*hop - (window-hop), t*hop + hop) and the decoder's block t never depends
// on samples at or after (t+1)*hop: end-to-end causality stays frame-aligned.
Tensor features_from_lossy(const PlaaeModel& m, const dsp::AudioBuffer& lossy, const packetsim::LossMask& mask);

// Single non-autoregressive pass over the zero-filled lossy signal. Output
// length = floor(len/hop) * hop.
dsp::AudioBuffer conceal_forward(const PlaaeModel& m, const dsp::AudioBuffer& lossy,
                                 const packetsim::LossMask& mask);

// Pooled discriminator input, exposed so tests can pin it against the dsp
// resampler. factor 1 returns the samples unchanged.
std::vector<double> discriminator_input(const dsp::AudioBuffer& audio, int factor);

// Training-path builders. `trainable` false freezes the parameters: values are
// used, gradients flow through to the op inputs, none are collected.
Graph::Value encode_graph(Graph& g, PlaaeModel& m, Graph::Value features, bool trainable);
Graph::Value decode_graph(Graph& g, PlaaeModel& m, Graph::Value emb, bool trainable);  // [1 x F*160]
std::vector<Graph::Value> discriminate_graph(Graph& g, PlaaeModel& m, Graph::Value audio, bool trainable);

}  // namespace plaae::model

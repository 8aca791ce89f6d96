#pragma once

#include <vector>

#include "plaae/dsp.hpp"
#include "plaae/graph.hpp"
#include "plaae/tensor.hpp"

namespace plaae::losses {

struct Resolution {
  int fft_size = 1024;
  int hop = 120;
  int window_length = 600;
};

struct MultiStftConfig {
  std::vector<Resolution> resolutions;
  double alpha = 1.0;
};

// R=3 setup used throughout; replaceable configuration, recorded in reports.
MultiStftConfig canonical_multi_stft();

// Least-squares adversarial objectives. Score maps are averaged per
// discriminator first, then across discriminators, so each rate counts
// equally regardless of map size.
double lsgan_discriminator_loss(const std::vector<Tensor>& scores_real, const std::vector<Tensor>& scores_fake);
double lsgan_generator_adv_loss(const std::vector<Tensor>& scores_fake);

double spectral_convergence(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est, const Resolution& res);
double log_magnitude_loss(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est, const Resolution& res);

// (1/R)·Σ_r (L_SC^r + L_MAG^r); the per-resolution terms are summed in
// value-sorted order so permuting the resolution list is bit-neutral.
double multi_stft_loss(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est, const MultiStftConfig& cfg);

double generator_total_loss(const dsp::AudioBuffer& ref, const dsp::AudioBuffer& est,
                            const std::vector<Tensor>& scores_fake, const MultiStftConfig& cfg);

// Graph builders for training. The reference side enters as constants; only
// est (and score maps built on it) carry gradients.
Graph::Value multi_stft_loss_graph(Graph& g, const std::vector<double>& ref, Graph::Value est,
                                   const MultiStftConfig& cfg);
Graph::Value lsgan_discriminator_loss_graph(Graph& g, const std::vector<Graph::Value>& scores_real,
                                            const std::vector<Graph::Value>& scores_fake);
Graph::Value lsgan_generator_adv_loss_graph(Graph& g, const std::vector<Graph::Value>& scores_fake);

}  // namespace plaae::losses

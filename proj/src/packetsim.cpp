#include "plaae/packetsim.hpp"

#include <algorithm>

#include <json.hpp>

#include "plaae/error.hpp"
#include "plaae/rng.hpp"

namespace plaae::packetsim {

int LossMask::loss_count() const {
  return static_cast<int>(std::count(bits.begin(), bits.end(), true));
}

int packetize(int n_samples, int packet_length) {
  if (packet_length < 1) raise(ErrorKind::config, "packet length must be >= 1");
  if (n_samples < 0) raise(ErrorKind::length, "negative sample count");
  return n_samples / packet_length;
}

LossMask inject_losses(int packet_count, const LossProtocol& protocol) {
  if (packet_count < 0) raise(ErrorKind::length, "negative packet count");
  if (protocol.drop_probability < 0.0 || protocol.drop_probability > 1.0)
    raise(ErrorKind::config, "drop probability must be in [0,1]");
  if (protocol.gap_length_packets < 1) raise(ErrorKind::config, "gap length must be >= 1 packet");

  LossMask mask;
  mask.bits.assign(static_cast<size_t>(packet_count), false);
  rng::Stream stream(protocol.seed);
  for (int i = 0; i < packet_count; ++i) {
    const bool eligible = i == 0 || !mask.bits[static_cast<size_t>(i) - 1];
    if (!eligible) continue;
    if (stream.uniform() >= protocol.drop_probability) continue;
    if (i + protocol.gap_length_packets > packet_count) continue;  // would overrun: event skipped
    for (int j = 0; j < protocol.gap_length_packets; ++j) mask.bits[static_cast<size_t>(i) + j] = true;
  }
  return mask;
}

std::vector<double> flag_frames(const LossMask& mask, int n_frames, int window, int hop, int offset) {
  if (n_frames < 0) raise(ErrorKind::length, "negative frame count");
  if (window < 1 || hop < 1) raise(ErrorKind::config, "window and hop must be >= 1");
  std::vector<double> flags(static_cast<size_t>(n_frames), 0.0);
  const int64_t L = mask.packet_length;
  for (int t = 0; t < n_frames; ++t) {
    const int64_t lo = static_cast<int64_t>(t) * hop + offset;
    const int64_t hi = lo + window;
    // Packets intersecting [lo, hi): p*L < hi and (p+1)*L > lo.
    int64_t p_first = lo >= 0 ? lo / L : -((-lo + L - 1) / L);
    if (p_first < 0) p_first = 0;
    for (int64_t p = p_first; p < mask.packet_count() && p * L < hi; ++p) {
      if (mask.bits[static_cast<size_t>(p)] && (p + 1) * L > lo) {
        flags[static_cast<size_t>(t)] = 1.0;
        break;
      }
    }
  }
  return flags;
}

MaskedAudio apply_mask(const dsp::AudioBuffer& audio, const LossMask& mask) {
  const int expected = packetize(audio.length(), mask.packet_length);
  if (mask.packet_count() != expected)
    raise(ErrorKind::length, "mask has " + std::to_string(mask.packet_count()) + " packets but the signal holds " +
                                 std::to_string(expected));
  MaskedAudio out;
  out.lossy = audio;
  for (int p = 0; p < mask.packet_count(); ++p) {
    if (!mask.bits[static_cast<size_t>(p)]) continue;
    const int64_t base = static_cast<int64_t>(p) * mask.packet_length;
    std::fill(out.lossy.samples.begin() + base, out.lossy.samples.begin() + base + mask.packet_length, 0.0);
  }
  dsp::StftConfig stft;
  const int n_frames = audio.length() >= stft.window_length ? dsp::stft_frames(audio.length(), stft) : 0;
  out.flags = flag_frames(mask, n_frames, stft.window_length, stft.hop_length, 0);
  return out;
}

std::string mask_to_rle(const LossMask& mask) {
  std::string rle;
  size_t i = 0;
  while (i < mask.bits.size()) {
    const bool v = mask.bits[i];
    size_t j = i;
    while (j < mask.bits.size() && mask.bits[j] == v) ++j;
    rle += std::to_string(j - i);
    rle += v ? 'l' : 'k';
    i = j;
  }
  return rle;
}

LossMask mask_from_rle(const std::string& rle, int packet_length) {
  LossMask mask;
  mask.packet_length = packet_length;
  size_t i = 0;
  while (i < rle.size()) {
    size_t digits = 0;
    int64_t count = 0;
    while (i < rle.size() && rle[i] >= '0' && rle[i] <= '9') {
      count = count * 10 + (rle[i] - '0');
      if (count > 100000000) raise(ErrorKind::io, "rle run length out of range");
      ++i;
      ++digits;
    }
    if (digits == 0 || i == rle.size() || (rle[i] != 'k' && rle[i] != 'l'))
      raise(ErrorKind::io, "malformed rle mask at position " + std::to_string(i));
    mask.bits.insert(mask.bits.end(), static_cast<size_t>(count), rle[i] == 'l');
    ++i;
  }
  return mask;
}

std::string mask_sidecar_json(const LossMask& mask, const LossProtocol& protocol) {
  nlohmann::json j;
  j["packet_length"] = mask.packet_length;
  j["bits"] = mask_to_rle(mask);
  j["seed"] = protocol.seed;
  j["protocol"] = {{"drop_probability", protocol.drop_probability},
                   {"gap_length_packets", protocol.gap_length_packets}};
  return j.dump();
}

LossMask mask_from_sidecar_json(const std::string& text, LossProtocol* protocol_out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::io, std::string("mask sidecar is not valid json: ") + e.what());
  }
  if (!j.contains("packet_length") || !j.contains("bits"))
    raise(ErrorKind::io, "mask sidecar needs packet_length and bits");
  LossMask mask = mask_from_rle(j["bits"].get<std::string>(), j["packet_length"].get<int>());
  if (protocol_out) {
    *protocol_out = LossProtocol{};
    if (j.contains("seed")) protocol_out->seed = j["seed"].get<uint64_t>();
    if (j.contains("protocol")) {
      const auto& p = j["protocol"];
      if (p.contains("drop_probability")) protocol_out->drop_probability = p["drop_probability"].get<double>();
      if (p.contains("gap_length_packets")) protocol_out->gap_length_packets = p["gap_length_packets"].get<int>();
    }
  }
  return mask;
}

std::vector<Scenario> make_prediction_scenarios(
    const std::vector<std::pair<std::string, dsp::AudioBuffer>>& corpus, uint64_t seed) {
  std::vector<Scenario> out;
  for (const auto& [id, audio] : corpus) {
    const int sr = audio.sample_rate;
    const int past_len = sr;                 // 1 s
    const int future_len = sr * 3 / 25;      // 120 ms
    const int need = past_len + future_len;
    if (audio.length() < need) continue;
    rng::Stream stream = rng::utterance_stream(seed, id);
    Scenario s;
    s.utterance_id = id;
    s.start = static_cast<int>(stream.below(static_cast<uint64_t>(audio.length() - need) + 1));
    s.past.assign(audio.samples.begin() + s.start, audio.samples.begin() + s.start + past_len);
    s.future.assign(audio.samples.begin() + s.start + past_len,
                    audio.samples.begin() + s.start + past_len + future_len);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace plaae::packetsim

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "plaae/error.hpp"
#include "plaae/rng.hpp"
#include "plaae/wav.hpp"

using namespace plaae;
using wav::WavFile;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_u16(std::vector<unsigned char>& b, uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void push_u32(std::vector<unsigned char>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void push_tag(std::vector<unsigned char>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

// Hand-rolled container with configurable format fields and extra chunks.
std::vector<unsigned char> build_wav(uint16_t format, uint16_t channels, uint32_t rate,
                                     uint16_t bits, const std::vector<int16_t>& pcm,
                                     bool data_first = false, bool junk_chunk = false) {
  std::vector<unsigned char> fmt;
  push_tag(fmt, "fmt ");
  push_u32(fmt, 16);
  push_u16(fmt, format);
  push_u16(fmt, channels);
  push_u32(fmt, rate);
  push_u32(fmt, rate * channels * bits / 8);
  push_u16(fmt, static_cast<uint16_t>(channels * bits / 8));
  push_u16(fmt, bits);

  std::vector<unsigned char> data;
  push_tag(data, "data");
  push_u32(data, static_cast<uint32_t>(pcm.size() * 2));
  for (int16_t v : pcm) push_u16(data, static_cast<uint16_t>(v));

  std::vector<unsigned char> junk;
  if (junk_chunk) {
    push_tag(junk, "LIST");
    push_u32(junk, 5);  // odd on purpose: readers must skip the pad byte
    for (int i = 0; i < 5; ++i) junk.push_back(0xAB);
    junk.push_back(0);  // pad
  }

  std::vector<unsigned char> body;
  push_tag(body, "WAVE");
  if (data_first) {
    body.insert(body.end(), data.begin(), data.end());
    body.insert(body.end(), fmt.begin(), fmt.end());
  } else {
    body.insert(body.end(), junk.begin(), junk.end());
    body.insert(body.end(), fmt.begin(), fmt.end());
    body.insert(body.end(), junk.begin(), junk.end());
    body.insert(body.end(), data.begin(), data.end());
  }

  std::vector<unsigned char> all;
  push_tag(all, "RIFF");
  push_u32(all, static_cast<uint32_t>(body.size()));
  all.insert(all.end(), body.begin(), body.end());
  return all;
}

}  // namespace

TEST_CASE("quantize rounds half away from zero and clamps to int16") {
  CHECK(wav::quantize(0.0) == 0);
  CHECK(wav::quantize(1.5 / 32768.0) == 2);
  CHECK(wav::quantize(-1.5 / 32768.0) == -2);
  CHECK(wav::quantize(0.5 / 32768.0) == 1);
  CHECK(wav::quantize(-0.5 / 32768.0) == -1);
  CHECK(wav::quantize(1.49 / 32768.0) == 1);
  CHECK(wav::quantize(1.0) == 32767);
  CHECK(wav::quantize(2.0) == 32767);
  CHECK(wav::quantize(32766.6 / 32768.0) == 32767);
  CHECK(wav::quantize(-1.0) == -32768);
  CHECK(wav::quantize(-2.0) == -32768);
  CHECK(wav::dequantize(-32768) == -1.0);
  CHECK(wav::dequantize(16384) == 0.5);
  CHECK(wav::dequantize(0) == 0.0);
}

TEST_CASE("write then read preserves rate and stays within one quantization step") {
  rng::Stream s(501);
  WavFile f;
  f.sample_rate = 16000;
  f.samples.resize(4321);
  for (double& v : f.samples) v = s.uniform(-0.99, 0.99);

  const std::string path = tmp_path("plaae_roundtrip.wav");
  wav::write_wav(path, f);
  const WavFile back = wav::read_wav(path);
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == f.samples.size());
  for (size_t i = 0; i < back.samples.size(); ++i)
    CHECK(std::fabs(back.samples[i] - f.samples[i]) <= 1.0 / 32768.0);

  // Already-quantized values survive exactly, so a second write is byte-identical.
  const std::string path2 = tmp_path("plaae_roundtrip2.wav");
  wav::write_wav(path2, back);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("the emitted header is canonical 44-byte PCM") {
  WavFile f;
  f.sample_rate = 16000;
  f.samples = {0.0, 0.5, -1.0};
  const std::string path = tmp_path("plaae_header.wav");
  wav::write_wav(path, f);
  const auto bytes = slurp(path);
  REQUIRE(bytes.size() == 44 + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RIFF");
  CHECK(std::string(bytes.begin() + 8, bytes.begin() + 12) == "WAVE");
  CHECK(std::string(bytes.begin() + 12, bytes.begin() + 16) == "fmt ");
  CHECK(bytes[16] == 16);                     // fmt size
  CHECK(bytes[20] == 1);                      // PCM
  CHECK(bytes[22] == 1);                      // mono
  CHECK(bytes[24] == 0x80);                   // 16000 = 0x3E80
  CHECK(bytes[25] == 0x3E);
  CHECK(bytes[34] == 16);                     // bits per sample
  CHECK(std::string(bytes.begin() + 36, bytes.begin() + 40) == "data");
  CHECK(bytes[40] == 6);
  // samples: 0, 16384, -32768
  CHECK(bytes[44] == 0);
  CHECK(bytes[45] == 0);
  CHECK(bytes[46] == 0x00);
  CHECK(bytes[47] == 0x40);
  CHECK(bytes[48] == 0x00);
  CHECK(bytes[49] == 0x80);
}

TEST_CASE("the reader walks past unknown chunks with odd padding") {
  const std::vector<int16_t> pcm = {100, -200, 300, -400};
  const std::string path = tmp_path("plaae_chunks.wav");
  spit(path, build_wav(1, 1, 16000, 16, pcm, false, true));
  const WavFile f = wav::read_wav(path);
  CHECK(f.sample_rate == 16000);
  REQUIRE(f.samples.size() == 4);
  CHECK(f.samples[0] == 100.0 / 32768.0);
  CHECK(f.samples[3] == -400.0 / 32768.0);
}

TEST_CASE("non-16k rates survive the container and report faithfully") {
  const std::string path = tmp_path("plaae_8k.wav");
  spit(path, build_wav(1, 1, 8000, 16, {1, 2, 3}));
  CHECK(wav::read_wav(path).sample_rate == 8000);
}

TEST_CASE("unsupported containers are rejected with the path in the message") {
  const std::vector<int16_t> pcm = {1, 2};

  const std::string stereo = tmp_path("plaae_stereo.wav");
  spit(stereo, build_wav(1, 2, 16000, 16, pcm));
  CHECK_THROWS_AS(wav::read_wav(stereo), Error);
  try {
    wav::read_wav(stereo);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(std::string(e.what()).find(stereo) != std::string::npos);
    CHECK(std::string(e.what()).find("mono") != std::string::npos);
  }

  const std::string eightbit = tmp_path("plaae_8bit.wav");
  spit(eightbit, build_wav(1, 1, 16000, 8, pcm));
  CHECK_THROWS_AS(wav::read_wav(eightbit), Error);

  const std::string floatfmt = tmp_path("plaae_float.wav");
  spit(floatfmt, build_wav(3, 1, 16000, 32, pcm));
  CHECK_THROWS_AS(wav::read_wav(floatfmt), Error);

  const std::string disorder = tmp_path("plaae_disorder.wav");
  spit(disorder, build_wav(1, 1, 16000, 16, pcm, true));
  CHECK_THROWS_AS(wav::read_wav(disorder), Error);
}

TEST_CASE("missing, truncated, and chunkless files raise io errors") {
  CHECK_THROWS_AS(wav::read_wav(tmp_path("plaae_does_not_exist.wav")), Error);

  const std::string garbage = tmp_path("plaae_garbage.wav");
  spit(garbage, {'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'});
  CHECK_THROWS_AS(wav::read_wav(garbage), Error);

  auto good = build_wav(1, 1, 16000, 16, {1, 2, 3, 4});
  const std::string cut = tmp_path("plaae_cut.wav");
  spit(cut, std::vector<unsigned char>(good.begin(), good.end() - 3));
  CHECK_THROWS_AS(wav::read_wav(cut), Error);

  std::vector<unsigned char> no_data;
  push_tag(no_data, "RIFF");
  push_u32(no_data, 4);
  push_tag(no_data, "WAVE");
  const std::string empty = tmp_path("plaae_nodata.wav");
  spit(empty, no_data);
  CHECK_THROWS_AS(wav::read_wav(empty), Error);
}

TEST_CASE("zero-length audio round-trips") {
  WavFile f;
  f.sample_rate = 16000;
  const std::string path = tmp_path("plaae_empty.wav");
  wav::write_wav(path, f);
  const WavFile back = wav::read_wav(path);
  CHECK(back.samples.empty());
  CHECK(back.sample_rate == 16000);
}

#include "plaae/wav.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>

#include "plaae/error.hpp"

namespace plaae::wav {

namespace {

uint16_t get_u16(const std::vector<unsigned char>& b, size_t at) {
  return static_cast<uint16_t>(b[at] | (b[at + 1] << 8));
}

uint32_t get_u32(const std::vector<unsigned char>& b, size_t at) {
  return static_cast<uint32_t>(b[at]) | (static_cast<uint32_t>(b[at + 1]) << 8) |
         (static_cast<uint32_t>(b[at + 2]) << 16) |
         (static_cast<uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<unsigned char>& b, uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& b, uint32_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  b.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_tag(std::vector<unsigned char>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

bool tag_is(const std::vector<unsigned char>& b, size_t at, const char* tag) {
  return b[at] == static_cast<unsigned char>(tag[0]) &&
         b[at + 1] == static_cast<unsigned char>(tag[1]) &&
         b[at + 2] == static_cast<unsigned char>(tag[2]) &&
         b[at + 3] == static_cast<unsigned char>(tag[3]);
}

[[noreturn]] void bad_file(const std::string& path, const std::string& what) {
  raise(ErrorKind::io, path + ": " + what);
}

}  // namespace

int16_t quantize(double s) {
  const double scaled = std::round(s * 32768.0);
  if (scaled <= -32768.0) return std::numeric_limits<int16_t>::min();
  if (scaled >= 32767.0) return std::numeric_limits<int16_t>::max();
  return static_cast<int16_t>(scaled);
}

WavFile read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad_file(path, "cannot open file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    bad_file(path, "not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  WavFile out;
  bool have_data = false;

  size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const uint32_t chunk_size = get_u32(bytes, at + 4);
    const size_t body = at + 8;
    if (body + chunk_size > bytes.size())
      bad_file(path, "truncated chunk near byte " + std::to_string(at));
    if (tag_is(bytes, at, "fmt ")) {
      if (chunk_size < 16) bad_file(path, "fmt chunk too short");
      format = get_u16(bytes, body);
      channels = get_u16(bytes, body + 2);
      rate = get_u32(bytes, body + 4);
      bits = get_u16(bytes, body + 14);
      have_fmt = true;
    } else if (tag_is(bytes, at, "data")) {
      if (!have_fmt) bad_file(path, "data chunk precedes fmt chunk");
      if (format != 1) bad_file(path, "not PCM (format tag " + std::to_string(format) + ")");
      if (channels != 1)
        bad_file(path, "expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) bad_file(path, "expected 16-bit samples, got " + std::to_string(bits));
      const size_t n = chunk_size / 2;
      out.sample_rate = static_cast<int>(rate);
      out.samples.resize(n);
      for (size_t j = 0; j < n; ++j) {
        const uint16_t raw = get_u16(bytes, body + 2 * j);
        out.samples[j] = dequantize(static_cast<int16_t>(raw));
      }
      have_data = true;
    }
    // chunk bodies are padded to even length
    at = body + chunk_size + (chunk_size & 1);
  }
  if (!have_data) bad_file(path, "no data chunk");
  return out;
}

void write_wav(const std::string& path, const WavFile& file) {
  const uint32_t n = static_cast<uint32_t>(file.samples.size());
  const uint32_t data_bytes = n * 2;
  std::vector<unsigned char> bytes;
  bytes.reserve(44 + data_bytes);
  put_tag(bytes, "RIFF");
  put_u32(bytes, 36 + data_bytes);
  put_tag(bytes, "WAVE");
  put_tag(bytes, "fmt ");
  put_u32(bytes, 16);
  put_u16(bytes, 1);  // PCM
  put_u16(bytes, 1);  // mono
  put_u32(bytes, static_cast<uint32_t>(file.sample_rate));
  put_u32(bytes, static_cast<uint32_t>(file.sample_rate) * 2);  // byte rate
  put_u16(bytes, 2);   // block align
  put_u16(bytes, 16);  // bits per sample
  put_tag(bytes, "data");
  put_u32(bytes, data_bytes);
  for (uint32_t j = 0; j < n; ++j)
    put_u16(bytes, static_cast<uint16_t>(quantize(file.samples[j])));

  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) raise(ErrorKind::io, path + ": cannot open for writing");
  outf.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!outf) raise(ErrorKind::io, path + ": write failed");
}

}  // namespace plaae::wav

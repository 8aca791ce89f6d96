#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace plaae::wav {

// Mono PCM audio as doubles in [-1, 1). All file I/O in the toolkit goes
// through this type; only 16-bit little-endian RIFF/WAVE is accepted.
struct WavFile {
  int sample_rate = 16000;
  std::vector<double> samples;
};

// Sample mapping shared by reader, writer, and the splice path: dequantize
// divides by 32768; quantize rounds half away from zero and clamps to the
// int16 range.
inline double dequantize(int16_t q) { return static_cast<double>(q) / 32768.0; }
int16_t quantize(double s);

// Walks the RIFF chunk list, accepting only PCM 16-bit mono and skipping
// unrelated chunks. Malformed or unsupported files raise io errors naming
// the path.
WavFile read_wav(const std::string& path);

void write_wav(const std::string& path, const WavFile& file);

}  // namespace plaae::wav

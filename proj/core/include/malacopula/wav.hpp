#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "malacopula/signal.hpp"

namespace malacopula {

/// Samples map to 16-bit PCM as round(clamp(x, -1, 1) * 32767) and back as
/// s / 32767, so +-1.0 land on +-32767 (one LSB of headroom below -32768)
/// and every value read from a file re-encodes to the same integer.
std::int16_t sample_to_pcm16(double x);
double pcm16_to_sample(std::int16_t s);

struct WavInfo {
  int channels = 0;
  int sample_rate_hz = 0;
  int bits_per_sample = 0;
};

/// Encodes a mono signal as a canonical 44-byte-header PCM16 RIFF/WAVE file.
std::vector<std::uint8_t> encode_wav(const Signal& x);
/// Decodes PCM16 mono WAV bytes. Throws DataError for anything else (the
/// message names the offending property, e.g. channel count).
Signal decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
WavInfo probe_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

void write_wav(const std::filesystem::path& path, const Signal& x);
Signal read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace malacopula

#include "malacopula/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "malacopula/errors.hpp"

namespace malacopula {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

struct Chunks {
  WavInfo info;
  int format = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
};

Chunks parse(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) { throw DataError(origin + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail("not a RIFF/WAVE file");
  Chunks c;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::size_t size = get_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) fail("truncated chunk");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) fail("fmt chunk too short");
      c.format = get_u16(bytes.data() + body);
      c.info.channels = get_u16(bytes.data() + body + 2);
      c.info.sample_rate_hz = static_cast<int>(get_u32(bytes.data() + body + 4));
      c.info.bits_per_sample = get_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      c.data = bytes.data() + body;
      c.data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) fail("missing fmt chunk");
  if (!c.data) fail("missing data chunk");
  return c;
}

}  // namespace

std::int16_t sample_to_pcm16(double x) {
  const double clamped = std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(clamped * 32767.0));
}

double pcm16_to_sample(std::int16_t s) { return static_cast<double>(s) / 32767.0; }

std::vector<std::uint8_t> encode_wav(const Signal& x) {
  const auto data_bytes = static_cast<std::uint32_t>(x.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(x.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(x.sample_rate()) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double v : x.samples()) put_u16(out, static_cast<std::uint16_t>(sample_to_pcm16(v)));
  return out;
}

WavInfo probe_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin) { return parse(bytes, origin).info; }

Signal decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  const Chunks c = parse(bytes, origin);
  if (c.format != 1) throw DataError(origin + ": only PCM WAV is supported (format tag " + std::to_string(c.format) + ")");
  if (c.info.channels != 1)
    throw DataError(origin + ": expected mono audio, found " + std::to_string(c.info.channels) + " channels");
  if (c.info.bits_per_sample != 16)
    throw DataError(origin + ": expected 16-bit samples, found " + std::to_string(c.info.bits_per_sample));
  if (c.info.sample_rate_hz <= 0) throw DataError(origin + ": invalid sample rate");
  std::vector<double> samples(c.data_size / 2);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = pcm16_to_sample(static_cast<std::int16_t>(get_u16(c.data + 2 * i)));
  return Signal(std::move(samples), c.info.sample_rate_hz);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void write_wav(const std::filesystem::path& path, const Signal& x) { write_file_bytes(path, encode_wav(x)); }

Signal read_wav(const std::filesystem::path& path) { return decode_wav(read_file_bytes(path), path.string()); }

}  // namespace malacopula

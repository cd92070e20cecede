#include "nlad/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "nlad/error.hpp"

namespace nlad {

namespace {

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at));
}

}  // namespace

std::int16_t to_pcm16(double sample) noexcept {
  if (!std::isfinite(sample)) return 0;
  const double scaled = std::nearbyint(sample * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32767.0, 32767.0));
}

Signal render_pcm16(const Signal& signal) {
  Signal out;
  out.sample_rate = signal.sample_rate;
  out.samples.reserve(signal.samples.size());
  for (double v : signal.samples) out.samples.push_back(to_pcm16(v) / 32768.0);
  return out;
}

Signal decode_wav(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || !tag_is(b, 0, "RIFF") || !tag_is(b, 8, "WAVE")) {
    throw FormatError("not a RIFF/WAVE file", 0);
  }
  Signal out;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (size > b.size() - body) throw FormatError("WAV chunk runs past end of file", pos);
    if (tag_is(b, pos, "fmt ")) {
      if (size < 16) throw FormatError("WAV fmt chunk too short", pos);
      const std::uint16_t format = le16(b, body);
      const std::uint16_t channels = le16(b, body + 2);
      const std::uint16_t bits = le16(b, body + 14);
      if (format != 1) throw FormatError("WAV is not integer PCM", body);
      if (channels != 1) throw FormatError("WAV must be mono", body + 2);
      if (bits != 16) throw FormatError("WAV must be 16-bit", body + 14);
      out.sample_rate = static_cast<int>(le32(b, body + 4));
      have_fmt = true;
    } else if (tag_is(b, pos, "data")) {
      if (!have_fmt) throw FormatError("WAV data chunk before fmt chunk", pos);
      const std::size_t n = size / 2;
      out.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        out.samples[i] = static_cast<std::int16_t>(le16(b, body + 2 * i)) / 32768.0;
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError("WAV has no data chunk", b.size());
}

std::vector<std::uint8_t> encode_wav(const Signal& signal) {
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  const auto rate = static_cast<std::uint32_t>(signal.sample_rate);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (double v : signal.samples) put16(out, static_cast<std::uint16_t>(to_pcm16(v)));
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

Signal read_wav(const std::filesystem::path& path) { return decode_wav(read_file(path)); }

void write_wav(const std::filesystem::path& path, const Signal& signal) {
  write_file(path, encode_wav(signal));
}

}  // namespace nlad

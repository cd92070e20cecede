#include <cstring>
#include <string>

#include "nlad/codec.hpp"
#include "nlad/error.hpp"

namespace nlad {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
    }
  }
  void put_bytes(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string_view get_text(std::size_t n, const char* what) {
    need(n, what);
    const std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated header: ") + what, pos_);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> pack_codes(std::span<const Code> codes, int n_bits) {
  std::vector<std::uint8_t> out(Bitstream::body_size(codes.size(), n_bits), 0);
  std::size_t bit = 0;
  for (const Code c : codes) {
    const std::uint32_t v = c.bits(n_bits);
    for (int b = n_bits - 1; b >= 0; --b, ++bit) {
      if ((v >> b) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    }
  }
  return out;
}

std::vector<Code> unpack_codes(std::span<const std::uint8_t> body, std::uint64_t count, int n_bits) {
  const std::size_t need = Bitstream::body_size(count, n_bits);
  if (body.size() < need) {
    const std::uint64_t available = body.size() * 8 / static_cast<std::uint64_t>(n_bits);
    throw FormatError("truncated body: expected " + std::to_string(count) + " codes, found " +
                          std::to_string(available),
                      body.size());
  }
  std::vector<Code> out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t bit = 0;
  for (std::uint64_t n = 0; n < count; ++n) {
    std::uint32_t v = 0;
    for (int b = 0; b < n_bits; ++b, ++bit) {
      v = (v << 1) | ((body[bit / 8] >> (7 - bit % 8)) & 1u);
    }
    out.push_back(Code::from_bits(v, n_bits));
  }
  return out;
}

std::vector<std::uint8_t> serialize(const Bitstream& bs) {
  const std::string text = canonical_config(bs.config);
  Writer w;
  w.put_bytes(std::string_view(kBitstreamMagic, 4));
  w.put<std::uint16_t>(kBitstreamVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(bs.config.n_bits()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bs.config.frame_len));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(bs.config.predictor));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text);
  w.put<std::uint64_t>(bs.config.rng_seed);
  w.put<std::uint64_t>(bs.sample_count);
  w.put<std::uint32_t>(crc32(w.bytes));
  w.bytes.insert(w.bytes.end(), bs.body.begin(), bs.body.end());
  return std::move(w.bytes);
}

Bitstream parse_bitstream(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.get_text(4, "magic") != std::string_view(kBitstreamMagic, 4)) {
    throw FormatError("bad magic, not an NLAD bitstream", 0);
  }
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kBitstreamVersion) {
    throw FormatError("unsupported format version " + std::to_string(version), version_at);
  }
  const auto n_bits = r.get<std::uint8_t>("n_bits");
  const auto frame_len = r.get<std::uint16_t>("frame_len");
  const auto kind = r.get<std::uint8_t>("predictor kind");
  const auto text_len = r.get<std::uint32_t>("config length");
  const std::size_t text_at = r.pos();
  const std::string_view text = r.get_text(text_len, "config block");
  const auto seed = r.get<std::uint64_t>("rng_seed");
  const auto count = r.get<std::uint64_t>("sample count");
  const std::size_t crc_at = r.pos();
  const auto stored_crc = r.get<std::uint32_t>("header crc");
  if (crc32(bytes.first(crc_at)) != stored_crc) throw FormatError("header CRC mismatch", crc_at);

  Bitstream bs;
  try {
    bs.config = parse_canonical_config(text);
  } catch (const FormatError& e) {
    throw FormatError(e.what(), text_at);
  }
  if (bs.config.n_bits() != n_bits || bs.config.frame_len != frame_len ||
      static_cast<std::uint8_t>(bs.config.predictor) != kind || bs.config.rng_seed != seed) {
    throw FormatError("header fields disagree with the config block", text_at);
  }
  if (bs.config.adaptation != Adaptation::backward) {
    throw FormatError("only backward-adapted streams are decodable", text_at);
  }
  bs.sample_count = count;

  const std::span<const std::uint8_t> body = bytes.subspan(r.pos());
  const std::size_t need = Bitstream::body_size(count, n_bits);
  if (body.size() < need) {
    const std::uint64_t available = body.size() * 8 / n_bits;
    throw FormatError("truncated body: expected " + std::to_string(count) + " codes, found " +
                          std::to_string(available),
                      bytes.size());
  }
  if (body.size() > need) throw FormatError("trailing bytes after body", r.pos() + need);
  bs.body.assign(body.begin(), body.end());
  return bs;
}

}  // namespace nlad

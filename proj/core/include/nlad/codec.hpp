#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlad/dsp.hpp"
#include "nlad/quantizer.hpp"
#include "nlad/training.hpp"

namespace nlad {

enum class PredictorKind : std::uint8_t { lpc = 0, mlp = 1 };
enum class Adaptation : std::uint8_t { backward, forward_unquantized };

struct CodecConfig {
  std::size_t frame_len = 200;
  PredictorKind predictor = PredictorKind::lpc;
  std::size_t lpc_order = 10;
  /// MLP training regime. train.validation selects the validation schedule
  /// (train on frame k-2, validate on k-1, code frame k).
  TrainConfig train;
  QuantizerParams quant = default_quantizer_params(4);
  std::uint64_t rng_seed = 0;
  Adaptation adaptation = Adaptation::backward;

  int n_bits() const noexcept { return quant.n_bits; }
  bool validation_mode() const noexcept {
    return predictor == PredictorKind::mlp && train.validation;
  }
  std::size_t predictor_order() const noexcept {
    return predictor == PredictorKind::lpc ? lpc_order : kMlpInputs;
  }
};

/// Throws ConfigError on an invalid or self-contradictory configuration.
void validate(const CodecConfig& cfg);

/// Canonical "key=value\n" text of every field that influences decoding,
/// keys sorted. Floating point values use the shortest round-trip form.
std::string canonical_config(const CodecConfig& cfg);
/// Inverse of canonical_config. Throws FormatError on unknown or missing keys.
CodecConfig parse_canonical_config(std::string_view text);
/// CRC-32 of canonical_config(cfg).
std::uint32_t config_hash(const CodecConfig& cfg);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
/// Strict full-string parse; throws FormatError.
double parse_double(std::string_view text);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::uint32_t crc32(std::string_view text);

inline constexpr char kBitstreamMagic[4] = {'N', 'L', 'A', 'D'};
inline constexpr std::uint16_t kBitstreamVersion = 1;

/// Coded speech: configuration plus N-bit codes packed MSB first.
struct Bitstream {
  CodecConfig config;
  std::uint64_t sample_count = 0;
  std::vector<std::uint8_t> body;

  static std::size_t body_size(std::uint64_t samples, int n_bits) {
    return static_cast<std::size_t>((samples * static_cast<std::uint64_t>(n_bits) + 7) / 8);
  }
};

/// Little-endian file layout:
///   "NLAD" | u16 version | u8 n_bits | u16 frame_len | u8 predictor kind |
///   u32 config length | canonical config text | u64 rng_seed |
///   u64 sample count | u32 CRC-32 of all preceding header bytes | body
std::vector<std::uint8_t> serialize(const Bitstream& bs);
/// Throws FormatError (with byte offset) on bad magic, unsupported version,
/// CRC mismatch, inconsistent header fields or a short body.
Bitstream parse_bitstream(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> pack_codes(std::span<const Code> codes, int n_bits);
std::vector<Code> unpack_codes(std::span<const std::uint8_t> body, std::uint64_t count, int n_bits);

struct FrameDiagnostics {
  enum class Source : std::uint8_t { zero, lpc, mlp };

  std::size_t index = 0;
  Source source = Source::zero;
  /// The frame the predictor was derived from had zero energy.
  bool degenerate_source = false;
  bool lpc_truncated = false;
  /// Every MLP start diverged.
  bool training_failed = false;
  double train_error = 0.0;
  std::size_t bayes_updates = 0;
  double gamma_eff_min = 0.0;
  double gamma_eff_max = 0.0;
  /// CRC-32 over the predictor parameters used for this frame.
  std::uint32_t predictor_digest = 0;
};

struct EncodeResult {
  Bitstream bitstream;
  Signal reconstruction;
  SegSnrReport report;
  std::vector<FrameDiagnostics> frames;
};

/// Backward-adaptive ADPCM. Frame 0 uses the zero predictor; frame k >= 1 is
/// predicted by a model fitted to the reconstruction of frame k-1.
EncodeResult encode(const Signal& signal, const CodecConfig& cfg);

struct DecodeResult {
  Signal signal;
  std::vector<FrameDiagnostics> frames;
};

/// Replays the encoder's adaptation from the codes alone.
Signal decode(const Bitstream& bs);
DecodeResult decode_traced(const Bitstream& bs);
Signal decode(std::span<const std::uint8_t> bytes);

struct ForwardResult {
  Signal reconstruction;
  SegSnrReport report;
  std::vector<FrameDiagnostics> frames;
};

/// Diagnostic forward adaptation with unquantized predictors: frame k's
/// predictor is fitted to the original samples of frame k. No bitstream.
ForwardResult forward_unquantized_mode(const Signal& signal, const CodecConfig& cfg);

}  // namespace nlad

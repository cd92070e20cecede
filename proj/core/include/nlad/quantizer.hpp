#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nlad {

inline constexpr int kMinQuantBits = 2;
inline constexpr int kMaxQuantBits = 5;
inline constexpr std::size_t kMaxMultipliers = std::size_t{1} << (kMaxQuantBits - 1);

/// Version of the default multiplier tables below. Bumping it is a bitstream
/// format change.
inline constexpr int kQuantizerTableVersion = 1;

/// Static quantizer configuration, carried verbatim in the bitstream header.
struct QuantizerParams {
  int n_bits = 4;
  double initial_step = 0.02;
  double step_min = 1e-5;
  double step_max = 0.5;
  /// One multiplier per magnitude level, 2^(n_bits-1) entries.
  std::vector<double> multipliers;
  /// Restart from initial_step at every frame boundary instead of adapting
  /// continuously.
  bool reset_per_frame = false;
};

/// Jayant-style defaults for 2..5 bits. Throws ConfigError otherwise.
QuantizerParams default_quantizer_params(int n_bits);

/// Throws ConfigError unless `p` is usable by init_state.
void validate(const QuantizerParams& p);

/// Backward-adaptive quantizer state. Small value type: copying is cheap and
/// adapt() returns a fresh state.
struct QuantizerState {
  int n_bits = 0;
  double step = 0.0;
  double step_min = 0.0;
  double step_max = 0.0;
  std::array<double, kMaxMultipliers> multipliers{};

  int levels() const noexcept { return 1 << (n_bits - 1); }
};

/// A transmitted N-bit code. `value` lies in [-2^(n-1), 2^(n-1) - 1]:
/// non-negative values are positive levels, value v < 0 is level -v - 1 with
/// negative sign.
struct Code {
  int value = 0;

  static Code from_level(int level, bool negative) noexcept {
    return Code{negative ? -(level + 1) : level};
  }
  int level() const noexcept { return value < 0 ? -value - 1 : value; }
  bool negative() const noexcept { return value < 0; }
  /// Two's complement representation in the low `n_bits` bits.
  std::uint32_t bits(int n_bits) const noexcept {
    return static_cast<std::uint32_t>(value) & ((1u << n_bits) - 1u);
  }
  static Code from_bits(std::uint32_t bits, int n_bits) noexcept {
    const int sign_bit = 1 << (n_bits - 1);
    const int v = static_cast<int>(bits & ((1u << n_bits) - 1u));
    return Code{(v & sign_bit) ? v - (1 << n_bits) : v};
  }
  friend bool operator==(Code, Code) = default;
};

QuantizerState init_state(const QuantizerParams& params);
QuantizerState init_state(int n_bits, double initial_step);

/// Mid-rise uniform quantizer. Residual exactly zero maps to positive level 0.
/// Throws NumericError for non-finite input.
Code quantize(double residual, const QuantizerState& state);

/// sign * (level + 0.5) * step. Throws PreconditionError for out-of-range codes.
double dequantize(Code code, const QuantizerState& state);

/// One-word-memory step update driven by the code alone.
QuantizerState adapt(const QuantizerState& state, Code code);

}  // namespace nlad

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nlad {

inline constexpr std::size_t kMlpInputs = 10;
inline constexpr std::size_t kMlpHidden = 2;
inline constexpr std::size_t kMlpWeights = kMlpHidden * kMlpInputs + kMlpHidden + kMlpHidden + 1;
static_assert(kMlpWeights == 25);

enum class Activation : std::uint8_t { tanh, logistic };

/// Weights of the 10-2-1 predictor in their normative flattened order:
/// w1 row-major (hidden unit k, input i) at k*10 + i, then b1[0..1] at 20-21,
/// w2[0..1] at 22-23, and b2 at 24.
struct MlpWeights {
  std::array<double, kMlpWeights> w{};

  static constexpr std::size_t w1_index(std::size_t k, std::size_t i) { return k * kMlpInputs + i; }
  static constexpr std::size_t b1_index(std::size_t k) { return kMlpHidden * kMlpInputs + k; }
  static constexpr std::size_t w2_index(std::size_t k) { return kMlpHidden * kMlpInputs + kMlpHidden + k; }
  static constexpr std::size_t b2_index() { return kMlpWeights - 1; }

  double& w1(std::size_t k, std::size_t i) { return w[w1_index(k, i)]; }
  double w1(std::size_t k, std::size_t i) const { return w[w1_index(k, i)]; }
  double& b1(std::size_t k) { return w[b1_index(k)]; }
  double b1(std::size_t k) const { return w[b1_index(k)]; }
  double& w2(std::size_t k) { return w[w2_index(k)]; }
  double w2(std::size_t k) const { return w[w2_index(k)]; }
  double& b2() { return w[b2_index()]; }
  double b2() const { return w[b2_index()]; }

  friend bool operator==(const MlpWeights&, const MlpWeights&) = default;
};

/// One training pair: ten past samples (most recent last) and the next one.
struct PredictionSample {
  std::array<double, kMlpInputs> input{};
  double target = 0.0;
};

/// Deterministic initialization for start `init_index` of frame `frame_index`.
///
/// Stream derivation: the three integers are folded through the SplitMix64
/// finalizer into a single 64-bit key that seeds std::mt19937_64. Each weight
/// consumes one engine output u64, mapped to [0, 1) as (u >> 11) * 2^-53, then
/// to uniform [-0.5, 0.5) and scaled by 1/sqrt(fan_in) of its layer (10 for
/// w1/b1, 2 for w2/b2). This rule is part of the bitstream format because the
/// decoder must regenerate the same weights.
MlpWeights init_random(std::uint64_t rng_seed, std::uint64_t frame_index, std::uint32_t init_index);

/// w2 . act(w1 x + b1) + b2 with a linear output unit. Throws NumericError on
/// non-finite input and PreconditionError when input.size() != 10.
double forward(const MlpWeights& w, std::span<const double> input,
               Activation act = Activation::tanh);

/// Row-major N x 25 Jacobian of the errors e[i] = target_i - forward(input_i).
struct Jacobian {
  std::size_t rows = 0;
  std::vector<double> j;
  std::vector<double> e;

  double at(std::size_t row, std::size_t col) const { return j[row * kMlpWeights + col]; }
};

Jacobian jacobian(const MlpWeights& w, std::span<const PredictionSample> samples,
                  Activation act = Activation::tanh);

/// Errors only; the cheap half of jacobian().
std::vector<double> errors(const MlpWeights& w, std::span<const PredictionSample> samples,
                           Activation act = Activation::tanh);

}  // namespace nlad

#include "nlad/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlad/error.hpp"

namespace nlad {

namespace {

// Table version kQuantizerTableVersion. Inner levels shrink the step, outer
// levels grow it. The 4 and 5 bit tables ramp linearly from 1 above the
// inner levels; their slopes were picked for segmental SNR on Gaussian input
// whose level jumps by up to 36 dB every 200 samples.
constexpr double kMult2[] = {0.845, 1.96};
constexpr double kMult3[] = {0.845, 1.0, 1.0, 1.4};
constexpr double kMult4[] = {0.9, 0.9, 1.05, 1.1, 1.2, 1.25, 1.3, 1.35};
constexpr double kMult5[] = {0.9,  0.9,  0.9,  1.03, 1.05, 1.08, 1.1,  1.13,
                             1.16, 1.19, 1.22, 1.24, 1.27, 1.3,  1.32, 1.35};

void check_bits(int n_bits) {
  if (n_bits < kMinQuantBits || n_bits > kMaxQuantBits) {
    throw ConfigError("quantizer: n_bits must be in [2, 5], got " + std::to_string(n_bits));
  }
}

}  // namespace

QuantizerParams default_quantizer_params(int n_bits) {
  check_bits(n_bits);
  QuantizerParams p;
  p.n_bits = n_bits;
  switch (n_bits) {
    case 2: p.multipliers.assign(std::begin(kMult2), std::end(kMult2)); break;
    case 3: p.multipliers.assign(std::begin(kMult3), std::end(kMult3)); break;
    case 4: p.multipliers.assign(std::begin(kMult4), std::end(kMult4)); break;
    default: p.multipliers.assign(std::begin(kMult5), std::end(kMult5)); break;
  }
  return p;
}

void validate(const QuantizerParams& p) {
  check_bits(p.n_bits);
  if (!(p.step_min > 0.0) || !(p.step_max >= p.step_min) || !std::isfinite(p.step_max)) {
    throw ConfigError("quantizer: need 0 < step_min <= step_max");
  }
  if (!(p.initial_step >= p.step_min && p.initial_step <= p.step_max)) {
    throw ConfigError("quantizer: initial_step outside [step_min, step_max]");
  }
  const std::size_t levels = std::size_t{1} << (p.n_bits - 1);
  if (p.multipliers.size() != levels) {
    throw ConfigError("quantizer: expected " + std::to_string(levels) + " multipliers, got " +
                      std::to_string(p.multipliers.size()));
  }
  for (double m : p.multipliers) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("quantizer: multipliers must be > 0");
  }
}

QuantizerState init_state(const QuantizerParams& params) {
  validate(params);
  QuantizerState s;
  s.n_bits = params.n_bits;
  s.step = params.initial_step;
  s.step_min = params.step_min;
  s.step_max = params.step_max;
  std::copy(params.multipliers.begin(), params.multipliers.end(), s.multipliers.begin());
  return s;
}

QuantizerState init_state(int n_bits, double initial_step) {
  QuantizerParams p = default_quantizer_params(n_bits);
  p.initial_step = initial_step;
  return init_state(p);
}

Code quantize(double residual, const QuantizerState& state) {
  if (!std::isfinite(residual)) throw NumericError("quantize: non-finite residual");
  const double scaled = std::fabs(residual) / state.step;
  const int max_level = state.levels() - 1;
  const int level = scaled >= static_cast<double>(max_level)
                        ? max_level
                        : static_cast<int>(std::floor(scaled));
  return Code::from_level(level, residual < 0.0);
}

double dequantize(Code code, const QuantizerState& state) {
  const int half = state.levels();
  if (code.value < -half || code.value >= half) {
    throw PreconditionError("dequantize: code " + std::to_string(code.value) + " out of range for " +
                            std::to_string(state.n_bits) + " bits");
  }
  const double magnitude = (static_cast<double>(code.level()) + 0.5) * state.step;
  return code.negative() ? -magnitude : magnitude;
}

QuantizerState adapt(const QuantizerState& state, Code code) {
  if (code.level() >= state.levels()) throw PreconditionError("adapt: code out of range");
  QuantizerState next = state;
  const double grown = state.step * state.multipliers[static_cast<std::size_t>(code.level())];
  next.step = std::clamp(grown, state.step_min, state.step_max);
  return next;
}

}  // namespace nlad

#include "nlad/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "nlad/error.hpp"

namespace nlad {

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double activate(double z, Activation act) {
  return act == Activation::tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

// Derivative expressed through the activation value h.
double activate_slope(double h, Activation act) {
  return act == Activation::tanh ? 1.0 - h * h : h * (1.0 - h);
}

struct Hidden {
  std::array<double, kMlpHidden> h{};
  double out = 0.0;
};

Hidden evaluate(const MlpWeights& w, const double* x, Activation act) {
  Hidden r;
  r.out = w.b2();
  for (std::size_t k = 0; k < kMlpHidden; ++k) {
    double z = w.b1(k);
    for (std::size_t i = 0; i < kMlpInputs; ++i) z += w.w1(k, i) * x[i];
    r.h[k] = activate(z, act);
    r.out += w.w2(k) * r.h[k];
  }
  return r;
}

}  // namespace

MlpWeights init_random(std::uint64_t rng_seed, std::uint64_t frame_index, std::uint32_t init_index) {
  const std::uint64_t key =
      splitmix64(splitmix64(splitmix64(rng_seed) ^ frame_index) ^ static_cast<std::uint64_t>(init_index));
  std::mt19937_64 engine(key);
  const double scale_hidden = 1.0 / std::sqrt(static_cast<double>(kMlpInputs));
  const double scale_output = 1.0 / std::sqrt(static_cast<double>(kMlpHidden));

  MlpWeights w;
  for (std::size_t j = 0; j < kMlpWeights; ++j) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    const double scale = j < MlpWeights::w2_index(0) ? scale_hidden : scale_output;
    w.w[j] = (u - 0.5) * scale;
  }
  return w;
}

double forward(const MlpWeights& w, std::span<const double> input, Activation act) {
  if (input.size() != kMlpInputs) {
    throw PreconditionError("forward: expected 10 inputs, got " + std::to_string(input.size()));
  }
  for (double v : input) {
    if (!std::isfinite(v)) throw NumericError("forward: non-finite input");
  }
  return evaluate(w, input.data(), act).out;
}

std::vector<double> errors(const MlpWeights& w, std::span<const PredictionSample> samples,
                           Activation act) {
  std::vector<double> e(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    e[n] = samples[n].target - evaluate(w, samples[n].input.data(), act).out;
  }
  return e;
}

Jacobian jacobian(const MlpWeights& w, std::span<const PredictionSample> samples, Activation act) {
  if (samples.empty()) throw PreconditionError("jacobian: no samples");
  Jacobian out;
  out.rows = samples.size();
  out.j.assign(out.rows * kMlpWeights, 0.0);
  out.e.resize(out.rows);
  for (std::size_t n = 0; n < samples.size(); ++n) {
    const auto& x = samples[n].input;
    const Hidden r = evaluate(w, x.data(), act);
    out.e[n] = samples[n].target - r.out;
    double* row = out.j.data() + n * kMlpWeights;
    for (std::size_t k = 0; k < kMlpHidden; ++k) {
      const double delta = -w.w2(k) * activate_slope(r.h[k], act);
      for (std::size_t i = 0; i < kMlpInputs; ++i) row[MlpWeights::w1_index(k, i)] = delta * x[i];
      row[MlpWeights::b1_index(k)] = delta;
      row[MlpWeights::w2_index(k)] = -r.h[k];
    }
    row[MlpWeights::b2_index()] = -1.0;
  }
  return out;
}

}  // namespace nlad

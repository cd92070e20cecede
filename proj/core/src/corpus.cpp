#include "nlad/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include "nlad/error.hpp"
#include "nlad/wav.hpp"

namespace nlad {

namespace {

constexpr double kRate = 8000.0;

// Platform-independent variates on top of the (fully specified) 64-bit
// Mersenne twister; the std distributions differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed ^ 0x6a09e667f3bcc909ULL) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Two-pole resonator with unit gain at its centre frequency.
class Resonator {
 public:
  void tune(double freq_hz, double bandwidth_hz) {
    const double r = std::exp(-std::numbers::pi * bandwidth_hz / kRate);
    const double theta = 2.0 * std::numbers::pi * freq_hz / kRate;
    a1_ = 2.0 * r * std::cos(theta);
    a2_ = -r * r;
    // |1 - a1 z^-1 - a2 z^-2| at z = e^{j theta}
    const double re = 1.0 - a1_ * std::cos(theta) - a2_ * std::cos(2.0 * theta);
    const double im = a1_ * std::sin(theta) + a2_ * std::sin(2.0 * theta);
    gain_ = std::sqrt(re * re + im * im);
  }
  double operator()(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, gain_ = 1.0, y1_ = 0.0, y2_ = 0.0;
};

struct Vowel {
  double f1, f2, f3;
};

constexpr std::array<Vowel, 6> kVowels{{
    {730, 1090, 2440},  // a
    {270, 2290, 3010},  // i
    {300, 870, 2240},   // u
    {530, 1840, 2480},  // e
    {570, 840, 2410},   // o
    {660, 1720, 2410},  // ae
}};

double quantize_pcm(double v) { return to_pcm16(v) / 32768.0; }

void normalize_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  if (m == 0.0) return;
  for (double& v : x) v *= peak / m;
}

}  // namespace

Signal synth_speech_like(std::uint64_t seed, double seconds, const SpeakerProfile& speaker) {
  Rng rng(seed);
  const auto n_total = static_cast<std::size_t>(std::max(0.0, seconds) * kRate);
  std::vector<double> out;
  out.reserve(n_total);

  std::array<Resonator, 3> tract;
  Resonator fricative;
  double glottal1 = 0.0, glottal2 = 0.0, lip_prev = 0.0;
  Vowel current = kVowels[0];
  double phase = 0.0;

  while (out.size() < n_total) {
    const double pick = rng.uniform();
    enum class Kind { voiced, unvoiced, pause } kind =
        pick < 0.62 ? Kind::voiced : (pick < 0.87 ? Kind::unvoiced : Kind::pause);
    double dur = kind == Kind::voiced ? rng.uniform(0.12, 0.30)
                 : kind == Kind::unvoiced ? rng.uniform(0.04, 0.12)
                                          : rng.uniform(0.03, 0.12);
    const auto len = static_cast<std::size_t>(dur * kRate);
    const double level = rng.uniform(0.45, 1.0);
    const Vowel target = kVowels[static_cast<std::size_t>(rng.uniform() * kVowels.size()) % kVowels.size()];
    const Vowel start = current;
    const double f0_start = speaker.f0_hz * rng.uniform(0.9, 1.15);
    const double f0_end = speaker.f0_hz * rng.uniform(0.8, 1.05);
    fricative.tune(rng.uniform(2300.0, 3400.0), rng.uniform(500.0, 900.0));
    const std::size_t ramp = std::max<std::size_t>(1, std::min<std::size_t>(len / 4, 120));

    for (std::size_t i = 0; i < len && out.size() < n_total; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(len, 1));
      if (i % 40 == 0) {
        const double glide = std::min(1.0, t / 0.4);
        current = Vowel{start.f1 + (target.f1 - start.f1) * glide,
                        start.f2 + (target.f2 - start.f2) * glide,
                        start.f3 + (target.f3 - start.f3) * glide};
        tract[0].tune(current.f1 * speaker.formant_scale, 70.0);
        tract[1].tune(current.f2 * speaker.formant_scale, 100.0);
        tract[2].tune(std::min(current.f3 * speaker.formant_scale, 3700.0), 150.0);
      }
      double env = 1.0;
      if (i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / ramp);
      if (len - i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(len - i) / ramp);

      double excitation = 0.0;
      if (kind == Kind::voiced) {
        const double f0 = (f0_start + (f0_end - f0_start) * t) * (1.0 + 0.01 * rng.gaussian());
        phase += f0 / kRate;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0 + 0.05 * rng.gaussian();
        }
        // Glottal shaping: two real poles give the -12 dB/octave source tilt.
        glottal1 = pulse + 0.94 * glottal1;
        glottal2 = glottal1 + 0.94 * glottal2;
        excitation = 0.03 * glottal2 + speaker.breathiness * rng.gaussian();
        double y = excitation;
        for (auto& r : tract) y = r(y);
        excitation = y;
      } else if (kind == Kind::unvoiced) {
        excitation = 0.25 * fricative(rng.gaussian());
      } else {
        excitation = 0.002 * rng.gaussian();
      }
      const double radiated = excitation - 0.9 * lip_prev;
      lip_prev = excitation;
      out.push_back(level * env * radiated);
    }
  }

  normalize_peak(out, 1.0);
  // Soft saturation, a random overall level and a recording noise floor
  // between -60 and -50 dBFS.
  const double drive = rng.uniform(1.2, 2.0);
  const double peak = rng.uniform(0.35, 0.7);
  const double floor_std = std::pow(10.0, rng.uniform(-60.0, -50.0) / 20.0);
  for (double& v : out) {
    v = quantize_pcm(peak * std::tanh(drive * v) / std::tanh(drive) + floor_std * rng.gaussian());
  }
  return Signal{std::move(out), 8000};
}

Signal synth_ar2(std::uint64_t seed, std::size_t n, double a1, double a2, double innovation_std) {
  Rng rng(seed);
  Signal s;
  s.samples.resize(n);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a1 * x1 + a2 * x2 + innovation_std * rng.gaussian();
    s.samples[i] = x;
    x2 = x1;
    x1 = x;
  }
  return s;
}

Signal synth_nonlinear_ar(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Signal s;
  s.samples.resize(n);
  double x1 = 0.0, x2 = 0.0;
  double gain = 2.0, damping = 0.6;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 1600 == 0) {
      gain = rng.uniform(1.6, 2.6);
      damping = rng.uniform(0.4, 0.8);
    }
    const double x = 0.9 * std::tanh(gain * x1) - damping * x2 + 0.05 * rng.gaussian();
    s.samples[i] = x;
    x2 = x1;
    x1 = x;
  }
  normalize_peak(s.samples, 0.6);
  for (double& v : s.samples) v = quantize_pcm(v);
  return s;
}

std::vector<NamedSignal> desk_corpus(std::uint64_t seed, std::size_t count, double seconds) {
  std::vector<NamedSignal> out;
  const auto n = static_cast<std::size_t>(seconds * kRate);
  const std::size_t speech = count >= 10 ? count - 2 : count;
  for (std::size_t i = 0; i < speech; ++i) {
    const bool high = i % 2 == 1;
    Rng voice(seed * 1000003ULL + i);
    SpeakerProfile p;
    p.f0_hz = high ? voice.uniform(185.0, 235.0) : voice.uniform(95.0, 135.0);
    p.formant_scale = high ? voice.uniform(1.12, 1.2) : voice.uniform(0.95, 1.03);
    p.breathiness = voice.uniform(0.005, 0.03);
    out.push_back({std::string(high ? "speech_f" : "speech_m") + std::to_string(i),
                   synth_speech_like(seed * 7919ULL + i, seconds, p)});
  }
  if (count >= 10) {
    Signal ar = synth_ar2(seed + 17, n, 1.3, -0.6, 1.0);
    normalize_peak(ar.samples, 0.5);
    for (double& v : ar.samples) v = quantize_pcm(v);
    out.push_back({"ar2_stationary", std::move(ar)});
    out.push_back({"nonlinear_ar", synth_nonlinear_ar(seed + 23, n)});
  }
  return out;
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest,
                                                 const std::filesystem::path& root) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open manifest " + manifest.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::filesystem::path p = line.substr(first, last - first + 1);
    out.push_back(p.is_absolute() ? p : root / p);
  }
  return out;
}

std::filesystem::path write_desk_corpus(const std::filesystem::path& dir, std::uint64_t seed,
                                        std::size_t count, double seconds) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / "manifest.txt";
  std::ofstream m(manifest);
  if (!m) throw Error("cannot write " + manifest.string());
  m << "# nlad desk corpus, seed " << seed << "\n";
  for (const NamedSignal& s : desk_corpus(seed, count, seconds)) {
    write_wav(dir / (s.name + ".wav"), s.signal);
    m << s.name << ".wav\n";
  }
  return manifest;
}

}  // namespace nlad

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nlad/dsp.hpp"

namespace nlad {

struct NamedSignal {
  std::string name;
  Signal signal;
};

/// Voice parameters for the synthetic speech generator.
struct SpeakerProfile {
  double f0_hz = 120.0;        // mean pitch
  double formant_scale = 1.0;  // vocal tract length factor
  double breathiness = 0.02;
};

/// Pseudo-speech at 8 kHz: a jittered glottal pulse train and noise bursts
/// through a slowly gliding formant filter, syllable envelopes, pauses, a
/// soft saturating nonlinearity and a low background noise floor. Samples are
/// exact multiples of 1/32768 so the signal survives a WAV round trip
/// unchanged.
Signal synth_speech_like(std::uint64_t seed, double seconds, const SpeakerProfile& speaker);

/// x[n] = a1 x[n-1] + a2 x[n-2] + innovation_std * N(0, 1).
Signal synth_ar2(std::uint64_t seed, std::size_t n, double a1, double a2, double innovation_std);

/// Nonlinear autoregression with slowly switching regimes.
Signal synth_nonlinear_ar(std::uint64_t seed, std::size_t n);

/// The shipped desk corpus: `count` signals, mostly pseudo-speech from
/// alternating low and high pitched voices, plus one AR(2) and one nonlinear
/// AR signal when count >= 10.
std::vector<NamedSignal> desk_corpus(std::uint64_t seed = 2024, std::size_t count = 10,
                                     double seconds = 1.0);

/// Corpus manifest: one WAV path per line; blank lines and lines starting
/// with '#' are ignored. Relative paths resolve against `root`.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest,
                                                 const std::filesystem::path& root);

/// Writes the desk corpus as WAV files plus a manifest.txt into `dir`.
std::filesystem::path write_desk_corpus(const std::filesystem::path& dir, std::uint64_t seed,
                                        std::size_t count, double seconds);

}  // namespace nlad

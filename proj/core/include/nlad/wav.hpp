#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nlad/dsp.hpp"

namespace nlad {

/// 16-bit PCM mono WAV. Samples are scaled by 1/32768 on read; on write they
/// are rounded to nearest (ties to even) and clamped symmetrically to
/// [-32767, 32767].
Signal decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const Signal& signal);

Signal read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Signal& signal);

std::int16_t to_pcm16(double sample) noexcept;
/// Round trip through 16-bit PCM, i.e. what write_wav + read_wav produces.
Signal render_pcm16(const Signal& signal);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace nlad

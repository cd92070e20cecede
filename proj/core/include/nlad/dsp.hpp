#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlad {

/// Mono audio normalized to [-1, 1].
struct Signal {
  std::vector<double> samples;
  int sample_rate = 8000;

  std::size_t size() const noexcept { return samples.size(); }
};

/// A non-owning view of one coding frame.
struct FrameView {
  std::size_t index = 0;
  std::span<const double> samples;
};

struct Framing {
  std::vector<FrameView> frames;
  std::size_t tail = 0;  // samples after the last full frame, excluded
};

/// Splits `samples` into floor(N / frame_len) contiguous frames. The views
/// point into `samples`, which must outlive the result.
Framing frame_signal(std::span<const double> samples, std::size_t frame_len);

/// Unwindowed autocorrelation r[t] = sum_{n=t}^{L-1} x[n] x[n-t], t = 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> frame, std::size_t max_lag);

struct LpcCoefficients {
  /// Predictor taps: x_hat[n] = sum_i a[i] * x[n-1-i].
  std::vector<double> a;
  double residual_energy = 0.0;
  /// Order actually reached. Smaller than a.size() when the recursion hit a
  /// non-positive prediction error and stopped; the remaining taps are zero.
  std::size_t achieved_order = 0;
  bool truncated = false;

  std::size_t order() const noexcept { return a.size(); }
};

/// Levinson-Durbin recursion. Throws DegenerateFrameError when acf[0] <= 0.
LpcCoefficients levinson_durbin(std::span<const double> acf, std::size_t order);

/// `history` holds the last p reconstructed samples, most recent last.
double lpc_predict(const LpcCoefficients& coeffs, std::span<const double> history);

/// Per-frame SNR assigned to frames reconstructed without any error.
inline constexpr double kSnrClampDb = 99.0;

struct SegSnrReport {
  /// One entry per frame with non-zero signal energy.
  std::vector<double> per_frame_snr_db;
  double segsnr_db = 0.0;
  /// Sample standard deviation (n - 1 denominator) of per_frame_snr_db; 0
  /// when fewer than two frames are counted.
  double std_db = 0.0;
  std::size_t frames_counted = 0;
  std::size_t frames_silent = 0;
  std::size_t tail_samples = 0;
  /// Energies of every full frame, silent frames included.
  std::vector<double> frame_signal_energy;
  std::vector<double> frame_error_energy;
};

SegSnrReport segsnr(std::span<const double> original, std::span<const double> reconstructed,
                    std::size_t frame_len);

/// Mean and sample standard deviation, the statistics used by SegSnrReport.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace nlad

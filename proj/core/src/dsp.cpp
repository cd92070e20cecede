#include "nlad/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlad/error.hpp"

namespace nlad {

Framing frame_signal(std::span<const double> samples, std::size_t frame_len) {
  if (frame_len == 0) throw PreconditionError("frame_signal: frame_len must be >= 1");
  Framing out;
  const std::size_t count = samples.size() / frame_len;
  out.frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.frames.push_back(FrameView{k, samples.subspan(k * frame_len, frame_len)});
  }
  out.tail = samples.size() - count * frame_len;
  return out;
}

std::vector<double> autocorrelation(std::span<const double> frame, std::size_t max_lag) {
  if (max_lag >= frame.size()) {
    throw PreconditionError("autocorrelation: max_lag " + std::to_string(max_lag) +
                            " must be below the frame length " + std::to_string(frame.size()));
  }
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t n = lag; n < frame.size(); ++n) acc += frame[n] * frame[n - lag];
    r[lag] = acc;
  }
  return r;
}

LpcCoefficients levinson_durbin(std::span<const double> acf, std::size_t order) {
  if (acf.size() < order + 1) {
    throw PreconditionError("levinson_durbin: need " + std::to_string(order + 1) +
                            " autocorrelation lags, got " + std::to_string(acf.size()));
  }
  if (!(acf[0] > 0.0)) throw DegenerateFrameError("levinson_durbin: zero-energy frame");

  LpcCoefficients out;
  out.a.assign(order, 0.0);
  std::vector<double> prev(order, 0.0);
  double err = acf[0];

  for (std::size_t i = 0; i < order; ++i) {
    double acc = acf[i + 1];
    for (std::size_t j = 0; j < i; ++j) acc -= out.a[j] * acf[i - j];
    const double k = acc / err;
    const double next_err = err * (1.0 - k * k);
    if (!(next_err > 0.0) || !std::isfinite(k)) {
      out.truncated = true;
      break;
    }
    prev.assign(out.a.begin(), out.a.end());
    out.a[i] = k;
    for (std::size_t j = 0; j < i; ++j) out.a[j] = prev[j] - k * prev[i - 1 - j];
    err = next_err;
    out.achieved_order = i + 1;
  }
  out.residual_energy = err;
  return out;
}

double lpc_predict(const LpcCoefficients& coeffs, std::span<const double> history) {
  const std::size_t p = coeffs.a.size();
  if (history.size() != p) {
    throw PreconditionError("lpc_predict: history length " + std::to_string(history.size()) +
                            " != order " + std::to_string(p));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p; ++i) acc += coeffs.a[i] * history[p - 1 - i];
  return acc;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

SegSnrReport segsnr(std::span<const double> original, std::span<const double> reconstructed,
                    std::size_t frame_len) {
  if (original.size() != reconstructed.size()) {
    throw PreconditionError("segsnr: length mismatch (" + std::to_string(original.size()) +
                            " vs " + std::to_string(reconstructed.size()) + ")");
  }
  const Framing framing = frame_signal(original, frame_len);
  SegSnrReport report;
  report.tail_samples = framing.tail;
  for (const FrameView& frame : framing.frames) {
    const std::size_t base = frame.index * frame_len;
    double sig = 0.0;
    double err = 0.0;
    for (std::size_t n = 0; n < frame_len; ++n) {
      const double x = original[base + n];
      const double d = x - reconstructed[base + n];
      sig += x * x;
      err += d * d;
    }
    report.frame_signal_energy.push_back(sig);
    report.frame_error_energy.push_back(err);
    if (sig == 0.0) {
      ++report.frames_silent;
      continue;
    }
    const double snr = err == 0.0 ? kSnrClampDb : std::min(kSnrClampDb, 10.0 * std::log10(sig / err));
    report.per_frame_snr_db.push_back(snr);
  }
  report.frames_counted = report.per_frame_snr_db.size();
  const MeanStd ms = mean_std(report.per_frame_snr_db);
  report.segsnr_db = ms.mean;
  report.std_db = ms.std;
  return report;
}

}  // namespace nlad

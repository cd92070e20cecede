#include "nlad/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "nlad/error.hpp"

namespace nlad {

namespace {

// Predictor in force for one frame.
struct Predictor {
  FrameDiagnostics::Source source = FrameDiagnostics::Source::zero;
  LpcCoefficients lpc;
  TrainedPredictor mlp;

  double predict(std::span<const double> history) const {
    switch (source) {
      case FrameDiagnostics::Source::lpc:
        return lpc_predict(lpc, history.last(lpc.order()));
      case FrameDiagnostics::Source::mlp:
        return mlp.predict(history.last(kMlpInputs));
      default:
        return 0.0;
    }
  }
};

void digest_append(std::vector<std::uint8_t>& bytes, double v) {
  std::uint8_t raw[sizeof(double)];
  std::memcpy(raw, &v, sizeof(double));
  bytes.insert(bytes.end(), raw, raw + sizeof(double));
}

std::uint32_t digest(const Predictor& p) {
  std::vector<std::uint8_t> bytes{static_cast<std::uint8_t>(p.source)};
  if (p.source == FrameDiagnostics::Source::lpc) {
    for (double a : p.lpc.a) digest_append(bytes, a);
  } else if (p.source == FrameDiagnostics::Source::mlp) {
    for (const MlpWeights& m : p.mlp.members) {
      for (double v : m.w) digest_append(bytes, v);
    }
  }
  return crc32(bytes);
}

bool silent(std::span<const double> frame) {
  return std::all_of(frame.begin(), frame.end(), [](double v) { return v == 0.0; });
}

Predictor fit_predictor(const CodecConfig& cfg, std::span<const double> train,
                        std::span<const double> validation, std::uint64_t frame_index,
                        FrameDiagnostics& diag) {
  Predictor p;
  if (train.size() <= cfg.predictor_order()) return p;
  if (silent(train)) {
    diag.degenerate_source = true;
    return p;
  }
  if (cfg.predictor == PredictorKind::lpc) {
    try {
      p.lpc = levinson_durbin(autocorrelation(train, cfg.lpc_order), cfg.lpc_order);
    } catch (const DegenerateFrameError&) {
      diag.degenerate_source = true;
      return p;
    }
    p.source = FrameDiagnostics::Source::lpc;
    diag.lpc_truncated = p.lpc.truncated;
    diag.train_error = p.lpc.residual_energy;
    return p;
  }

  const std::vector<PredictionSample> data = make_dataset(train);
  std::vector<PredictionSample> val;
  if (cfg.train.validation) val = make_dataset(validation);
  p.mlp = multi_start(data, val, cfg.train, cfg.rng_seed, frame_index);
  diag.train_error = p.mlp.final_train_error;
  for (const auto& trace : p.mlp.bayes_traces) {
    for (const BayesStep& s : trace) {
      if (diag.bayes_updates == 0) {
        diag.gamma_eff_min = diag.gamma_eff_max = s.gamma_eff;
      } else {
        diag.gamma_eff_min = std::min(diag.gamma_eff_min, s.gamma_eff);
        diag.gamma_eff_max = std::max(diag.gamma_eff_max, s.gamma_eff);
      }
      ++diag.bayes_updates;
    }
  }
  if (p.mlp.fallback_zero) {
    diag.training_failed = true;
    return p;
  }
  p.source = FrameDiagnostics::Source::mlp;
  return p;
}

// Shared encoder/decoder state machine. The encoder feeds original samples,
// the decoder feeds codes; both go through reconstruct() so their state
// trajectories are identical.
class Engine {
 public:
  explicit Engine(const CodecConfig& cfg)
      : cfg_(cfg),
        quant_(init_state(cfg.quant)),
        history_(std::max(cfg.predictor_order(), kMlpInputs), 0.0) {}

  // Called once before the first sample of frame k. `recon` holds every
  // sample reconstructed so far; `original` is non-empty only in forward mode.
  void begin_frame(std::size_t k, std::span<const double> recon, std::span<const double> original) {
    FrameDiagnostics diag;
    diag.index = k;
    const std::size_t len = cfg_.frame_len;
    if (cfg_.quant.reset_per_frame && k > 0) quant_ = init_state(cfg_.quant);

    if (cfg_.adaptation == Adaptation::forward_unquantized) {
      const std::size_t begin = k * len;
      const std::size_t end = std::min(begin + len, original.size());
      predictor_ = fit_predictor(cfg_, original.subspan(begin, end - begin), {}, k, diag);
    } else if (cfg_.validation_mode()) {
      predictor_ = k < 2 ? Predictor{}
                         : fit_predictor(cfg_, recon.subspan((k - 2) * len, len),
                                         recon.subspan((k - 1) * len, len), k, diag);
    } else {
      predictor_ = k < 1 ? Predictor{}
                         : fit_predictor(cfg_, recon.subspan((k - 1) * len, len), {}, k, diag);
    }
    diag.source = predictor_.source;
    diag.predictor_digest = digest(predictor_);
    frames_.push_back(diag);
  }

  double predict() const {
    const double raw = predictor_.predict(history_);
    if (!std::isfinite(raw)) return 0.0;
    return std::clamp(raw, -1.0, 1.0);
  }

  Code quantize_residual(double residual) const { return quantize(residual, quant_); }

  double reconstruct(double prediction, Code code) {
    const double x = std::clamp(prediction + dequantize(code, quant_), -1.0, 1.0);
    quant_ = adapt(quant_, code);
    std::shift_left(history_.begin(), history_.end(), 1);
    history_.back() = x;
    return x;
  }

  std::vector<FrameDiagnostics> take_frames() { return std::move(frames_); }

 private:
  const CodecConfig& cfg_;
  QuantizerState quant_;
  std::vector<double> history_;  // most recent last
  Predictor predictor_;
  std::vector<FrameDiagnostics> frames_;
};

void check_finite(const Signal& signal) {
  for (std::size_t n = 0; n < signal.samples.size(); ++n) {
    if (!std::isfinite(signal.samples[n])) {
      throw NumericError("non-finite input sample at index " + std::to_string(n));
    }
  }
}

struct LoopOutput {
  std::vector<double> recon;
  std::vector<Code> codes;
  std::vector<FrameDiagnostics> frames;
};

LoopOutput run_encoder_loop(const Signal& signal, const CodecConfig& cfg) {
  check_finite(signal);
  Engine engine(cfg);
  const std::span<const double> x = signal.samples;
  const bool forward = cfg.adaptation == Adaptation::forward_unquantized;
  LoopOutput out;
  out.recon.assign(x.size(), 0.0);
  out.codes.reserve(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (n % cfg.frame_len == 0) {
      engine.begin_frame(n / cfg.frame_len, std::span<const double>(out.recon).first(n),
                         forward ? x : std::span<const double>{});
    }
    const double pred = engine.predict();
    const Code c = engine.quantize_residual(x[n] - pred);
    out.codes.push_back(c);
    out.recon[n] = engine.reconstruct(pred, c);
  }
  out.frames = engine.take_frames();
  return out;
}

}  // namespace

EncodeResult encode(const Signal& signal, const CodecConfig& cfg) {
  validate(cfg);
  if (cfg.adaptation != Adaptation::backward) {
    throw ConfigError("encode: use forward_unquantized_mode for forward adaptation");
  }
  LoopOutput loop = run_encoder_loop(signal, cfg);

  EncodeResult out;
  out.bitstream.config = cfg;
  out.bitstream.sample_count = signal.samples.size();
  out.bitstream.body = pack_codes(loop.codes, cfg.n_bits());
  out.report = segsnr(signal.samples, loop.recon, cfg.frame_len);
  out.reconstruction.sample_rate = signal.sample_rate;
  out.reconstruction.samples = std::move(loop.recon);
  out.frames = std::move(loop.frames);
  return out;
}

DecodeResult decode_traced(const Bitstream& bs) {
  const CodecConfig& cfg = bs.config;
  validate(cfg);
  if (cfg.adaptation != Adaptation::backward) {
    throw FormatError("decode: only backward-adapted streams carry codes", 0);
  }
  const std::vector<Code> codes = unpack_codes(bs.body, bs.sample_count, cfg.n_bits());
  const int half = 1 << (cfg.n_bits() - 1);
  Engine engine(cfg);
  DecodeResult out;
  std::vector<double>& recon = out.signal.samples;
  recon.assign(codes.size(), 0.0);
  for (std::size_t n = 0; n < codes.size(); ++n) {
    if (codes[n].value < -half || codes[n].value >= half) {
      throw FormatError("code out of range", n * static_cast<std::size_t>(cfg.n_bits()) / 8);
    }
    if (n % cfg.frame_len == 0) {
      engine.begin_frame(n / cfg.frame_len, std::span<const double>(recon).first(n), {});
    }
    recon[n] = engine.reconstruct(engine.predict(), codes[n]);
  }
  out.frames = engine.take_frames();
  return out;
}

Signal decode(const Bitstream& bs) { return decode_traced(bs).signal; }

Signal decode(std::span<const std::uint8_t> bytes) { return decode(parse_bitstream(bytes)); }

ForwardResult forward_unquantized_mode(const Signal& signal, const CodecConfig& cfg) {
  if (cfg.adaptation != Adaptation::forward_unquantized) {
    throw ConfigError("forward_unquantized_mode: config adaptation must be forward_unquantized");
  }
  validate(cfg);
  LoopOutput loop = run_encoder_loop(signal, cfg);
  ForwardResult out;
  out.report = segsnr(signal.samples, loop.recon, cfg.frame_len);
  out.reconstruction.sample_rate = signal.sample_rate;
  out.reconstruction.samples = std::move(loop.recon);
  out.frames = std::move(loop.frames);
  return out;
}

}  // namespace nlad

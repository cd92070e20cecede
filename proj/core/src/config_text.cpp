#include <charconv>
#include <cmath>
#include <map>
#include <string>

#include <zlib.h>

#include "nlad/codec.hpp"
#include "nlad/error.hpp"

namespace nlad {

namespace {

constexpr std::string_view kPrngName = "splitmix64-mt19937_64-v1";

template <typename E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<PredictorKind> kPredictorNames[] = {{PredictorKind::lpc, "lpc"},
                                                       {PredictorKind::mlp, "mlp"}};
constexpr EnumName<Adaptation> kAdaptationNames[] = {
    {Adaptation::backward, "backward"}, {Adaptation::forward_unquantized, "forward_unquantized"}};
constexpr EnumName<TrainAlgorithm> kAlgorithmNames[] = {{TrainAlgorithm::lm, "lm"},
                                                        {TrainAlgorithm::bayes, "bayes"}};
constexpr EnumName<Performance> kPerformanceNames[] = {{Performance::mse, "mse"},
                                                       {Performance::msereg, "msereg"}};
constexpr EnumName<Selection> kSelectionNames[] = {
    {Selection::best_train, "best_train"},
    {Selection::committee_mean, "committee_mean"},
    {Selection::committee_median, "committee_median"}};
constexpr EnumName<Activation> kActivationNames[] = {{Activation::tanh, "tanh"},
                                                     {Activation::logistic, "logistic"}};

template <typename E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E value) {
  for (const auto& entry : table) {
    if (entry.value == value) return entry.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E value_of(const EnumName<E> (&table)[N], std::string_view name, std::string_view key) {
  for (const auto& entry : table) {
    if (entry.name == name) return entry.value;
  }
  throw FormatError("config: bad value '" + std::string(name) + "' for " + std::string(key), 0);
}

std::uint64_t parse_uint(std::string_view text, std::string_view key) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError("config: bad integer '" + std::string(text) + "' for " + std::string(key), 0);
  }
  return v;
}

bool parse_flag(std::string_view text, std::string_view key) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw FormatError("config: bad flag '" + std::string(text) + "' for " + std::string(key), 0);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw FormatError("bad number '" + std::string(text) + "'", 0);
  }
  return v;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32(std::string_view text) {
  return crc32(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                             text.size()));
}

void validate(const CodecConfig& cfg) {
  validate(cfg.quant);
  if (cfg.predictor == PredictorKind::lpc && cfg.lpc_order < 1) {
    throw ConfigError("codec: lpc order must be >= 1");
  }
  if (cfg.frame_len <= cfg.predictor_order()) {
    throw ConfigError("codec: frame_len must exceed the predictor order");
  }
  if (cfg.frame_len > 0xFFFF) throw ConfigError("codec: frame_len must fit in 16 bits");
  if (cfg.predictor == PredictorKind::mlp) validate(cfg.train);
  if (cfg.adaptation == Adaptation::forward_unquantized && cfg.validation_mode()) {
    throw ConfigError("codec: validation mode is defined for backward adaptation only");
  }
}

std::string canonical_config(const CodecConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["format_version"] = std::to_string(kBitstreamVersion);
  kv["frame_len"] = std::to_string(cfg.frame_len);
  kv["predictor"] = std::string(name_of(kPredictorNames, cfg.predictor));
  kv["lpc.order"] = std::to_string(cfg.lpc_order);
  kv["adaptation"] = std::string(name_of(kAdaptationNames, cfg.adaptation));
  kv["rng_seed"] = std::to_string(cfg.rng_seed);
  kv["prng"] = std::string(kPrngName);

  kv["quant.n_bits"] = std::to_string(cfg.quant.n_bits);
  kv["quant.initial_step"] = format_double(cfg.quant.initial_step);
  kv["quant.step_min"] = format_double(cfg.quant.step_min);
  kv["quant.step_max"] = format_double(cfg.quant.step_max);
  kv["quant.reset_per_frame"] = cfg.quant.reset_per_frame ? "1" : "0";
  kv["quant.table_version"] = std::to_string(kQuantizerTableVersion);
  std::string mults;
  for (std::size_t i = 0; i < cfg.quant.multipliers.size(); ++i) {
    if (i) mults += ' ';
    mults += format_double(cfg.quant.multipliers[i]);
  }
  kv["quant.multipliers"] = mults;

  const TrainConfig& t = cfg.train;
  kv["train.algorithm"] = std::string(name_of(kAlgorithmNames, t.algorithm));
  kv["train.performance"] = std::string(name_of(kPerformanceNames, t.performance));
  kv["train.gamma"] = format_double(t.gamma);
  kv["train.epochs"] = std::to_string(t.epochs);
  kv["train.n_starts"] = std::to_string(t.n_starts);
  kv["train.selection"] = std::string(name_of(kSelectionNames, t.selection));
  kv["train.validation"] = t.validation ? "1" : "0";
  kv["train.patience"] = std::to_string(t.patience);
  kv["train.mu0"] = format_double(t.mu0);
  kv["train.mu_inc"] = format_double(t.mu_inc);
  kv["train.mu_dec"] = format_double(t.mu_dec);
  kv["train.mu_max"] = format_double(t.mu_max);
  kv["train.activation"] = std::string(name_of(kActivationNames, t.activation));

  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

CodecConfig parse_canonical_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) throw FormatError("config: unterminated line", pos);
    const std::string_view line = text.substr(pos, eol - pos);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("config: line without '='", pos);
    if (!kv.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1))).second) {
      throw FormatError("config: duplicate key " + std::string(line.substr(0, eq)), pos);
    }
    pos = eol + 1;
  }

  std::size_t used = 0;
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("config: missing key " + std::string(key), 0);
    ++used;
    return it->second;
  };

  if (parse_uint(get("format_version"), "format_version") != kBitstreamVersion) {
    throw FormatError("config: unsupported format version", 0);
  }
  if (get("prng") != kPrngName) throw FormatError("config: unsupported PRNG derivation", 0);
  if (parse_uint(get("quant.table_version"), "quant.table_version") !=
      static_cast<std::uint64_t>(kQuantizerTableVersion)) {
    throw FormatError("config: unsupported quantizer table version", 0);
  }

  CodecConfig cfg;
  cfg.frame_len = parse_uint(get("frame_len"), "frame_len");
  cfg.predictor = value_of(kPredictorNames, get("predictor"), "predictor");
  cfg.lpc_order = parse_uint(get("lpc.order"), "lpc.order");
  cfg.adaptation = value_of(kAdaptationNames, get("adaptation"), "adaptation");
  cfg.rng_seed = parse_uint(get("rng_seed"), "rng_seed");

  cfg.quant.n_bits = static_cast<int>(parse_uint(get("quant.n_bits"), "quant.n_bits"));
  cfg.quant.initial_step = parse_double(get("quant.initial_step"));
  cfg.quant.step_min = parse_double(get("quant.step_min"));
  cfg.quant.step_max = parse_double(get("quant.step_max"));
  cfg.quant.reset_per_frame = parse_flag(get("quant.reset_per_frame"), "quant.reset_per_frame");
  cfg.quant.multipliers.clear();
  {
    const std::string& m = get("quant.multipliers");
    std::size_t p = 0;
    while (p <= m.size() && !m.empty()) {
      const std::size_t sp = std::min(m.find(' ', p), m.size());
      cfg.quant.multipliers.push_back(parse_double(std::string_view(m).substr(p, sp - p)));
      p = sp + 1;
    }
  }

  TrainConfig& t = cfg.train;
  t.algorithm = value_of(kAlgorithmNames, get("train.algorithm"), "train.algorithm");
  t.performance = value_of(kPerformanceNames, get("train.performance"), "train.performance");
  t.gamma = parse_double(get("train.gamma"));
  t.epochs = parse_uint(get("train.epochs"), "train.epochs");
  t.n_starts = parse_uint(get("train.n_starts"), "train.n_starts");
  t.selection = value_of(kSelectionNames, get("train.selection"), "train.selection");
  t.validation = parse_flag(get("train.validation"), "train.validation");
  t.patience = parse_uint(get("train.patience"), "train.patience");
  t.mu0 = parse_double(get("train.mu0"));
  t.mu_inc = parse_double(get("train.mu_inc"));
  t.mu_dec = parse_double(get("train.mu_dec"));
  t.mu_max = parse_double(get("train.mu_max"));
  t.activation = value_of(kActivationNames, get("train.activation"), "train.activation");

  if (used != kv.size()) throw FormatError("config: unknown keys present", 0);
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("config: ") + e.what(), 0);
  }
  return cfg;
}

std::uint32_t config_hash(const CodecConfig& cfg) { return crc32(canonical_config(cfg)); }

}  // namespace nlad

#include "nlad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "nlad/error.hpp"

#ifndef NLAD_VERSION_STRING
#define NLAD_VERSION_STRING "dev"
#endif
#ifndef NLAD_COMPILER_ID
#define NLAD_COMPILER_ID "unknown"
#endif

namespace nlad {

namespace {

constexpr const char* kGridHeader =
    "row_label,n_bits,segsnr_db,std_db,file,frames,seed,config_hash,bitstream_crc32,status";
constexpr const char* kSweepHeader =
    "gamma,epochs,n_bits,segsnr_db,std_db,file,frames,seed,config_hash";

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

std::uint32_t parse_hex32(const std::string& s) {
  return static_cast<std::uint32_t>(std::stoul(s, nullptr, 16));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = line.find(sep, start);
    out.push_back(line.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

std::string sanitize(std::string msg) {
  for (char& c : msg) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return msg;
}

GridRow neural(std::string label, TrainAlgorithm alg, Performance perf, std::size_t epochs,
               Selection sel, bool validation) {
  GridRow row;
  row.label = std::move(label);
  row.predictor = PredictorKind::mlp;
  row.train.algorithm = alg;
  row.train.performance = perf;
  row.train.gamma = 0.9;
  row.train.epochs = epochs;
  row.train.n_starts = 5;
  row.train.selection = sel;
  row.train.validation = validation;
  return row;
}

std::string file_header(std::uint64_t seed) {
  return "# nlad csv v1\n# build=" + build_identifier() + "\n# seed=" + std::to_string(seed) + "\n";
}

std::string with_checksum(std::string body) {
  body += "#checksum=" + hex32(crc32(body)) + "\n";
  return body;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are written
// by index, so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace

std::vector<GridRow> lpc_rows() {
  GridRow lpc10;
  lpc10.label = "LPC-10";
  lpc10.predictor = PredictorKind::lpc;
  lpc10.lpc_order = 10;
  GridRow lpc25 = lpc10;
  lpc25.label = "LPC-25";
  lpc25.lpc_order = 25;
  return {lpc10, lpc25};
}

std::vector<GridRow> neural_rows() {
  using A = TrainAlgorithm;
  using P = Performance;
  struct Block {
    const char* prefix;
    A alg;
    P perf;
    std::size_t epochs;
    bool validation;
  };
  const Block blocks[] = {
      {"L-M", A::lm, P::mse, 6, false},        {"L-M", A::lm, P::mse, 50, false},
      {"L-M", A::lm, P::msereg, 6, false},     {"L-M", A::lm, P::msereg, 50, false},
      {"B-R", A::bayes, P::msereg, 6, false},  {"B-R", A::bayes, P::msereg, 50, false},
      {"L-M V", A::lm, P::mse, 50, true},      {"L-M V", A::lm, P::msereg, 50, true},
      {"B-R V", A::bayes, P::msereg, 50, true},
  };
  const std::pair<const char*, Selection> selections[] = {
      {"", Selection::best_train},
      {" Cmean", Selection::committee_mean},
      {" Cmedian", Selection::committee_median},
  };
  std::vector<GridRow> rows;
  for (const Block& b : blocks) {
    for (const auto& [suffix, sel] : selections) {
      const std::string label = std::string(b.prefix) + suffix + " " +
                                (b.perf == P::mse ? "mse" : "msereg") + " " +
                                std::to_string(b.epochs);
      rows.push_back(neural(label, b.alg, b.perf, b.epochs, sel, b.validation));
    }
  }
  return rows;
}

std::vector<GridRow> default_grid_rows() {
  std::vector<GridRow> rows = lpc_rows();
  for (GridRow& r : neural_rows()) rows.push_back(std::move(r));
  return rows;
}

std::optional<GridRow> find_row(const std::string& label) {
  for (GridRow& r : default_grid_rows()) {
    if (r.label == label) return r;
  }
  return std::nullopt;
}

CodecConfig make_cell_config(const GridRow& row, int n_bits, std::uint64_t seed,
                             std::size_t frame_len) {
  CodecConfig cfg;
  cfg.frame_len = frame_len;
  cfg.predictor = row.predictor;
  cfg.lpc_order = row.lpc_order;
  if (row.predictor == PredictorKind::mlp) cfg.train = row.train;
  cfg.quant = default_quantizer_params(n_bits);
  cfg.rng_seed = seed;
  return cfg;
}

AggregateResult pool(std::span<const CellResult> cells) {
  AggregateResult out;
  if (!cells.empty()) {
    out.row_label = cells.front().row_label;
    out.n_bits = cells.front().n_bits;
    out.config_hash = cells.front().config_hash;
  }
  double weighted = 0.0;
  for (const CellResult& c : cells) {
    if (!c.ok()) {
      ++out.files_failed;
      continue;
    }
    ++out.files_ok;
    out.frames += c.frames;
    weighted += static_cast<double>(c.frames) * c.segsnr_db;
  }
  if (out.frames == 0) return out;
  out.segsnr_db = weighted / static_cast<double>(out.frames);
  if (out.frames > 1) {
    double ss = 0.0;
    for (const CellResult& c : cells) {
      if (!c.ok() || c.frames == 0) continue;
      const double n = static_cast<double>(c.frames);
      const double d = c.segsnr_db - out.segsnr_db;
      ss += (n - 1.0) * c.std_db * c.std_db + n * d * d;
    }
    out.std_db = std::sqrt(ss / static_cast<double>(out.frames - 1));
  }
  return out;
}

const AggregateResult* GridResult::aggregate(const std::string& label, int n_bits) const {
  for (const AggregateResult& a : aggregates) {
    if (a.row_label == label && a.n_bits == n_bits) return &a;
  }
  return nullptr;
}

const CellResult* GridResult::cell(const std::string& label, int n_bits,
                                   const std::string& file) const {
  for (const CellResult& c : cells) {
    if (c.row_label == label && c.n_bits == n_bits && c.file == file) return &c;
  }
  return nullptr;
}

GridResult run_grid(const std::vector<NamedSignal>& corpus, const std::vector<GridRow>& rows,
                    const GridOptions& options) {
  if (corpus.empty()) throw PreconditionError("run_grid: empty corpus");

  std::map<std::string, CellResult> previous;
  if (!options.resume_csv.empty()) {
    std::size_t pos = 0;
    const std::string& text = options.resume_csv;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      const std::string line = text.substr(pos, eol - pos);
      pos = eol + 1;
      if (line.empty() || line[0] == '#' || line == kGridHeader) continue;
      const std::vector<std::string> f = split(line, ',');
      if (f.size() != 10 || f[4] == "*" || f[9] != "ok") continue;
      try {
        CellResult c;
        c.row_label = f[0];
        c.n_bits = std::stoi(f[1]);
        c.segsnr_db = parse_double(f[2]);
        c.std_db = parse_double(f[3]);
        c.file = f[4];
        c.frames = std::stoul(f[5]);
        c.seed = std::stoull(f[6]);
        c.config_hash = parse_hex32(f[7]);
        c.bitstream_crc = parse_hex32(f[8]);
        c.reused = true;
        previous[c.row_label + "|" + f[1] + "|" + c.file] = c;
      } catch (const std::exception&) {
        // Unparseable lines are simply recomputed.
      }
    }
  }

  GridResult result;
  for (const GridRow& row : rows) {
    for (int bits : options.n_bits) {
      for (const NamedSignal& s : corpus) {
        CellResult c;
        c.row_label = row.label;
        c.n_bits = bits;
        c.file = s.name;
        c.seed = options.seed;
        result.cells.push_back(c);
      }
    }
  }

  const std::size_t per_row = options.n_bits.size() * corpus.size();
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    CellResult& c = result.cells[i];
    const GridRow& row = rows[i / per_row];
    try {
      c.config_hash = config_hash(make_cell_config(row, c.n_bits, options.seed, options.frame_len));
    } catch (const Error& e) {
      c.status = "error: " + sanitize(e.what());
      continue;
    }
    const auto it = previous.find(c.row_label + "|" + std::to_string(c.n_bits) + "|" + c.file);
    if (it != previous.end() && it->second.seed == c.seed && it->second.config_hash == c.config_hash) {
      c = it->second;
      continue;
    }
    todo.push_back(i);
  }

  parallel_for(todo.size(), options.threads, [&](std::size_t t) {
    const std::size_t i = todo[t];
    CellResult& c = result.cells[i];
    const GridRow& row = rows[i / per_row];
    const NamedSignal& s = corpus[i % corpus.size()];
    const auto started = std::chrono::steady_clock::now();
    try {
      const CodecConfig cfg = make_cell_config(row, c.n_bits, options.seed, options.frame_len);
      const EncodeResult enc = encode(s.signal, cfg);
      c.segsnr_db = enc.report.segsnr_db;
      c.std_db = enc.report.std_db;
      c.frames = enc.report.frames_counted;
      std::vector<std::uint8_t> bytes = serialize(enc.bitstream);
      c.bitstream_crc = crc32(bytes);
      if (options.keep_bitstreams) c.bitstream = std::move(bytes);
      for (const FrameDiagnostics& d : enc.frames) {
        if (d.bayes_updates == 0) continue;
        if (c.bayes_updates == 0) {
          c.gamma_eff_min = d.gamma_eff_min;
          c.gamma_eff_max = d.gamma_eff_max;
        } else {
          c.gamma_eff_min = std::min(c.gamma_eff_min, d.gamma_eff_min);
          c.gamma_eff_max = std::max(c.gamma_eff_max, d.gamma_eff_max);
        }
        c.bayes_updates += d.bayes_updates;
      }
    } catch (const std::exception& e) {
      c.status = "error: " + sanitize(e.what());
    }
    c.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  });

  std::string csv = file_header(options.seed);
  csv += kGridHeader;
  csv += '\n';
  for (std::size_t first = 0; first < result.cells.size(); first += corpus.size()) {
    const std::span<const CellResult> group(result.cells.data() + first, corpus.size());
    for (const CellResult& c : group) {
      csv += c.row_label + "," + std::to_string(c.n_bits) + ",";
      if (c.ok()) {
        csv += format_double(c.segsnr_db) + "," + format_double(c.std_db) + ",";
      } else {
        csv += ",,";
      }
      csv += c.file + "," + std::to_string(c.frames) + "," + std::to_string(c.seed) + "," +
             hex32(c.config_hash) + "," + (c.ok() ? hex32(c.bitstream_crc) : "-") + "," + c.status +
             "\n";
    }
    AggregateResult agg = pool(group);
    csv += agg.row_label + "," + std::to_string(agg.n_bits) + ",";
    csv += agg.frames > 0 ? format_double(agg.segsnr_db) + "," + format_double(agg.std_db) + ","
                          : ",,";
    csv += "*," + std::to_string(agg.frames) + "," + std::to_string(options.seed) + "," +
           hex32(agg.config_hash) + ",-," +
           (agg.files_failed == 0 ? "ok" : "partial:" + std::to_string(agg.files_failed)) + "\n";
    result.aggregates.push_back(std::move(agg));
  }
  result.csv = with_checksum(std::move(csv));
  return result;
}

std::vector<double> default_sweep_gammas() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

SweepResult gamma_sweep(const std::vector<NamedSignal>& corpus, const std::vector<double>& gammas,
                        const std::vector<std::size_t>& epochs, int n_bits, std::uint64_t seed,
                        std::size_t frame_len) {
  for (double g : gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("gamma_sweep: gamma outside [0, 1]");
  }
  SweepResult out;
  std::string csv = file_header(seed);
  csv += kSweepHeader;
  csv += '\n';
  for (const NamedSignal& s : corpus) {
    for (std::size_t ep : epochs) {
      for (double g : gammas) {
        GridRow row = neural("sweep", TrainAlgorithm::lm, Performance::msereg, ep,
                             Selection::best_train, false);
        row.train.gamma = g;
        const CodecConfig cfg = make_cell_config(row, n_bits, seed, frame_len);
        const EncodeResult enc = encode(s.signal, cfg);
        SweepPoint p;
        p.gamma = g;
        p.epochs = ep;
        p.n_bits = n_bits;
        p.file = s.name;
        p.segsnr_db = enc.report.segsnr_db;
        p.std_db = enc.report.std_db;
        p.frames = enc.report.frames_counted;
        p.config_hash = config_hash(cfg);
        csv += format_double(g) + "," + std::to_string(ep) + "," + std::to_string(n_bits) + "," +
               format_double(p.segsnr_db) + "," + format_double(p.std_db) + "," + s.name + "," +
               std::to_string(p.frames) + "," + std::to_string(seed) + "," + hex32(p.config_hash) +
               "\n";
        out.points.push_back(std::move(p));
      }
    }
  }
  out.csv = with_checksum(std::move(csv));
  return out;
}

std::string build_identifier() {
  return std::string("nlad-") + NLAD_VERSION_STRING + " " + NLAD_COMPILER_ID;
}

std::string segsnr_report_csv(const SegSnrReport& report, const std::string& label) {
  std::string csv = "# nlad segsnr report v1\n# build=" + build_identifier() + "\n";
  csv += "# input=" + label + "\n";
  csv += "frame,signal_energy,error_energy,snr_db\n";
  std::size_t counted = 0;
  for (std::size_t k = 0; k < report.frame_signal_energy.size(); ++k) {
    const bool is_silent = report.frame_signal_energy[k] == 0.0;
    csv += std::to_string(k) + "," + format_double(report.frame_signal_energy[k]) + "," +
           format_double(report.frame_error_energy[k]) + "," +
           (is_silent ? std::string("silent") : format_double(report.per_frame_snr_db[counted++])) +
           "\n";
  }
  csv += "segsnr_db," + format_double(report.segsnr_db) + "\n";
  csv += "std_db," + format_double(report.std_db) + "\n";
  csv += "frames_counted," + std::to_string(report.frames_counted) + "\n";
  csv += "frames_silent," + std::to_string(report.frames_silent) + "\n";
  csv += "tail_samples," + std::to_string(report.tail_samples) + "\n";
  return csv;
}

}  // namespace nlad

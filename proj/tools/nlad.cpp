// nlad: command line front end for the ADPCM codec and the experiment grid.
//
// Exit codes: 0 ok, 2 usage or configuration, 3 file or format, 4 numeric.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nlad/codec.hpp"
#include "nlad/corpus.hpp"
#include "nlad/error.hpp"
#include "nlad/experiment.hpp"
#include "nlad/wav.hpp"

namespace fs = std::filesystem;
using namespace nlad;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

struct CodecFlags {
  std::string row;
  std::string predictor = "lpc";
  std::size_t lpc_order = 10;
  int bits = 4;
  std::size_t frame_len = 200;
  std::string algorithm = "lm";
  std::string performance = "mse";
  double gamma = 0.9;
  std::size_t epochs = 6;
  std::size_t starts = 5;
  std::string selection = "best";
  bool validation = false;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  bool reset_quantizer = false;
};

void add_codec_flags(CLI::App* app, CodecFlags& f) {
  CLI::Option* row =
      app->add_option("--row", f.row, "Use the predictor and training of a grid row, e.g. \"B-R Cmedian msereg 6\"");
  // Options a grid row already fixes.
  const std::vector<CLI::Option*> predictor_opts{
      app->add_option("--predictor", f.predictor, "lpc or mlp")->check(CLI::IsMember({"lpc", "mlp"})),
      app->add_option("--lpc-order", f.lpc_order, "LPC order"),
      app->add_option("--algorithm", f.algorithm, "lm or br")->check(CLI::IsMember({"lm", "br"})),
      app->add_option("--performance", f.performance, "mse or msereg")
          ->check(CLI::IsMember({"mse", "msereg"})),
      app->add_option("--gamma", f.gamma, "msereg performance ratio"),
      app->add_option("--epochs", f.epochs, "Training epochs"),
      app->add_option("--starts", f.starts, "Random initializations per frame"),
      app->add_option("--selection", f.selection, "best, cmean or cmedian")
          ->check(CLI::IsMember({"best", "cmean", "cmedian"})),
      app->add_flag("--validation", f.validation, "Train on frame k-2, validate on k-1"),
      app->add_option("--patience", f.patience, "Validation patience in epochs"),
  };
  for (CLI::Option* o : predictor_opts) row->excludes(o);
  app->add_option("-b,--bits", f.bits, "Quantizer bits per sample (2..5)")->check(CLI::Range(2, 5));
  app->add_option("--frame-len", f.frame_len, "Frame length in samples");
  app->add_option("--seed", f.seed, "Initialization seed");
  app->add_flag("--reset-quantizer", f.reset_quantizer, "Restart the quantizer step every frame");
}

CodecConfig to_config(const CodecFlags& f) {
  CodecConfig cfg;
  if (!f.row.empty()) {
    const auto row = find_row(f.row);
    if (!row) throw ConfigError("unknown grid row \"" + f.row + "\"");
    cfg = make_cell_config(*row, f.bits, f.seed, f.frame_len);
  } else {
    cfg.frame_len = f.frame_len;
    cfg.predictor = f.predictor == "mlp" ? PredictorKind::mlp : PredictorKind::lpc;
    cfg.lpc_order = f.lpc_order;
    cfg.train.algorithm = f.algorithm == "br" ? TrainAlgorithm::bayes : TrainAlgorithm::lm;
    cfg.train.performance = f.performance == "msereg" ? Performance::msereg : Performance::mse;
    cfg.train.gamma = f.gamma;
    cfg.train.epochs = f.epochs;
    cfg.train.n_starts = f.starts;
    cfg.train.selection = f.selection == "cmean"     ? Selection::committee_mean
                          : f.selection == "cmedian" ? Selection::committee_median
                                                     : Selection::best_train;
    cfg.train.validation = f.validation;
    cfg.train.patience = f.patience;
    cfg.quant = default_quantizer_params(f.bits);
    cfg.rng_seed = f.seed;
  }
  cfg.quant.reset_per_frame = f.reset_quantizer;
  validate(cfg);
  return cfg;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void warn_rate(const Signal& s, const fs::path& path) {
  if (s.sample_rate != 8000) {
    std::cerr << "warning: " << path.string() << " is sampled at " << s.sample_rate
              << " Hz; the codec assumes 8000 Hz\n";
  }
}

// Manifest entries resolve against $NLAD_CORPUS_ROOT, else the manifest's
// own directory.
std::vector<NamedSignal> load_corpus(const std::string& manifest, bool desk, std::uint64_t desk_seed,
                                     double desk_seconds) {
  if (desk) return desk_corpus(desk_seed, 10, desk_seconds);
  if (manifest.empty()) throw ConfigError("give --manifest or --desk");
  const char* env = std::getenv("NLAD_CORPUS_ROOT");
  const fs::path root = env && *env ? fs::path(env) : fs::path(manifest).parent_path();
  std::vector<NamedSignal> corpus;
  for (const fs::path& p : read_manifest(manifest, root)) {
    Signal s = read_wav(p);
    warn_rate(s, p);
    corpus.push_back({p.stem().string(), std::move(s)});
  }
  if (corpus.empty()) throw ConfigError("manifest lists no files");
  return corpus;
}

void print_report(const char* prefix, const SegSnrReport& r) {
  std::printf("%ssegsnr_db=%s std_db=%s frames=%zu silent=%zu tail=%zu\n", prefix,
              format_double(r.segsnr_db).c_str(), format_double(r.std_db).c_str(),
              r.frames_counted, r.frames_silent, r.tail_samples);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backward-adaptive ADPCM with neural and LPC predictors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", build_identifier());

  // encode
  CodecFlags enc_flags;
  std::string enc_in, enc_out, enc_recon, enc_report;
  bool enc_forward = false;
  auto* enc = app.add_subcommand("encode", "WAV to bitstream");
  enc->add_option("-i,--input", enc_in, "16-bit mono WAV")->required();
  enc->add_option("-o,--output", enc_out, "Bitstream file");
  enc->add_option("--recon", enc_recon, "Write the encoder's reconstruction as WAV");
  enc->add_option("--report", enc_report, "Write the per-frame SEGSNR report as CSV");
  enc->add_flag("--forward", enc_forward,
                "Diagnostic forward adaptation on the original frame; writes no bitstream");
  add_codec_flags(enc, enc_flags);

  // decode
  std::string dec_in, dec_out;
  auto* dec = app.add_subcommand("decode", "Bitstream to WAV");
  dec->add_option("-i,--input", dec_in, "Bitstream file")->required();
  dec->add_option("-o,--output", dec_out, "Output WAV")->required();

  // eval
  std::string ev_ref, ev_test, ev_csv;
  std::size_t ev_frame = 200;
  auto* ev = app.add_subcommand("eval", "SEGSNR of a decoded WAV against its original");
  ev->add_option("--ref", ev_ref, "Original WAV")->required();
  ev->add_option("--test", ev_test, "Reconstructed WAV")->required();
  ev->add_option("--frame-len", ev_frame, "Frame length in samples");
  ev->add_option("--csv", ev_csv, "Write the per-frame report as CSV");

  // grid
  std::string grid_manifest, grid_bits = "2,3,4,5", grid_out, grid_resume;
  std::vector<std::string> grid_rows;
  bool grid_desk = false;
  std::uint64_t grid_seed = 1, desk_seed = 2024;
  double desk_seconds = 1.0;
  std::size_t grid_threads = 0, grid_frame = 200;
  auto* grid = app.add_subcommand("grid", "Run the experiment tables over a corpus");
  grid->add_option("--manifest", grid_manifest, "Corpus manifest (one WAV per line)");
  grid->add_flag("--desk", grid_desk, "Use the built-in synthetic desk corpus");
  grid->add_option("--desk-seed", desk_seed, "Desk corpus seed");
  grid->add_option("--desk-seconds", desk_seconds, "Desk corpus signal length");
  grid->add_option("--rows", grid_rows, "Row labels, repeatable or ';' separated (default: all 29)")
      ->delimiter(';');
  grid->add_option("--bits", grid_bits, "Comma separated bit depths");
  grid->add_option("--seed", grid_seed, "Initialization seed");
  grid->add_option("--threads", grid_threads, "Worker threads, 0 for all cores");
  grid->add_option("--frame-len", grid_frame, "Frame length in samples");
  grid->add_option("--resume", grid_resume, "Reuse finished cells from an earlier CSV");
  grid->add_option("-o,--output", grid_out, "CSV output (default stdout)");

  // sweep
  std::string sw_manifest, sw_gammas, sw_epochs = "6,50", sw_out;
  bool sw_desk = false;
  int sw_bits = 2;
  std::uint64_t sw_seed = 1;
  auto* sw = app.add_subcommand("sweep", "SEGSNR versus msereg performance ratio");
  sw->add_option("--manifest", sw_manifest, "Corpus manifest");
  sw->add_flag("--desk", sw_desk, "Use the built-in synthetic desk corpus");
  sw->add_option("--desk-seed", desk_seed, "Desk corpus seed");
  sw->add_option("--desk-seconds", desk_seconds, "Desk corpus signal length");
  sw->add_option("--gammas", sw_gammas, "Comma separated ratios (default 0,0.1,...,1)");
  sw->add_option("--epochs", sw_epochs, "Comma separated epoch counts");
  sw->add_option("-b,--bits", sw_bits, "Quantizer bits")->check(CLI::Range(2, 5));
  sw->add_option("--seed", sw_seed, "Initialization seed");
  sw->add_option("-o,--output", sw_out, "CSV output (default stdout)");

  // corpus
  std::string corpus_dir;
  std::size_t corpus_count = 10;
  auto* corpus = app.add_subcommand("corpus", "Write the synthetic desk corpus as WAV files");
  corpus->add_option("-o,--output", corpus_dir, "Target directory")->required();
  corpus->add_option("--seed", desk_seed, "Corpus seed");
  corpus->add_option("--count", corpus_count, "Number of signals");
  corpus->add_option("--seconds", desk_seconds, "Signal length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*enc) {
      const CodecConfig cfg = to_config(enc_flags);
      const Signal x = read_wav(enc_in);
      warn_rate(x, enc_in);
      if (enc_forward) {
        CodecConfig fwd = cfg;
        fwd.adaptation = Adaptation::forward_unquantized;
        const ForwardResult r = forward_unquantized_mode(x, fwd);
        print_report("forward ", r.report);
        if (!enc_recon.empty()) write_wav(enc_recon, r.reconstruction);
        if (!enc_report.empty()) write_text(enc_report, segsnr_report_csv(r.report, enc_in));
        return 0;
      }
      if (enc_out.empty()) throw ConfigError("encode needs --output unless --forward is given");
      const EncodeResult r = encode(x, cfg);
      const std::vector<std::uint8_t> bytes = serialize(r.bitstream);
      write_file(enc_out, bytes);
      if (!enc_recon.empty()) write_wav(enc_recon, r.reconstruction);
      if (!enc_report.empty()) write_text(enc_report, segsnr_report_csv(r.report, enc_in));
      print_report("", r.report);
      // What `eval` will measure on the decoded 16-bit WAV.
      const SegSnrReport pcm = segsnr(x.samples, render_pcm16(r.reconstruction).samples, cfg.frame_len);
      std::printf("pcm_segsnr_db=%s config_hash=%08x bytes=%zu body_bytes=%zu\n",
                  format_double(pcm.segsnr_db).c_str(), config_hash(cfg), bytes.size(),
                  r.bitstream.body.size());
    } else if (*dec) {
      const std::vector<std::uint8_t> bytes = read_file(dec_in);
      write_wav(dec_out, decode(bytes));
    } else if (*ev) {
      const Signal ref = read_wav(ev_ref);
      const Signal test = read_wav(ev_test);
      const SegSnrReport r = segsnr(ref.samples, test.samples, ev_frame);
      print_report("", r);
      if (!ev_csv.empty()) write_text(ev_csv, segsnr_report_csv(r, ev_test));
    } else if (*grid) {
      const auto signals = load_corpus(grid_manifest, grid_desk, desk_seed, desk_seconds);
      std::vector<GridRow> rows;
      if (grid_rows.empty()) {
        rows = default_grid_rows();
      } else {
        for (const std::string& label : grid_rows) {
          const auto row = find_row(label);
          if (!row) throw ConfigError("unknown grid row \"" + label + "\"");
          rows.push_back(*row);
        }
      }
      GridOptions opt;
      opt.n_bits = parse_int_list(grid_bits);
      opt.seed = grid_seed;
      opt.threads = grid_threads;
      opt.frame_len = grid_frame;
      if (!grid_resume.empty() && fs::exists(grid_resume)) {
        const auto bytes = read_file(grid_resume);
        opt.resume_csv.assign(bytes.begin(), bytes.end());
      }
      const GridResult g = run_grid(signals, rows, opt);
      if (grid_out.empty()) {
        std::fputs(g.csv.c_str(), stdout);
      } else {
        write_text(grid_out, g.csv);
      }
      std::size_t failed = 0;
      for (const CellResult& c : g.cells) failed += !c.ok();
      if (failed > 0) std::cerr << failed << " cell(s) failed; see the status column\n";
    } else if (*sw) {
      const auto signals = load_corpus(sw_manifest, sw_desk, desk_seed, desk_seconds);
      const std::vector<double> gammas =
          sw_gammas.empty() ? default_sweep_gammas() : parse_double_list(sw_gammas);
      std::vector<std::size_t> epochs;
      for (int e : parse_int_list(sw_epochs)) {
        if (e < 1) throw ConfigError("epochs must be >= 1");
        epochs.push_back(static_cast<std::size_t>(e));
      }
      const SweepResult r = gamma_sweep(signals, gammas, epochs, sw_bits, sw_seed);
      if (sw_out.empty()) {
        std::fputs(r.csv.c_str(), stdout);
      } else {
        write_text(sw_out, r.csv);
      }
    } else if (*corpus) {
      const fs::path m = write_desk_corpus(corpus_dir, desk_seed, corpus_count, desk_seconds);
      std::printf("%s\n", m.string().c_str());
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: bad number in a list option\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: number out of range in a list option\n";
    return kExitUsage;
  }
  return 0;
}

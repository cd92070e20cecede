#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlad/codec.hpp"
#include "nlad/corpus.hpp"

namespace nlad {

/// One row of the experiment tables: a predictor and its training regime.
struct GridRow {
  std::string label;
  PredictorKind predictor = PredictorKind::mlp;
  std::size_t lpc_order = 10;
  TrainConfig train;
};

/// LPC-10 and LPC-25.
std::vector<GridRow> lpc_rows();
/// The 27 neural predictor rows: L-M / B-R, mse / msereg, 6 / 50 epochs,
/// plain / Cmean / Cmedian, with and without validation.
std::vector<GridRow> neural_rows();
/// lpc_rows() followed by neural_rows().
std::vector<GridRow> default_grid_rows();
std::optional<GridRow> find_row(const std::string& label);

/// Codec configuration for one grid cell.
CodecConfig make_cell_config(const GridRow& row, int n_bits, std::uint64_t seed,
                             std::size_t frame_len = 200);

struct GridOptions {
  std::vector<int> n_bits{2, 3, 4, 5};
  std::uint64_t seed = 1;
  std::size_t frame_len = 200;
  /// Worker threads; 0 uses std::thread::hardware_concurrency().
  std::size_t threads = 0;
  /// Text of a previous CSV for the same grid. Cells found there with status
  /// ok and a matching seed and config hash are reused, not recomputed.
  std::string resume_csv;
  /// Keep every freshly encoded bitstream in CellResult::bitstream.
  bool keep_bitstreams = false;
};

struct CellResult {
  std::string row_label;
  int n_bits = 0;
  std::string file;
  double segsnr_db = 0.0;
  double std_db = 0.0;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
  std::uint32_t config_hash = 0;
  std::uint32_t bitstream_crc = 0;
  std::string status = "ok";
  bool reused = false;
  double wall_seconds = 0.0;
  std::vector<std::uint8_t> bitstream;  // only with GridOptions::keep_bitstreams
  // Bayesian hyperparameter diagnostics; not serialized.
  std::size_t bayes_updates = 0;
  double gamma_eff_min = 0.0;
  double gamma_eff_max = 0.0;

  bool ok() const { return status == "ok"; }
};

/// Pooled statistics of one (row, n_bits) over every file.
struct AggregateResult {
  std::string row_label;
  int n_bits = 0;
  double segsnr_db = 0.0;
  double std_db = 0.0;
  std::size_t frames = 0;
  std::uint32_t config_hash = 0;
  std::size_t files_ok = 0;
  std::size_t files_failed = 0;
};

/// Pools per-file (mean, sample std, frame count) triples into the statistics
/// of the concatenated per-frame values.
AggregateResult pool(std::span<const CellResult> cells);

struct GridResult {
  std::vector<CellResult> cells;  // (row, n_bits, file) order
  std::vector<AggregateResult> aggregates;
  std::string csv;

  const AggregateResult* aggregate(const std::string& label, int n_bits) const;
  const CellResult* cell(const std::string& label, int n_bits, const std::string& file) const;
};

/// Runs every (row, n_bits, file) cell. A failing cell is recorded with an
/// error status and the rest continue.
GridResult run_grid(const std::vector<NamedSignal>& corpus, const std::vector<GridRow>& rows,
                    const GridOptions& options);

/// SEGSNR versus performance ratio for L-M + msereg, best_train selection.
struct SweepPoint {
  double gamma = 0.0;
  std::size_t epochs = 0;
  int n_bits = 0;
  std::string file;
  double segsnr_db = 0.0;
  double std_db = 0.0;
  std::size_t frames = 0;
  std::uint32_t config_hash = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string csv;
};

/// {0, 0.1, ..., 1.0}
std::vector<double> default_sweep_gammas();
SweepResult gamma_sweep(const std::vector<NamedSignal>& corpus, const std::vector<double>& gammas,
                        const std::vector<std::size_t>& epochs, int n_bits, std::uint64_t seed,
                        std::size_t frame_len = 200);

/// "nlad-<version> <compiler>"
std::string build_identifier();

/// CSV text for a report on one (original, reconstruction) pair.
std::string segsnr_report_csv(const SegSnrReport& report, const std::string& label);

}  // namespace nlad

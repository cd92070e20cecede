#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "nlad/codec.hpp"
#include "nlad/corpus.hpp"
#include "nlad/error.hpp"
#include "nlad/experiment.hpp"
#include "nlad/wav.hpp"
#include "oracles.hpp"

namespace nlad {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("nlad_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<NamedSignal>& small_corpus() {
  static const std::vector<NamedSignal> c = [] {
    auto all = desk_corpus(5, 10, 0.25);
    return std::vector<NamedSignal>{all[0], all[1], all[9]};
  }();
  return c;
}

std::vector<GridRow> small_rows() {
  return {*find_row("LPC-10"), *find_row("L-M mse 6"), *find_row("B-R V Cmedian msereg 50")};
}

TEST(Wav, RoundTripIsExactForPcmSamples) {
  const Signal s = desk_corpus(3, 1, 0.1).front().signal;
  const Signal back = decode_wav(encode_wav(s));
  EXPECT_EQ(back.sample_rate, 8000);
  EXPECT_EQ(back.samples, s.samples);
  const auto bytes = encode_wav(s);
  EXPECT_EQ(bytes.size(), 44 + 2 * s.samples.size());
}

TEST(Wav, ClampsAndRounds) {
  EXPECT_EQ(to_pcm16(2.0), 32767);
  EXPECT_EQ(to_pcm16(-2.0), -32767);
  EXPECT_EQ(to_pcm16(0.6 / 32768.0), 1);
  // Ties go to even.
  EXPECT_EQ(to_pcm16(0.5 / 32768.0), 0);
  EXPECT_EQ(to_pcm16(1.5 / 32768.0), 2);
  EXPECT_EQ(to_pcm16(-0.4 / 32768.0), 0);
  const Signal r = render_pcm16(Signal{{0.1, -1.0, 1.0}, 8000});
  EXPECT_EQ(r.samples[0], 3277.0 / 32768.0);
  EXPECT_EQ(r.samples[1], -32767.0 / 32768.0);
}

TEST(Wav, RejectsMalformedInput) {
  auto bytes = encode_wav(Signal{std::vector<double>(10, 0.0), 8000});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_wav(bad), FormatError);
  bad = bytes;
  bad[22] = 2;  // channels
  EXPECT_THROW(decode_wav(bad), FormatError);
  bad = bytes;
  bad[34] = 8;  // bits per sample
  EXPECT_THROW(decode_wav(bad), FormatError);
  bad = bytes;
  bad.resize(30);
  EXPECT_THROW(decode_wav(bad), FormatError);
}

TEST(Corpus, DeterministicAndPcmExact) {
  const auto a = desk_corpus(2024, 10, 0.2);
  const auto b = desk_corpus(2024, 10, 0.2);
  ASSERT_EQ(a.size(), 10u);
  std::set<std::string> names;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].signal.samples, b[i].signal.samples);
    EXPECT_EQ(a[i].signal.samples.size(), 1600u);
    names.insert(a[i].name);
    for (double v : a[i].signal.samples) {
      ASSERT_LE(std::fabs(v), 1.0);
      ASSERT_EQ(v * 32768.0, std::round(v * 32768.0));
    }
  }
  EXPECT_EQ(names.size(), 10u);
  EXPECT_NE(desk_corpus(2025, 1, 0.2)[0].signal.samples, a[0].signal.samples);
}

TEST(Corpus, ManifestAndFiles) {
  const fs::path dir = scratch_dir("manifest");
  const fs::path manifest = write_desk_corpus(dir, 1, 10, 0.1);
  {
    std::ofstream m(manifest, std::ios::app);
    m << "\n   # comment\n/abs/elsewhere.wav\n";
  }
  const auto files = read_manifest(manifest, dir);
  ASSERT_EQ(files.size(), 11u);
  EXPECT_EQ(files[0], dir / "speech_m0.wav");
  EXPECT_EQ(files[10], fs::path("/abs/elsewhere.wav"));
  EXPECT_EQ(read_wav(files[9]).samples, desk_corpus(1, 10, 0.1)[9].signal.samples);
  EXPECT_THROW(read_manifest(dir / "missing.txt", dir), Error);
}

TEST(GridRows, MatchTableLayout) {
  EXPECT_EQ(lpc_rows().size(), 2u);
  const auto rows = neural_rows();
  ASSERT_EQ(rows.size(), 27u);
  std::set<std::string> labels;
  for (const GridRow& r : rows) {
    labels.insert(r.label);
    EXPECT_EQ(r.train.n_starts, 5u);
    EXPECT_EQ(r.train.gamma, 0.9);
  }
  EXPECT_EQ(labels.size(), 27u);
  EXPECT_EQ(rows.front().label, "L-M mse 6");
  EXPECT_EQ(rows.back().label, "B-R V Cmedian msereg 50");
  const auto cmean = find_row("L-M Cmean mse 50");
  ASSERT_TRUE(cmean);
  EXPECT_EQ(cmean->train.selection, Selection::committee_mean);
  EXPECT_EQ(cmean->train.epochs, 50u);
  const auto brv = find_row("B-R V msereg 50");
  ASSERT_TRUE(brv);
  EXPECT_TRUE(brv->train.validation);
  EXPECT_EQ(brv->train.algorithm, TrainAlgorithm::bayes);
  EXPECT_FALSE(find_row("nope"));
  EXPECT_EQ(default_grid_rows().size(), 29u);
}

TEST(Pool, EqualsRecomputationFromFrames) {
  std::vector<CellResult> cells;
  std::vector<double> all_frames;
  for (const NamedSignal& s : small_corpus()) {
    const EncodeResult r = encode(s.signal, make_cell_config(*find_row("LPC-10"), 3, 1));
    CellResult c;
    c.segsnr_db = r.report.segsnr_db;
    c.std_db = r.report.std_db;
    c.frames = r.report.frames_counted;
    cells.push_back(c);
    all_frames.insert(all_frames.end(), r.report.per_frame_snr_db.begin(),
                      r.report.per_frame_snr_db.end());
  }
  const AggregateResult a = pool(cells);
  EXPECT_EQ(a.frames, all_frames.size());
  EXPECT_NEAR(a.segsnr_db, oracle::mean_of(all_frames), 1e-9);
  EXPECT_NEAR(a.std_db, oracle::sample_std(all_frames), 1e-9);
  cells[1].status = "error: x";
  EXPECT_EQ(pool(cells).files_failed, 1u);
}

class GridTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    GridOptions opt;
    opt.n_bits = {2, 4};
    opt.seed = 3;
    opt.threads = 1;
    full_ = new GridResult(run_grid(small_corpus(), small_rows(), opt));
  }
  static void TearDownTestSuite() {
    delete full_;
    full_ = nullptr;
  }
  static GridResult* full_;
};
GridResult* GridTest::full_ = nullptr;

TEST_F(GridTest, LayoutAndProvenance) {
  const std::string& csv = full_->csv;
  EXPECT_EQ(csv.rfind("# nlad csv v1\n# build=" + build_identifier() + "\n# seed=3\n", 0), 0u);
  EXPECT_NE(csv.find("row_label,n_bits,segsnr_db,std_db,file,frames,seed,config_hash"),
            std::string::npos);
  EXPECT_EQ(full_->cells.size(), 3u * 2u * 3u);
  EXPECT_EQ(full_->aggregates.size(), 3u * 2u);
  // Checksum covers every byte before the checksum line.
  const std::size_t at = csv.rfind("#checksum=");
  ASSERT_NE(at, std::string::npos);
  char expect[9];
  std::snprintf(expect, sizeof(expect), "%08x", crc32(std::string_view(csv).substr(0, at)));
  EXPECT_EQ(csv.substr(at + 10, 8), expect);
  for (const CellResult& c : full_->cells) EXPECT_TRUE(c.ok()) << c.status;
}

TEST_F(GridTest, CellMatchesDirectEncode) {
  const NamedSignal& s = small_corpus()[1];
  const CodecConfig cfg = make_cell_config(*find_row("L-M mse 6"), 4, 3);
  const EncodeResult r = encode(s.signal, cfg);
  const CellResult* c = full_->cell("L-M mse 6", 4, s.name);
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->segsnr_db, r.report.segsnr_db);
  EXPECT_EQ(c->std_db, r.report.std_db);
  EXPECT_EQ(c->config_hash, config_hash(cfg));
  EXPECT_EQ(c->bitstream_crc, crc32(serialize(r.bitstream)));
}

TEST_F(GridTest, AggregatesRecomputable) {
  for (const AggregateResult& a : full_->aggregates) {
    std::vector<CellResult> group;
    for (const CellResult& c : full_->cells) {
      if (c.row_label == a.row_label && c.n_bits == a.n_bits) group.push_back(c);
    }
    const AggregateResult again = pool(group);
    EXPECT_NEAR(again.segsnr_db, a.segsnr_db, 1e-9);
    EXPECT_NEAR(again.std_db, a.std_db, 1e-9);
  }
}

TEST_F(GridTest, DeterministicAcrossThreadCounts) {
  GridOptions opt;
  opt.n_bits = {2, 4};
  opt.seed = 3;
  opt.threads = 3;
  EXPECT_EQ(run_grid(small_corpus(), small_rows(), opt).csv, full_->csv);
}

TEST_F(GridTest, ResumeRecomputesOnlyMissingCells) {
  GridOptions opt;
  opt.n_bits = {2, 4};
  opt.seed = 3;
  opt.threads = 1;
  auto partial_rows = small_rows();
  partial_rows.pop_back();
  opt.resume_csv = run_grid(small_corpus(), partial_rows, opt).csv;
  const GridResult resumed = run_grid(small_corpus(), small_rows(), opt);
  EXPECT_EQ(resumed.csv, full_->csv);
  std::size_t reused = 0;
  for (const CellResult& c : resumed.cells) reused += c.reused;
  EXPECT_EQ(reused, 2u * 2u * 3u);

  // A different seed invalidates every stored cell.
  opt.seed = 4;
  opt.n_bits = {2};
  const GridResult other = run_grid(small_corpus(), {small_rows()[0]}, opt);
  for (const CellResult& c : other.cells) EXPECT_FALSE(c.reused);
}

TEST(Grid, FailingCellsAreRecordedAndOthersContinue) {
  GridOptions opt;
  opt.n_bits = {3};
  opt.frame_len = 20;  // too short for LPC-25
  opt.threads = 1;
  const GridResult g = run_grid({small_corpus()[0]}, lpc_rows(), opt);
  ASSERT_EQ(g.cells.size(), 2u);
  EXPECT_TRUE(g.cells[0].ok());
  EXPECT_FALSE(g.cells[1].ok());
  EXPECT_NE(g.csv.find("LPC-25,3,,,*,0,"), std::string::npos);
  EXPECT_THROW(run_grid({}, lpc_rows(), opt), PreconditionError);
}

TEST(Sweep, UnitRatioEqualsPlainMseAndIncludesDefault) {
  const std::vector<NamedSignal> one{small_corpus()[0]};
  const auto gammas = default_sweep_gammas();
  ASSERT_EQ(gammas.size(), 11u);
  EXPECT_NE(std::find(gammas.begin(), gammas.end(), 0.9), gammas.end());
  const SweepResult sw = gamma_sweep(one, {0.9, 1.0}, {6}, 2, 3);
  ASSERT_EQ(sw.points.size(), 2u);
  const EncodeResult plain = encode(one[0].signal, make_cell_config(*find_row("L-M mse 6"), 2, 3));
  EXPECT_EQ(sw.points[1].segsnr_db, plain.report.segsnr_db);
  EXPECT_EQ(sw.csv.rfind("# nlad csv v1", 0), 0u);
  EXPECT_NE(sw.csv.find("#checksum="), std::string::npos);
  EXPECT_THROW(gamma_sweep(one, {1.5}, {6}, 2, 3), ConfigError);
}

TEST(Report, CsvMarksSilentFrames) {
  std::vector<double> x(600, 0.0);
  for (std::size_t n = 200; n < 400; ++n) x[n] = 0.1;
  std::vector<double> y = x;
  y[250] = 0.0;
  const SegSnrReport r = segsnr(x, y, 200);
  const std::string csv = segsnr_report_csv(r, "probe");
  EXPECT_NE(csv.find("0,0,0,silent\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("frames_silent,2\n"), std::string::npos);
}

}  // namespace
}  // namespace nlad

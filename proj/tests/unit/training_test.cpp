#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nlad/error.hpp"
#include "nlad/training.hpp"
#include "oracles.hpp"

namespace nlad {
namespace {

std::vector<double> ar2_frame(std::uint64_t seed, std::size_t n = 200) {
  auto s = oracle::ar2_series(seed, n + 100, 1.3, -0.6, 1.0).x;
  s.erase(s.begin(), s.begin() + 100);
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::fabs(v));
  for (double& v : s) v *= 0.5 / peak;
  return s;
}

std::vector<double> noise_frame(std::uint64_t seed, std::size_t n = 200) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<double> s(n);
  for (double& v : s) v = u(rng);
  return s;
}

// Mean squared error over the pairs of the best linear predictor using the
// two most recent inputs, solved from the pair-wise normal equations.
double linear2_optimum_mse(const std::vector<PredictionSample>& data) {
  std::vector<std::vector<double>> a(2, std::vector<double>(2, 0.0));
  std::vector<double> b(2, 0.0);
  for (const auto& s : data) {
    const double x[2] = {s.input[9], s.input[8]};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) a[i][j] += x[i] * x[j];
      b[i] += x[i] * s.target;
    }
  }
  const auto c = oracle::solve_dense(a, b);
  double sse = 0.0;
  for (const auto& s : data) {
    const double e = s.target - c[0] * s.input[9] - c[1] * s.input[8];
    sse += e * e;
  }
  return sse / static_cast<double>(data.size());
}

TrainConfig lm_config(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  return c;
}

TEST(TrainConfigValidate, RejectsOutOfRange) {
  TrainConfig c;
  EXPECT_NO_THROW(validate(c));
  c.gamma = 1.5;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.n_starts = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.patience = 0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.mu_inc = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(MakeDataset, SlidingWindowWithinFrame) {
  std::vector<double> frame(200);
  std::iota(frame.begin(), frame.end(), 0.0);
  const auto d = make_dataset(frame);
  ASSERT_EQ(d.size(), 190u);
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    EXPECT_EQ(d[i].target, frame[i + 10]);
    EXPECT_TRUE(std::equal(d[i].input.begin() + 1, d[i].input.end(), d[i + 1].input.begin()));
  }
  EXPECT_EQ(d.back().target, 199.0);
}

TEST(MakeDataset, ConstantFrameAndErrors) {
  const auto d = make_dataset(std::vector<double>(30, 0.25));
  for (const auto& s : d) {
    EXPECT_EQ(s.target, 0.25);
    for (double v : s.input) EXPECT_EQ(v, 0.25);
  }
  EXPECT_THROW(make_dataset(std::vector<double>(10, 0.0)), DegenerateFrameError);
  EXPECT_THROW(make_dataset(std::vector<double>(40, 0.0), 25), PreconditionError);
}

TEST(Performance, MseExamples) {
  EXPECT_EQ(mse(std::vector<double>(7, 0.0)), 0.0);
  EXPECT_EQ(mse(std::vector<double>{1.0, -1.0}), 1.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> e(333);
  for (double& v : e) v = g(rng);
  double naive = 0.0;
  for (double v : e) naive += v * v / 333.0;
  EXPECT_NEAR(mse(e), naive, 1e-12);
  EXPECT_THROW(mse(std::vector<double>{}), PreconditionError);
}

TEST(Performance, MseregExamples) {
  const std::vector<double> e{0.3, -0.2, 0.7};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  MlpWeights w;
  for (double& v : w.w) v = u(rng);
  EXPECT_EQ(msereg(e, w, 1.0), mse(e));
  EXPECT_EQ(msereg(e, MlpWeights{}, 0.37), 0.37 * mse(e));

  MlpWeights half;
  half.w.fill(0.5);
  EXPECT_EQ(msereg(e, half, 0.0), 0.25);

  MlpWeights unit;
  unit.w[0] = 1.0;
  EXPECT_NEAR(msereg(std::vector<double>{0.1}, unit, 0.9), 0.013, 1e-15);
}

TEST(TrainLm, ReachesLinearOptimumOnAr2) {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto data = make_dataset(ar2_frame(seed));
    const double floor = linear2_optimum_mse(data);
    TrainConfig cfg = lm_config(50);
    TrainedPredictor p = multi_start(data, {}, cfg, seed, 0);
    EXPECT_LE(p.final_train_error, floor + 1e-3) << "seed " << seed;
  }
}

TEST(TrainLm, ZeroTargetsStayAtOptimum) {
  std::vector<PredictionSample> data(20);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& s : data) {
    for (double& v : s.input) v = u(rng);
    s.target = 0.0;
  }
  const TrainResult r = train_lm(data, MlpWeights{}, lm_config(6));
  EXPECT_EQ(r.final_mse, 0.0);
  EXPECT_EQ(r.weights, MlpWeights{});
  EXPECT_EQ(r.stop, StopReason::converged);
}

TEST(TrainLm, AcceptedStepsNeverIncrease) {
  const auto data = make_dataset(ar2_frame(21));
  for (Performance perf : {Performance::mse, Performance::msereg}) {
    for (std::uint32_t init = 0; init < 5; ++init) {
      TrainConfig cfg = lm_config(50);
      cfg.performance = perf;
      const TrainResult r = train_lm(data, init_random(9, 1, init), cfg);
      ASSERT_EQ(r.performance_trace.size(), r.epochs_run + 1);
      for (std::size_t i = 1; i < r.performance_trace.size(); ++i) {
        EXPECT_LT(r.performance_trace[i], r.performance_trace[i - 1]);
      }
    }
  }
}

TEST(TrainLm, MseregWithUnitRatioEqualsMse) {
  const auto data = make_dataset(ar2_frame(2));
  TrainConfig reg = lm_config(6);
  reg.performance = Performance::msereg;
  reg.gamma = 1.0;
  const TrainResult a = train_lm(data, init_random(1, 2, 3), lm_config(6));
  const TrainResult b = train_lm(data, init_random(1, 2, 3), reg);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.mse_trace, b.mse_trace);
}

TEST(TrainLm, MseregMatchesGradientDescentStationaryPoint) {
  // At convergence the msereg gradient, built here from finite differences
  // of the objective, must vanish.
  const auto data = make_dataset(ar2_frame(4, 60));
  TrainConfig cfg = lm_config(400);
  cfg.performance = Performance::msereg;
  cfg.gamma = 0.9;
  const TrainResult r = train_lm(data, init_random(4, 0, 0), cfg);
  auto objective = [&](const MlpWeights& w) { return msereg(errors(w, data), w, 0.9); };
  for (std::size_t j = 0; j < kMlpWeights; ++j) {
    MlpWeights p = r.weights, m = r.weights;
    p.w[j] += 1e-6;
    m.w[j] -= 1e-6;
    EXPECT_NEAR((objective(p) - objective(m)) / 2e-6, 0.0, 1e-6) << "weight " << j;
  }
}

TEST(TrainBayes, EffectiveParametersBounded) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto data = make_dataset(seed % 2 ? ar2_frame(seed) : noise_frame(seed));
    TrainConfig cfg = lm_config(50);
    const TrainResult r = train_bayes(data, init_random(seed, 0, 0), cfg);
    ASSERT_FALSE(r.bayes_trace.empty());
    EXPECT_EQ(r.bayes_trace.size(), r.epochs_run - 1);
    for (const BayesStep& s : r.bayes_trace) {
      EXPECT_GT(s.gamma_eff, 0.0);
      EXPECT_LT(s.gamma_eff, 25.0);
      EXPECT_GT(s.alpha, 0.0);
      EXPECT_GT(s.beta, 0.0);
    }
  }
}

TEST(TrainBayes, NoiseUsesFewerParametersThanAr2) {
  TrainConfig cfg = lm_config(50);
  double noise = 0.0, ar = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    noise += train_bayes(make_dataset(noise_frame(100 + seed)), init_random(seed, 0, 0), cfg)
                 .bayes_trace.back()
                 .gamma_eff;
    ar += train_bayes(make_dataset(ar2_frame(100 + seed)), init_random(seed, 0, 0), cfg)
              .bayes_trace.back()
              .gamma_eff;
  }
  EXPECT_LT(noise, ar);
}

TEST(TrainBayes, FitsLikeLmWithSmallerWeights) {
  // Paired runs from one initialization. With 25 weights the unregularized
  // fit undercuts the regularized one by about n/N, so a long frame is used.
  const TrainConfig cfg = lm_config(50);
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const auto data = make_dataset(ar2_frame(seed, 1000));
    for (std::uint32_t init = 0; init < 3; ++init) {
      const MlpWeights w0 = init_random(seed, 0, init);
      const TrainResult lm = train_lm(data, w0, cfg);
      const TrainResult by = train_bayes(data, w0, cfg);
      double ew_lm = 0.0, ew_br = 0.0;
      for (double v : lm.weights.w) ew_lm += v * v;
      for (double v : by.weights.w) ew_br += v * v;
      EXPECT_LE(by.final_mse, 1.1 * lm.final_mse) << seed << "/" << init;
      EXPECT_LE(ew_br, ew_lm) << seed << "/" << init;
    }
  }
}

TEST(TrainBayes, FirstStepIsUnregularized) {
  const auto data = make_dataset(ar2_frame(3));
  const MlpWeights w0 = init_random(3, 0, 0);
  const TrainResult by = train_bayes(data, w0, lm_config(1));
  EXPECT_EQ(by.weights, train_lm(data, w0, lm_config(1)).weights);
  EXPECT_TRUE(by.bayes_trace.empty());
  EXPECT_EQ(train_bayes(data, w0, lm_config(6)).bayes_trace.size(), 5u);
}

TEST(TrainWithValidation, MirrorsBaseWhenValidationIsTraining) {
  const auto data = make_dataset(ar2_frame(8));
  TrainConfig cfg = lm_config(6);
  cfg.patience = 6;
  const MlpWeights init = init_random(8, 1, 2);
  const TrainResult base = train_lm(data, init, cfg);
  const TrainResult val = train_with_validation(data, data, init, cfg);
  EXPECT_EQ(val.weights, base.weights);
  EXPECT_EQ(val.best_epoch, base.epochs_run);
  EXPECT_EQ(val.validation_trace.back(), base.final_mse);
}

TEST(TrainWithValidation, ImmediateStopKeepsFirstEpoch) {
  const auto train = make_dataset(ar2_frame(9));
  TrainConfig cfg = lm_config(20);
  cfg.patience = 1;
  const MlpWeights init = init_random(9, 0, 0);
  // Validation targets are the epoch-1 network's own outputs, so the
  // validation error is zero there and positive afterwards.
  const MlpWeights first = train_lm(train, init, lm_config(1)).weights;
  auto val = train;
  for (auto& s : val) s.target = forward(first, s.input);
  const TrainResult r = train_with_validation(train, val, init, cfg);
  ASSERT_EQ(r.validation_trace.size(), 2u);
  EXPECT_EQ(r.validation_trace[0], 0.0);
  EXPECT_GT(r.validation_trace[1], 0.0);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_EQ(r.stop, StopReason::validation);
  EXPECT_EQ(r.weights, first);
}

TEST(TrainWithValidation, ReturnsReplayableArgmin) {
  const auto train = make_dataset(ar2_frame(10));
  const auto val = make_dataset(noise_frame(10));
  for (TrainAlgorithm alg : {TrainAlgorithm::lm, TrainAlgorithm::bayes}) {
    for (std::uint32_t init = 0; init < 5; ++init) {
      TrainConfig cfg = lm_config(50);
      cfg.algorithm = alg;
      cfg.patience = 3;
      const TrainResult r = train_with_validation(train, val, init_random(2, 3, init), cfg);
      ASSERT_FALSE(r.validation_trace.empty());
      const auto it = std::min_element(r.validation_trace.begin(), r.validation_trace.end());
      EXPECT_EQ(r.best_epoch, static_cast<std::size_t>(it - r.validation_trace.begin()) + 1);
      EXPECT_EQ(mse(errors(r.weights, val)), *it);
      EXPECT_LE(r.validation_trace.size() - r.best_epoch, cfg.patience);
    }
  }
}

TEST(MultiStart, SingleStartEqualsSingleRun) {
  const auto data = make_dataset(ar2_frame(12));
  TrainConfig cfg = lm_config(6);
  cfg.n_starts = 1;
  const TrainedPredictor p = multi_start(data, {}, cfg, 77, 4);
  const TrainResult r = train_lm(data, init_random(77, 4, 0), cfg);
  ASSERT_EQ(p.members.size(), 1u);
  EXPECT_EQ(p.members[0], r.weights);
  EXPECT_EQ(p.final_train_error, r.final_mse);
}

TEST(MultiStart, TieBreakAndDivergedStarts) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(select_best_start(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(select_best_start(std::vector<double>{0.7, 0.2, 0.2, 0.9}), 1u);
  EXPECT_EQ(select_best_start(std::vector<double>{nan, 0.3, nan}), 1u);
  EXPECT_EQ(select_best_start(std::vector<double>{nan, nan}), 2u);
}

TEST(MultiStart, SelectionMatchesExhaustiveComparison) {
  const auto data = make_dataset(ar2_frame(13));
  TrainConfig cfg = lm_config(6);
  const TrainedPredictor p = multi_start(data, {}, cfg, 5, 6);
  std::vector<double> errs;
  for (std::uint32_t i = 0; i < 5; ++i) errs.push_back(train_lm(data, init_random(5, 6, i), cfg).final_mse);
  EXPECT_EQ(p.start_train_errors, errs);
  const auto best = static_cast<std::size_t>(std::min_element(errs.begin(), errs.end()) - errs.begin());
  EXPECT_EQ(p.selected_start, best);
  EXPECT_EQ(p.final_train_error, errs[best]);
  EXPECT_EQ(p.members[0], train_lm(data, init_random(5, 6, static_cast<std::uint32_t>(best)), cfg).weights);
}

TEST(MultiStart, CommitteeKeepsEveryMember) {
  const auto data = make_dataset(ar2_frame(14));
  TrainConfig cfg = lm_config(6);
  cfg.selection = Selection::committee_median;
  const TrainedPredictor p = multi_start(data, {}, cfg, 5, 6);
  EXPECT_EQ(p.kind, TrainedPredictor::Kind::committee);
  EXPECT_EQ(p.members.size(), 5u);
  ASSERT_TRUE(p.fusion.has_value());
  EXPECT_EQ(*p.fusion, Fusion::median);
  cfg.selection = Selection::best_train;
  EXPECT_FALSE(multi_start(data, {}, cfg, 5, 6).fusion.has_value());
}

TEST(MultiStart, FullyDeterministic) {
  const auto data = make_dataset(ar2_frame(15));
  const auto val = make_dataset(ar2_frame(16));
  TrainConfig cfg = lm_config(50);
  cfg.algorithm = TrainAlgorithm::bayes;
  cfg.validation = true;
  cfg.selection = Selection::committee_mean;
  const TrainedPredictor a = multi_start(data, val, cfg, 1, 2);
  const TrainedPredictor b = multi_start(data, val, cfg, 1, 2);
  EXPECT_EQ(a.members, b.members);
  EXPECT_EQ(a.start_train_errors, b.start_train_errors);
  EXPECT_EQ(a.stop_epochs, b.stop_epochs);
}

// Network whose output is the constant c for any input.
MlpWeights constant_net(double c) {
  MlpWeights w;
  w.b2() = c;
  return w;
}

TEST(Committee, OutlierExample) {
  std::vector<MlpWeights> m{constant_net(0.1), constant_net(0.1), constant_net(0.1),
                            constant_net(0.1), constant_net(50.0)};
  const std::array<double, 10> x{};
  EXPECT_DOUBLE_EQ(committee_predict(m, Fusion::median, x), 0.1);
  EXPECT_NEAR(committee_predict(m, Fusion::mean, x), 10.08, 1e-12);
}

TEST(Committee, EvenMedianAndIdenticalMembers) {
  std::vector<MlpWeights> m{constant_net(0.4), constant_net(-1.0), constant_net(0.2),
                            constant_net(3.0)};
  const std::array<double, 10> x{};
  EXPECT_DOUBLE_EQ(committee_predict(m, Fusion::median, x), 0.3);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MlpWeights w;
  for (double& v : w.w) v = u(rng);
  std::array<double, 10> in{};
  for (double& v : in) v = u(rng);
  const std::vector<MlpWeights> same(3, w);
  EXPECT_EQ(committee_predict(same, Fusion::median, in), forward(w, in));
  EXPECT_NEAR(committee_predict(same, Fusion::mean, in), forward(w, in), 1e-15);
}

TEST(Committee, MatchesSortAndSumOracleAndIsPermutationInvariant) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MlpWeights> m(5);
    for (auto& w : m) {
      for (double& v : w.w) v = u(rng);
    }
    std::array<double, 10> x{};
    for (double& v : x) v = u(rng);
    std::vector<double> outs;
    for (const auto& w : m) outs.push_back(oracle::naive_forward(w.w, x));
    std::vector<double> sorted = outs;
    std::sort(sorted.begin(), sorted.end());
    const double med = committee_predict(m, Fusion::median, x);
    EXPECT_NEAR(med, sorted[2], 1e-12);
    EXPECT_NEAR(committee_predict(m, Fusion::mean, x), oracle::mean_of(outs), 1e-12);
    EXPECT_GE(med, sorted.front());
    EXPECT_LE(med, sorted.back());
    std::shuffle(m.begin(), m.end(), rng);
    EXPECT_EQ(committee_predict(m, Fusion::median, x), med);
  }
  EXPECT_THROW(committee_predict(std::vector<MlpWeights>{}, Fusion::mean, std::array<double, 10>{}),
               PreconditionError);
}

}  // namespace
}  // namespace nlad

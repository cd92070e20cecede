#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nlad/mlp.hpp"

namespace nlad {

enum class TrainAlgorithm : std::uint8_t { lm, bayes };
enum class Performance : std::uint8_t { mse, msereg };
enum class Selection : std::uint8_t { best_train, committee_mean, committee_median };
enum class Fusion : std::uint8_t { mean, median };

struct TrainConfig {
  TrainAlgorithm algorithm = TrainAlgorithm::lm;
  Performance performance = Performance::mse;
  double gamma = 0.9;  // performance ratio, msereg only
  std::size_t epochs = 6;
  std::size_t n_starts = 5;
  Selection selection = Selection::best_train;
  bool validation = false;
  std::size_t patience = 5;
  double mu0 = 1e-2;
  double mu_inc = 10.0;
  double mu_dec = 0.1;
  double mu_max = 1e10;
  Activation activation = Activation::tanh;
};

/// Throws ConfigError when an invariant of TrainConfig does not hold.
void validate(const TrainConfig& cfg);

/// Sliding-window pairs inside one frame: L - order pairs, never crossing the
/// frame boundary. Only order 10 is supported by the network.
std::vector<PredictionSample> make_dataset(std::span<const double> frame,
                                           std::size_t order = kMlpInputs);

double mse(std::span<const double> e);
/// gamma * mse(e) + (1 - gamma) * mean(w_j^2).
double msereg(std::span<const double> e, const MlpWeights& w, double gamma);

/// Hyperparameters after one Bayesian update.
struct BayesStep {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma_eff = 0.0;
  double data_error = 0.0;    // E_D = sum e^2
  double weight_error = 0.0;  // E_W = sum w^2
  /// beta*E_D / (beta*E_D + alpha*E_W); exposed for comparison with the
  /// fixed msereg ratio, not claimed to be equivalent.
  double implied_ratio = 0.0;
};

enum class StopReason : std::uint8_t { epochs, mu_max, converged, validation, diverged };

struct TrainResult {
  MlpWeights weights;
  /// Objective value at the initial point followed by one entry per accepted
  /// step. LM: mse or msereg. Bayesian: beta*E_D + alpha*E_W with the
  /// hyperparameters in force when the step was accepted.
  std::vector<double> performance_trace;
  /// Training mse after each accepted step, entry 0 at the initial point.
  std::vector<double> mse_trace;
  /// One entry per accepted step after the first; the first step is taken
  /// with alpha = 0, beta = 1 and only seeds the hyperparameters.
  std::vector<BayesStep> bayes_trace;
  std::size_t epochs_run = 0;
  StopReason stop = StopReason::epochs;
  double final_mse = 0.0;

  /// Set by train_with_validation: validation mse after each epoch (index
  /// 0 is epoch 1) and the epoch whose weights were returned.
  std::vector<double> validation_trace;
  std::size_t best_epoch = 0;
};

/// Levenberg-Marquardt on mse or msereg. One epoch is one accepted step.
TrainResult train_lm(std::span<const PredictionSample> data, const MlpWeights& init,
                     const TrainConfig& cfg);

/// Gauss-Newton Bayesian regularization with LM steps on beta*E_D + alpha*E_W.
/// The first step is unregularized; alpha and beta are then seeded from
/// gamma_eff = n and re-estimated after every further step.
TrainResult train_bayes(std::span<const PredictionSample> data, const MlpWeights& init,
                        const TrainConfig& cfg);

/// Runs train_lm or train_bayes (per cfg.algorithm) epoch by epoch and keeps
/// the weights at the minimum validation mse. Stops after cfg.patience epochs
/// without a new minimum.
TrainResult train_with_validation(std::span<const PredictionSample> train_data,
                                  std::span<const PredictionSample> val_data,
                                  const MlpWeights& init, const TrainConfig& cfg);

/// Dispatches on cfg.algorithm and cfg.validation.
TrainResult train_one(std::span<const PredictionSample> data,
                      std::span<const PredictionSample> val_data, const MlpWeights& init,
                      const TrainConfig& cfg);

struct TrainedPredictor {
  enum class Kind : std::uint8_t { single, committee };

  Kind kind = Kind::single;
  std::vector<MlpWeights> members;
  std::optional<Fusion> fusion;  // set iff kind == committee
  Activation activation = Activation::tanh;

  // Diagnostics.
  double final_train_error = 0.0;
  std::size_t selected_start = 0;
  std::vector<double> start_train_errors;  // per start, NaN when diverged
  std::vector<std::vector<BayesStep>> bayes_traces;
  std::vector<std::size_t> stop_epochs;
  /// Every start diverged; the predictor outputs zero.
  bool fallback_zero = false;

  double predict(std::span<const double> input) const;
};

/// Index of the smallest finite training error, ties to the lowest index.
/// Returns errors.size() when none is finite.
std::size_t select_best_start(std::span<const double> errors);

/// Trains cfg.n_starts networks from init_random(rng_seed, frame_index, i).
/// `val_data` is used only when cfg.validation is set.
TrainedPredictor multi_start(std::span<const PredictionSample> data,
                             std::span<const PredictionSample> val_data, const TrainConfig& cfg,
                             std::uint64_t rng_seed, std::uint64_t frame_index);

/// Mean or median of the member outputs. The median of an even count is the
/// average of the two middle values.
double committee_predict(std::span<const MlpWeights> members, Fusion fusion,
                         std::span<const double> input, Activation act = Activation::tanh);

/// Median of `values` (reorders the span).
double median_inplace(std::span<double> values);

}  // namespace nlad

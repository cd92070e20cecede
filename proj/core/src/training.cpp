#include "nlad/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "nlad/error.hpp"

namespace nlad {

namespace {

constexpr double kWeightEnergyFloor = 1e-12;
constexpr auto kN = static_cast<Eigen::Index>(kMlpWeights);

using Mat = Eigen::Matrix<double, kMlpWeights, kMlpWeights>;
using Vec = Eigen::Matrix<double, kMlpWeights, 1>;
using RowMajorJ = Eigen::Matrix<double, Eigen::Dynamic, kMlpWeights, Eigen::RowMajor>;

double sum_sq(const MlpWeights& w) {
  double acc = 0.0;
  for (double v : w.w) acc += v * v;
  return acc;
}

double sum_sq(std::span<const double> e) {
  double acc = 0.0;
  for (double v : e) acc += v * v;
  return acc;
}

bool all_finite(const MlpWeights& w) {
  return std::all_of(w.w.begin(), w.w.end(), [](double v) { return std::isfinite(v); });
}

// Levenberg-Marquardt on the objective
//   data_coef * sum(e^2) + weight_coef * sum(w^2),
// which covers mse (1, 0), msereg (gamma, (1 - gamma) N / n) and the Bayesian
// objective (beta, alpha). One call to step() is one epoch: it retries with a
// larger damping factor until a step lowers the objective.
class LevenbergMarquardt {
 public:
  LevenbergMarquardt(std::span<const PredictionSample> data, const MlpWeights& init,
                     const TrainConfig& cfg)
      : data_(data), cfg_(cfg), w_(init), mu_(cfg.mu0) {
    if (data.empty()) throw PreconditionError("training: empty dataset");
    n_samples_ = static_cast<double>(data.size());
    bayes_ = cfg.algorithm == TrainAlgorithm::bayes;
    linearize();

    if (bayes_) {
      // The first step is unregularized (alpha = 0, beta = 1); see accept().
      data_coef_ = 1.0;
      weight_coef_ = 0.0;
    } else if (cfg.performance == Performance::msereg) {
      data_coef_ = cfg.gamma;
      weight_coef_ = (1.0 - cfg.gamma) * n_samples_ / static_cast<double>(kMlpWeights);
    } else {
      data_coef_ = 1.0;
      weight_coef_ = 0.0;
    }
    objective_ = objective(sse_, ssw_);
    result_.performance_trace.push_back(performance());
    result_.mse_trace.push_back(sse_ / n_samples_);
    if (!std::isfinite(objective_)) {
      stopped_ = true;
      result_.stop = StopReason::diverged;
    } else if (sse_ == 0.0) {
      stopped_ = true;
      result_.stop = StopReason::converged;
    }
  }

  // Returns false once training cannot continue; result().stop says why.
  bool step() {
    if (stopped_) return false;
    const Mat a = data_coef_ * jtj_ + weight_coef_ * Mat::Identity();
    Vec w_vec;
    for (Eigen::Index i = 0; i < kN; ++i) w_vec[i] = w_.w[static_cast<std::size_t>(i)];
    const Vec g = data_coef_ * jte_ + weight_coef_ * w_vec;

    while (true) {
      const Mat damped = a + mu_ * Mat::Identity();
      const Eigen::LDLT<Mat> ldlt(damped);
      if (ldlt.info() == Eigen::Success) {
        const Vec delta = ldlt.solve(g);
        MlpWeights trial;
        for (Eigen::Index i = 0; i < kN; ++i) {
          trial.w[static_cast<std::size_t>(i)] = w_vec[i] - delta[i];
        }
        if (all_finite(trial)) {
          const std::vector<double> e = errors(trial, data_, cfg_.activation);
          const double sse = sum_sq(e);
          const double ssw = sum_sq(trial);
          const double obj = objective(sse, ssw);
          if (std::isfinite(obj) && obj < objective_) {
            accept(trial);
            return !stopped_;
          }
        }
      }
      mu_ *= cfg_.mu_inc;
      if (mu_ > cfg_.mu_max) {
        stopped_ = true;
        result_.stop = StopReason::mu_max;
        return false;
      }
    }
  }

  const MlpWeights& weights() const { return w_; }
  double training_mse() const { return sse_ / n_samples_; }
  std::size_t epochs() const { return result_.epochs_run; }

  TrainResult finish() {
    result_.weights = w_;
    result_.final_mse = training_mse();
    return result_;
  }

 private:
  double objective(double sse, double ssw) const {
    return weight_coef_ == 0.0 ? data_coef_ * sse : data_coef_ * sse + weight_coef_ * ssw;
  }

  // Value reported in the performance trace: mse / msereg for LM, the raw
  // Bayesian objective otherwise.
  double performance() const { return bayes_ ? objective_ : objective_ / n_samples_; }

  void linearize() {
    const Jacobian jac = jacobian(w_, data_, cfg_.activation);
    const Eigen::Map<const RowMajorJ> j(jac.j.data(), static_cast<Eigen::Index>(jac.rows), kN);
    const Eigen::Map<const Eigen::VectorXd> e(jac.e.data(), static_cast<Eigen::Index>(jac.rows));
    jtj_.noalias() = j.transpose() * j;
    jte_.noalias() = j.transpose() * e;
    sse_ = sum_sq(jac.e);
    ssw_ = sum_sq(w_);
  }

  void accept(const MlpWeights& next) {
    w_ = next;
    mu_ *= cfg_.mu_dec;
    linearize();
    ++result_.epochs_run;
    if (bayes_ && !hyper_initialized_) {
      // After the unregularized first step the hyperparameters start from
      // gamma_eff = n, as if every weight were well determined.
      const double n = static_cast<double>(kMlpWeights);
      weight_coef_ = n / (2.0 * std::max(ssw_, kWeightEnergyFloor));
      if (sse_ > 0.0) data_coef_ = std::max(n_samples_ - n, 1.0) / (2.0 * sse_);
      hyper_initialized_ = true;
    } else if (bayes_) {
      update_hyperparameters();
    }
    objective_ = objective(sse_, ssw_);
    result_.performance_trace.push_back(performance());
    result_.mse_trace.push_back(training_mse());
    if (sse_ == 0.0) {
      stopped_ = true;
      result_.stop = StopReason::converged;
    }
  }

  // gamma_eff = n - 2 alpha tr(H^-1) with H = 2 beta J'J + 2 alpha I, written
  // through the eigenvalues l_i of J'J as sum(beta l_i / (beta l_i + alpha)).
  void update_hyperparameters() {
    const Eigen::SelfAdjointEigenSolver<Mat> eig(jtj_, Eigen::EigenvaluesOnly);
    const double alpha = weight_coef_;
    const double beta = data_coef_;
    double gamma_eff = 0.0;
    for (Eigen::Index i = 0; i < kN; ++i) {
      const double l = std::max(eig.eigenvalues()[i], 0.0);
      gamma_eff += beta * l / (beta * l + alpha);
    }
    const double ew = std::max(ssw_, kWeightEnergyFloor);
    weight_coef_ = gamma_eff / (2.0 * ew);
    if (sse_ > 0.0) data_coef_ = std::max(n_samples_ - gamma_eff, 1.0) / (2.0 * sse_);

    BayesStep s;
    s.alpha = weight_coef_;
    s.beta = data_coef_;
    s.gamma_eff = gamma_eff;
    s.data_error = sse_;
    s.weight_error = ssw_;
    const double fit = s.beta * sse_;
    const double penalty = s.alpha * ssw_;
    s.implied_ratio = fit + penalty > 0.0 ? fit / (fit + penalty) : 1.0;
    result_.bayes_trace.push_back(s);
  }

  std::span<const PredictionSample> data_;
  const TrainConfig& cfg_;
  MlpWeights w_;
  double mu_;
  double n_samples_ = 0.0;
  bool bayes_ = false;
  bool hyper_initialized_ = false;
  bool stopped_ = false;

  double data_coef_ = 1.0;
  double weight_coef_ = 0.0;
  double objective_ = 0.0;
  double sse_ = 0.0;
  double ssw_ = 0.0;
  Mat jtj_;
  Vec jte_;
  TrainResult result_;
};

TrainResult run_epochs(std::span<const PredictionSample> data, const MlpWeights& init,
                       const TrainConfig& cfg) {
  validate(cfg);
  LevenbergMarquardt lm(data, init, cfg);
  while (lm.epochs() < cfg.epochs && lm.step()) {
  }
  return lm.finish();
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("train: gamma must be in [0, 1]");
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (cfg.n_starts < 1) throw ConfigError("train: n_starts must be >= 1");
  if (cfg.patience < 1) throw ConfigError("train: patience must be >= 1");
  if (!(cfg.mu0 > 0.0 && cfg.mu_inc > 0.0 && cfg.mu_dec > 0.0 && cfg.mu_max > 0.0)) {
    throw ConfigError("train: damping constants must be > 0");
  }
}

std::vector<PredictionSample> make_dataset(std::span<const double> frame, std::size_t order) {
  if (order != kMlpInputs) {
    throw PreconditionError("make_dataset: the network takes exactly 10 inputs");
  }
  if (frame.size() <= order) {
    throw DegenerateFrameError("make_dataset: frame of " + std::to_string(frame.size()) +
                               " samples is too short for order " + std::to_string(order));
  }
  std::vector<PredictionSample> out(frame.size() - order);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::copy_n(frame.begin() + static_cast<std::ptrdiff_t>(i), order, out[i].input.begin());
    out[i].target = frame[i + order];
  }
  return out;
}

double mse(std::span<const double> e) {
  if (e.empty()) throw PreconditionError("mse: empty error vector");
  return sum_sq(e) / static_cast<double>(e.size());
}

double msereg(std::span<const double> e, const MlpWeights& w, double gamma) {
  return gamma * mse(e) + (1.0 - gamma) * (sum_sq(w) / static_cast<double>(kMlpWeights));
}

TrainResult train_lm(std::span<const PredictionSample> data, const MlpWeights& init,
                     const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.algorithm = TrainAlgorithm::lm;
  return run_epochs(data, init, c);
}

TrainResult train_bayes(std::span<const PredictionSample> data, const MlpWeights& init,
                        const TrainConfig& cfg) {
  TrainConfig c = cfg;
  c.algorithm = TrainAlgorithm::bayes;
  return run_epochs(data, init, c);
}

TrainResult train_with_validation(std::span<const PredictionSample> train_data,
                                  std::span<const PredictionSample> val_data,
                                  const MlpWeights& init, const TrainConfig& cfg) {
  validate(cfg);
  if (val_data.empty()) throw PreconditionError("train_with_validation: empty validation set");
  LevenbergMarquardt lm(train_data, init, cfg);

  std::vector<double> val_trace;
  MlpWeights best = init;
  double best_val = std::numeric_limits<double>::infinity();
  double best_train_mse = lm.training_mse();
  std::size_t best_epoch = 0;
  std::size_t since_best = 0;
  bool stopped_by_validation = false;

  while (lm.epochs() < cfg.epochs && lm.step()) {
    const double val = mse(errors(lm.weights(), val_data, cfg.activation));
    val_trace.push_back(val);
    if (val < best_val) {
      best_val = val;
      best = lm.weights();
      best_train_mse = lm.training_mse();
      best_epoch = lm.epochs();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      stopped_by_validation = true;
      break;
    }
  }
  // The last step() may have been accepted before it reported a stop.
  if (!stopped_by_validation && lm.epochs() > val_trace.size()) {
    const double val = mse(errors(lm.weights(), val_data, cfg.activation));
    val_trace.push_back(val);
    if (val < best_val) {
      best_val = val;
      best = lm.weights();
      best_train_mse = lm.training_mse();
      best_epoch = lm.epochs();
    }
  }

  TrainResult out = lm.finish();
  if (stopped_by_validation) out.stop = StopReason::validation;
  out.validation_trace = std::move(val_trace);
  out.best_epoch = best_epoch;
  out.weights = best;
  out.final_mse = best_train_mse;
  return out;
}

TrainResult train_one(std::span<const PredictionSample> data,
                      std::span<const PredictionSample> val_data, const MlpWeights& init,
                      const TrainConfig& cfg) {
  if (cfg.validation) return train_with_validation(data, val_data, init, cfg);
  return cfg.algorithm == TrainAlgorithm::bayes ? train_bayes(data, init, cfg)
                                                : train_lm(data, init, cfg);
}

double median_inplace(std::span<double> values) {
  if (values.empty()) throw PreconditionError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double committee_predict(std::span<const MlpWeights> members, Fusion fusion,
                         std::span<const double> input, Activation act) {
  if (members.empty()) throw PreconditionError("committee_predict: no members");
  constexpr std::size_t kInline = 16;
  std::array<double, kInline> inline_buf{};
  std::vector<double> heap_buf;
  std::span<double> outputs;
  if (members.size() <= kInline) {
    outputs = std::span<double>(inline_buf.data(), members.size());
  } else {
    heap_buf.resize(members.size());
    outputs = heap_buf;
  }
  for (std::size_t m = 0; m < members.size(); ++m) outputs[m] = forward(members[m], input, act);

  if (fusion == Fusion::median) return median_inplace(outputs);
  double sum = 0.0;
  for (double v : outputs) sum += v;
  return sum / static_cast<double>(outputs.size());
}

double TrainedPredictor::predict(std::span<const double> input) const {
  if (fallback_zero || members.empty()) return 0.0;
  if (kind == Kind::single) return forward(members.front(), input, activation);
  return committee_predict(members, fusion.value_or(Fusion::mean), input, activation);
}

std::size_t select_best_start(std::span<const double> errors) {
  std::size_t best = errors.size();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (std::isfinite(errors[i]) && (best == errors.size() || errors[i] < errors[best])) best = i;
  }
  return best;
}

TrainedPredictor multi_start(std::span<const PredictionSample> data,
                             std::span<const PredictionSample> val_data, const TrainConfig& cfg,
                             std::uint64_t rng_seed, std::uint64_t frame_index) {
  validate(cfg);
  TrainedPredictor out;
  out.activation = cfg.activation;

  std::vector<TrainResult> runs;
  runs.reserve(cfg.n_starts);
  for (std::size_t i = 0; i < cfg.n_starts; ++i) {
    const MlpWeights init = init_random(rng_seed, frame_index, static_cast<std::uint32_t>(i));
    runs.push_back(train_one(data, val_data, init, cfg));
  }

  std::vector<MlpWeights> usable;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const TrainResult& r = runs[i];
    const bool ok = r.stop != StopReason::diverged && std::isfinite(r.final_mse) &&
                    all_finite(r.weights);
    out.start_train_errors.push_back(ok ? r.final_mse : std::numeric_limits<double>::quiet_NaN());
    out.bayes_traces.push_back(r.bayes_trace);
    out.stop_epochs.push_back(r.validation_trace.empty() ? r.epochs_run : r.best_epoch);
    if (ok) usable.push_back(r.weights);
  }

  if (usable.empty()) {
    out.fallback_zero = true;
    out.final_train_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const std::size_t best = select_best_start(out.start_train_errors);
  out.selected_start = best;
  out.final_train_error = out.start_train_errors[best];
  if (cfg.selection == Selection::best_train) {
    out.kind = TrainedPredictor::Kind::single;
    out.members.push_back(runs[best].weights);
  } else {
    out.kind = TrainedPredictor::Kind::committee;
    out.fusion = cfg.selection == Selection::committee_median ? Fusion::median : Fusion::mean;
    out.members = std::move(usable);
  }
  return out;
}

}  // namespace nlad

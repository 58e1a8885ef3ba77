#include "dcws/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dcws {

namespace {

constexpr int kConvergenceWindow = 10;
constexpr int kStallPatience = 200;

void check_multipliers(const std::vector<double>& lambda, const std::vector<double>& xi) {
  for (double v : lambda)
    if (!(v >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  for (double v : xi)
    if (!(v >= 0.0)) throw std::invalid_argument("xi must be non-negative");
}

}  // namespace

void SolverConfig::validate() const {
  if (!(slack_penalty >= 0.0)) throw std::invalid_argument("SolverConfig: slack_penalty must be >= 0");
  if (max_epochs < 1) throw std::invalid_argument("SolverConfig: max_epochs must be positive");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("SolverConfig: convergence_tol must be positive");
  if (!(lr_theta > 0.0 && lr_lambda > 0.0 && lr_xi > 0.0))
    throw std::invalid_argument("SolverConfig: learning rates must be positive");
}

double lagrangian_value(const SoftLabelMatrix& f, const SoftLabelMatrix& prior,
                        const ConstraintSystem& system, const std::vector<double>& lambda,
                        const std::vector<double>& xi, double slack_penalty) {
  if (lambda.size() != system.n_signals() || xi.size() != system.n_signals())
    throw std::invalid_argument("lagrangian_value: multiplier length mismatch");
  check_multipliers(lambda, xi);

  double value = 0.0;
  if (!prior.probs.empty()) {
    if (!prior.probs.same_shape(f.probs))
      throw std::invalid_argument("lagrangian_value: prior shape mismatch");
    value += squared_frobenius_distance(f.probs, prior.probs);
  }
  for (double x : xi) value += slack_penalty * x;
  const auto raw = raw_violations(system, f);
  for (std::size_t s = 0; s < raw.size(); ++s) value += lambda[s] * (raw[s] - xi[s]);
  return value;
}

Matrix output_gradient(const SoftLabelMatrix& f, const SoftLabelMatrix& prior,
                       const ConstraintSystem& system, const std::vector<double>& lambda) {
  if (lambda.size() != system.n_signals())
    throw std::invalid_argument("output_gradient: lambda length mismatch");
  for (double v : lambda)
    if (!(v >= 0.0)) throw std::invalid_argument("output_gradient: lambda must be non-negative");

  Matrix grad(f.probs.rows(), f.probs.cols());
  if (!prior.probs.empty()) {
    if (!prior.probs.same_shape(f.probs))
      throw std::invalid_argument("output_gradient: prior shape mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad.data()[i] = 2.0 * (f.probs.data()[i] - prior.probs.data()[i]);
  }
  for (std::size_t s = 0; s < system.n_signals(); ++s) {
    if (lambda[s] == 0.0) continue;
    const std::size_t col = static_cast<std::size_t>(system.signal_class[s]);
    if (col >= grad.cols())
      throw std::invalid_argument("output_gradient: signal class incompatible with label columns");
    const double* arow = system.rows.row(s);
    for (std::size_t j = 0; j < grad.rows(); ++j) grad(j, col) += lambda[s] * arow[j];
  }
  return grad;
}

namespace {

// Shared lambda/xi ascent-descent step, convergence bookkeeping and logging.
struct SaddleLoop {
  const ConstraintSystem& system;
  const SolverConfig& config;
  std::ostream* log;
  std::vector<double> lambda;
  std::vector<double> xi;
  std::vector<EpochStats> history;
  bool converged = false;
  bool stalled = false;
  double best_max_violation = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int epochs_run = 0;

  SaddleLoop(const ConstraintSystem& sys, const SolverConfig& cfg, std::ostream* out)
      : system(sys), config(cfg), log(out),
        lambda(sys.n_signals(), 0.0), xi(sys.n_signals(), 0.0) {}

  // Updates multipliers against the current labels, records stats, and
  // returns true when the convergence test fires. `improved` is set when this
  // epoch reached a new best max violation.
  bool step(const SoftLabelMatrix& labels, const SoftLabelMatrix& prior, int epoch, bool* improved) {
    const auto raw = raw_violations(system, labels);
    if (config.use_constraints) {
      for (std::size_t s = 0; s < lambda.size(); ++s)
        lambda[s] = std::max(0.0, lambda[s] + config.lr_lambda * (raw[s] - xi[s]));
    }
    if (config.use_slack) {
      for (std::size_t s = 0; s < xi.size(); ++s)
        xi[s] = std::max(0.0, xi[s] - config.lr_xi * (config.slack_penalty - lambda[s]));
    }

    EpochStats stats;
    stats.lagrangian = lagrangian_value(labels, prior, system, lambda, xi, config.slack_penalty);
    double max_violation = -std::numeric_limits<double>::infinity();
    double slack_sum = 0.0;
    for (std::size_t s = 0; s < raw.size(); ++s) {
      max_violation = std::max(max_violation, raw[s] - xi[s]);
      slack_sum += xi[s];
    }
    stats.max_violation = max_violation;
    stats.mean_slack = slack_sum / static_cast<double>(xi.size());
    stats.min_lambda = *std::min_element(lambda.begin(), lambda.end());
    stats.min_xi = *std::min_element(xi.begin(), xi.end());
    history.push_back(stats);
    epochs_run = epoch + 1;

    if (log)
      (*log) << epoch << '\t' << stats.lagrangian << '\t' << stats.max_violation << '\t'
             << stats.mean_slack << '\n';

    *improved = max_violation < best_max_violation;
    if (*improved) {
      best_max_violation = max_violation;
      best_epoch = epoch;
    }
    if (!stalled && epoch - best_epoch >= kStallPatience &&
        best_max_violation > config.convergence_tol) {
      stalled = true;
    }

    if (max_violation <= config.convergence_tol &&
        static_cast<int>(history.size()) > kConvergenceWindow) {
      const double now = stats.lagrangian;
      const double before = history[history.size() - 1 - kConvergenceWindow].lagrangian;
      const double rel = std::abs(now - before) / std::max(1.0, std::abs(now));
      if (rel <= config.convergence_tol) {
        converged = true;
        return true;
      }
    }
    return false;
  }
};

void clamp_and_renormalize(Matrix& y) {
  for (double& v : y.data()) v = std::clamp(v, 0.0, 1.0);
  if (y.cols() <= 1) return;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double* row = y.row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < y.cols(); ++j) sum += row[j];
    if (sum <= 0.0) {
      for (std::size_t j = 0; j < y.cols(); ++j) row[j] = 1.0 / static_cast<double>(y.cols());
    } else {
      for (std::size_t j = 0; j < y.cols(); ++j) row[j] /= sum;
    }
  }
}

}  // namespace

SoftLabelMatrix make_prior(PriorMode mode, const WeakSignalSet& signals) {
  switch (mode) {
    case PriorMode::majority:
      return majority_vote_prior(signals);
    case PriorMode::uniform:
      return uniform_prior(signals.n_examples(), signals.label_columns());
    case PriorMode::none:
      return {};
  }
  throw std::logic_error("make_prior: unknown mode");
}

FitResult fit_dcws(const FeatureMatrix& features, const WeakSignalSet& signals,
                   const BoundVector& bounds, const LabelModelSpec& spec,
                   const SolverConfig& config, std::ostream* log) {
  features.validate();
  signals.validate();
  config.validate();
  spec.validate();
  if (features.n_examples() != signals.n_examples())
    throw std::invalid_argument("fit_dcws: feature/signal row mismatch");
  if (static_cast<std::size_t>(spec.n_outputs) != signals.label_columns())
    throw std::invalid_argument("fit_dcws: spec outputs must match label columns");

  const ConstraintSystem system = build_constraint_system(signals, bounds);
  const SoftLabelMatrix prior = make_prior(config.prior_mode, signals);

  LabelModelParams params = init_params(spec, features.n_features(), config.seed);
  AdamState adam = make_adam_state(params, AdamConfig{config.lr_theta, 0.9, 0.999, 1e-8});
  Rng dropout_rng(derive_seed(config.seed, 1));

  SaddleLoop loop(system, config, log);
  LabelModelParams best_params = params;
  std::vector<double> best_lambda = loop.lambda, best_xi = loop.xi;

  ForwardCache cache;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    SoftLabelMatrix f_train =
        forward(params, spec, features.values, RunMode::train, &dropout_rng, &cache);
    const Matrix grad_out = output_gradient(f_train, prior, system, loop.lambda);
    const auto grads = backward(params, spec, cache, grad_out);
    adam_step(adam, params, grads);

    const SoftLabelMatrix f_cur = forward(params, spec, features.values, RunMode::eval, nullptr);
    bool improved = false;
    const bool done = loop.step(f_cur, prior, epoch, &improved);
    if (improved) {
      best_params = params;
      best_lambda = loop.lambda;
      best_xi = loop.xi;
    }
    if (done) break;
  }

  FitResult result;
  result.state.converged = loop.converged;
  result.state.stalled = loop.stalled;
  result.state.best_max_violation = loop.best_max_violation;
  result.state.epoch = loop.epochs_run;
  result.state.history = std::move(loop.history);
  if (loop.stalled && !loop.converged) {
    // Infeasible stall: hand back the best-violation state seen.
    result.state.params = std::move(best_params);
    result.state.lambda = std::move(best_lambda);
    result.state.xi = std::move(best_xi);
  } else {
    result.state.params = std::move(params);
    result.state.lambda = std::move(loop.lambda);
    result.state.xi = std::move(loop.xi);
  }
  result.labels = predict(result.state.params, spec, features.values);
  return result;
}

SoftLabelMatrix fit_direct(const WeakSignalSet& signals, const BoundVector& bounds,
                           const SoftLabelMatrix& prior, const SolverConfig& config,
                           std::ostream* log) {
  signals.validate();
  config.validate();
  const std::size_t n = signals.n_examples();
  const std::size_t cols = signals.label_columns();
  if (!prior.probs.empty() &&
      (prior.probs.rows() != n || prior.probs.cols() != cols))
    throw std::invalid_argument("fit_direct: prior shape mismatch");

  const ConstraintSystem system = build_constraint_system(signals, bounds);

  SoftLabelMatrix labels;
  labels.probs = prior.probs.empty() ? uniform_prior(n, cols).probs : prior.probs;

  // Adam over the label matrix itself, reusing the single-layer machinery.
  LabelModelParams flat;
  flat.layers.push_back(Layer{labels.probs, {}});
  AdamState adam = make_adam_state(flat, AdamConfig{config.lr_theta, 0.9, 0.999, 1e-8});

  SaddleLoop loop(system, config, log);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const Matrix grad = output_gradient(labels, prior, system, loop.lambda);
    std::vector<Layer> grads;
    grads.push_back(Layer{grad, {}});
    adam_step(adam, flat, grads);
    clamp_and_renormalize(flat.layers[0].weights);
    labels.probs = flat.layers[0].weights;

    bool improved = false;
    if (loop.step(labels, prior, epoch, &improved)) break;
  }
  return labels;
}

SoftLabelMatrix predict(const LabelModelParams& params, const LabelModelSpec& spec, const Matrix& x) {
  return forward(params, spec, x, RunMode::eval, nullptr);
}

}  // namespace dcws

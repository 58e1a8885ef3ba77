#include "dcws/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "dcws/io.hpp"

namespace dcws {

using json = nlohmann::json;

namespace {

constexpr int kEndHiddenUnits = 512;
constexpr int kEndHiddenLayers = 2;

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double x : v) sum += (x - mean) * (x - mean);
  return std::sqrt(sum / static_cast<double>(v.size()));
}

Matrix subset_matrix_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = m.row(rows[i]);
    std::copy(src, src + m.cols(), out.row(i));
  }
  return out;
}

Matrix end_loss_gradient(const SoftLabelMatrix& f, const SoftLabelMatrix& target, EndLoss loss) {
  Matrix grad(f.probs.rows(), f.probs.cols());
  if (loss == EndLoss::squared) {
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad.data()[i] = 2.0 * (f.probs.data()[i] - target.probs.data()[i]);
    return grad;
  }
  const bool binary = f.probs.cols() == 1;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double p = std::clamp(f.probs.data()[i], 1e-12, 1.0 - 1e-12);
    const double t = target.probs.data()[i];
    grad.data()[i] = binary ? (p - t) / (p * (1.0 - p)) : -t / p;
  }
  return grad;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction <= 1.0))
    throw std::invalid_argument("ExperimentConfig: validation_fraction must lie in (0, 1]");
  if (end_epochs < 1) throw std::invalid_argument("ExperimentConfig: end_epochs must be positive");
  if (benchmark != "dependent" && benchmark != "independent")
    throw std::invalid_argument("ExperimentConfig: benchmark must be dependent or independent");
  solver.validate();
  label_model.validate();
}

SoftLabelMatrix train_end_model(const Matrix& train_x, const SoftLabelMatrix& soft_labels,
                                const Matrix& test_x, std::uint64_t seed, int epochs, EndLoss loss,
                                double lr) {
  if (train_x.rows() != soft_labels.n_examples())
    throw std::invalid_argument("train_end_model: feature/label row mismatch");
  if (test_x.cols() != train_x.cols())
    throw std::invalid_argument("train_end_model: train/test feature mismatch");

  const std::size_t n_outputs = soft_labels.n_columns();
  const OutputHead head = n_outputs == 1 ? OutputHead::sigmoid : OutputHead::softmax;
  std::vector<std::size_t> widths{train_x.cols()};
  for (int l = 0; l < kEndHiddenLayers; ++l) widths.push_back(kEndHiddenUnits);
  widths.push_back(n_outputs);

  LabelModelParams params = init_stack(widths, seed);
  AdamState adam = make_adam_state(params, AdamConfig{lr, 0.9, 0.999, 1e-8});

  ForwardCache cache;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    SoftLabelMatrix f = stack_forward(params, head, 0.0, train_x, RunMode::train, nullptr, &cache);
    const Matrix grad_out = end_loss_gradient(f, soft_labels, loss);
    const auto grads = stack_backward(params, head, cache, grad_out);
    adam_step(adam, params, grads);
  }
  return stack_forward(params, head, 0.0, test_x, RunMode::eval, nullptr, nullptr);
}

namespace {

struct TrialData {
  FeatureMatrix features;  // fit rows only
  WeakSignalSet signals;   // fit rows only
  LabeledEval truth;       // fit rows only
  std::vector<std::size_t> covered_in_fit;  // indices into fit rows
  FeatureMatrix test_features;
  LabeledEval test_truth;
  bool has_test = false;
  std::string hash;
};

TrialData prepare_trial_data(const ExperimentConfig& config, int trial) {
  TrialData data;
  FeatureMatrix all_features;
  WeakSignalSet all_signals;
  LabeledEval all_truth;

  if (config.synthetic) {
    SyntheticSpec spec = config.synth;
    spec.seed = derive_seed(config.synth.seed, static_cast<std::uint64_t>(trial));
    SyntheticBundle bundle = config.benchmark == "independent" ? generate_independent(spec)
                                                               : generate_dependent(spec);
    data.hash = bundle_hash_hex(bundle);
    all_features = std::move(bundle.train_features);
    all_signals = std::move(bundle.signals);
    all_truth = std::move(bundle.train_truth);
    data.test_features = std::move(bundle.test_features);
    data.test_truth = std::move(bundle.test_truth);
    data.has_test = true;
  } else {
    all_features.values = read_csv_matrix(config.features_path);
    all_signals = read_signals(config.signals_path, config.meta_path);
    if (!config.labels_path.empty()) all_truth.true_labels = read_label_file(config.labels_path);
    if (!config.test_features_path.empty()) {
      data.test_features.values = read_csv_matrix(config.test_features_path);
      data.test_truth.true_labels = read_label_file(config.test_labels_path);
      data.has_test = true;
    }
  }
  all_features.validate();
  all_signals.validate();
  if (all_features.n_examples() != all_signals.n_examples())
    throw std::runtime_error("experiment: feature/signal row mismatch");

  const bool fit_all = config.dcws_plus;
  std::vector<std::size_t> fit_rows;
  if (fit_all) {
    fit_rows.resize(all_features.n_examples());
    for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_rows[i] = i;
  } else {
    fit_rows = covered_rows(all_signals);
    if (fit_rows.empty()) throw std::runtime_error("experiment: no covered examples");
  }

  data.features.values = subset_matrix_rows(all_features.values, fit_rows);
  data.signals = all_signals.subset_rows(fit_rows);
  if (!all_truth.true_labels.empty()) data.truth = all_truth.subset(fit_rows);

  const auto covered_mask = coverage(data.signals);
  for (std::size_t i = 0; i < covered_mask.size(); ++i)
    if (covered_mask[i]) data.covered_in_fit.push_back(i);
  return data;
}

BoundVector resolve_bounds(const ExperimentConfig& config, const TrialData& data) {
  switch (config.bounds_source) {
    case BoundsSource::zero:
      return BoundVector::zeros(data.signals.n_signals());
    case BoundsSource::file:
      return read_bounds(config.bounds_path, data.signals.n_signals());
    case BoundsSource::validation: {
      if (data.truth.true_labels.empty())
        throw std::runtime_error("experiment: validation bounds need labels");
      const std::size_t n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(config.validation_fraction * data.signals.n_examples())));
      std::vector<std::size_t> val_rows(n_val);
      for (std::size_t i = 0; i < n_val; ++i) val_rows[i] = i;
      const auto est = estimate_bounds(data.signals.subset_rows(val_rows), data.truth.subset(val_rows));
      return est.bounds;
    }
  }
  throw std::logic_error("resolve_bounds: unknown source");
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  MetricsReport report;

  for (int trial = 0; trial < config.trials; ++trial) {
    const auto t0 = std::chrono::steady_clock::now();
    TrialData data = prepare_trial_data(config, trial);
    if (trial == 0) report.data_hash = data.hash;

    const BoundVector bounds = resolve_bounds(config, data);
    const std::uint64_t model_seed = derive_seed(config.solver.seed, 1000 + trial);

    FeatureMatrix representation = data.features;
    if (config.cluster_features_k > 0)
      representation.values = kmeans_features(data.features.values, config.cluster_features_k,
                                              derive_seed(config.synth.seed, 500 + trial));

    TrialMetrics metrics;
    SoftLabelMatrix labels;
    if (config.method == Method::majority) {
      labels = majority_vote_prior(data.signals);
      metrics.max_violation_at_stop = std::numeric_limits<double>::quiet_NaN();
      metrics.converged = true;
    } else if (config.method == Method::direct) {
      SolverConfig solver = config.solver;
      solver.seed = model_seed;
      const SoftLabelMatrix prior = make_prior(solver.prior_mode, data.signals);
      labels = fit_direct(data.signals, bounds, prior, solver);
      metrics.epochs = config.solver.max_epochs;
      metrics.max_violation_at_stop = std::numeric_limits<double>::quiet_NaN();
    } else {
      SolverConfig solver = config.solver;
      solver.seed = model_seed;
      LabelModelSpec spec = config.label_model;
      spec.n_outputs = static_cast<int>(data.signals.label_columns());
      spec.output_head = spec.n_outputs == 1 ? OutputHead::sigmoid : OutputHead::softmax;
      FitResult fit = fit_dcws(representation, data.signals, bounds, spec, solver);
      labels = std::move(fit.labels);
      metrics.epochs = fit.state.epoch;
      metrics.converged = fit.state.converged;
      metrics.stalled = fit.state.stalled;
      metrics.max_violation_at_stop =
          fit.state.history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : fit.state.history.back().max_violation;
    }

    if (!data.truth.true_labels.empty()) {
      metrics.label_accuracy = accuracy(labels, data.truth);
      metrics.label_f1 = f1_score(labels, data.truth);
    } else {
      metrics.label_accuracy = std::numeric_limits<double>::quiet_NaN();
      metrics.label_f1 = std::numeric_limits<double>::quiet_NaN();
    }

    if (config.end_model && data.has_test) {
      Matrix end_x = data.features.values;
      SoftLabelMatrix end_targets = labels;
      if (config.dcws_plus && !config.plus_end_on_all) {
        end_x = subset_matrix_rows(data.features.values, data.covered_in_fit);
        end_targets.probs = subset_matrix_rows(labels.probs, data.covered_in_fit);
      }
      const SoftLabelMatrix test_preds =
          train_end_model(end_x, end_targets, data.test_features.values,
                          derive_seed(config.solver.seed, 2000 + trial), config.end_epochs,
                          config.end_loss, config.end_lr);
      metrics.test_accuracy = accuracy(test_preds, data.test_truth);
      metrics.test_f1 = f1_score(test_preds, data.test_truth);
    } else {
      metrics.test_accuracy = std::numeric_limits<double>::quiet_NaN();
      metrics.test_f1 = std::numeric_limits<double>::quiet_NaN();
    }

    const auto t1 = std::chrono::steady_clock::now();
    metrics.seconds = std::chrono::duration<double>(t1 - t0).count();
    report.wall_seconds += metrics.seconds;
    report.per_trial.push_back(metrics);
  }

  std::vector<double> label_acc, test_acc, f1s, epochs;
  for (const auto& t : report.per_trial) {
    label_acc.push_back(t.label_accuracy);
    epochs.push_back(t.epochs);
    if (!std::isnan(t.test_accuracy)) test_acc.push_back(t.test_accuracy);
    f1s.push_back(std::isnan(t.test_f1) ? t.label_f1 : t.test_f1);
  }
  report.label_accuracy_mean = mean_of(label_acc);
  report.label_accuracy_std = std_of(label_acc, report.label_accuracy_mean);
  report.test_accuracy_mean = mean_of(test_acc);
  report.test_accuracy_std = std_of(test_acc, report.test_accuracy_mean);
  report.f1_mean = mean_of(f1s);
  report.f1_std = std_of(f1s, report.f1_mean);
  report.epochs_mean = mean_of(epochs);
  return report;
}

std::vector<std::string> ablation_arm_names() {
  return {"dcws",
          "without_slack",
          "uniform_regularization",
          "without_regularization",
          "without_constraints",
          "without_data_consistency",
          "without_dropout",
          "slack_c_0.1",
          "slack_c_1",
          "slack_c_100",
          "clusters_10",
          "clusters_100",
          "clusters_200"};
}

ExperimentConfig ablation_arm_config(const ExperimentConfig& base, const std::string& arm) {
  ExperimentConfig config = base;
  config.method = Method::dcws;
  if (arm == "dcws") {
    config.solver.slack_penalty = 10.0;
  } else if (arm == "without_slack") {
    config.solver.use_slack = false;
  } else if (arm == "uniform_regularization") {
    config.solver.prior_mode = PriorMode::uniform;
  } else if (arm == "without_regularization") {
    config.solver.prior_mode = PriorMode::none;
  } else if (arm == "without_constraints") {
    config.solver.use_constraints = false;
  } else if (arm == "without_data_consistency") {
    config.method = Method::direct;
  } else if (arm == "without_dropout") {
    config.label_model.dropout_rate = 0.0;
  } else if (arm == "slack_c_0.1") {
    config.solver.slack_penalty = 0.1;
  } else if (arm == "slack_c_1") {
    config.solver.slack_penalty = 1.0;
  } else if (arm == "slack_c_100") {
    config.solver.slack_penalty = 100.0;
  } else if (arm == "clusters_10") {
    config.cluster_features_k = 10;
  } else if (arm == "clusters_100") {
    config.cluster_features_k = 100;
  } else if (arm == "clusters_200") {
    config.cluster_features_k = 200;
  } else {
    throw std::invalid_argument("unknown ablation arm: " + arm);
  }
  return config;
}

std::vector<std::pair<std::string, MetricsReport>> run_ablation(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, MetricsReport>> results;
  for (const std::string& arm : ablation_arm_names())
    results.emplace_back(arm, run_experiment(ablation_arm_config(config, arm)));
  return results;
}

namespace {

json value_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

json config_echo(const ExperimentConfig& c) {
  json doc;
  doc["synthetic"] = c.synthetic;
  doc["benchmark"] = c.benchmark;
  doc["n_train"] = c.synth.n_train;
  doc["n_test"] = c.synth.n_test;
  doc["n_features"] = c.synth.n_features;
  doc["feature_agreement_lo"] = c.synth.feature_agreement_lo;
  doc["feature_agreement_hi"] = c.synth.feature_agreement_hi;
  doc["n_signals"] = c.synth.n_signals;
  doc["n_copies"] = c.synth.n_copies;
  doc["copy_flip_rate"] = c.synth.copy_flip_rate;
  doc["coverage"] = c.synth.coverage;
  doc["error_lo"] = c.synth.error_lo;
  doc["error_hi"] = c.synth.error_hi;
  doc["data_seed"] = c.synth.seed;
  doc["features_path"] = c.features_path;
  doc["signals_path"] = c.signals_path;
  doc["method"] = c.method == Method::dcws ? "dcws" : c.method == Method::direct ? "direct" : "majority";
  doc["dcws_plus"] = c.dcws_plus;
  doc["cluster_features_k"] = c.cluster_features_k;
  doc["bounds_source"] = c.bounds_source == BoundsSource::zero ? "zero"
                         : c.bounds_source == BoundsSource::file ? "file" : "validation";
  doc["validation_fraction"] = c.validation_fraction;
  doc["slack_penalty"] = c.solver.slack_penalty;
  doc["prior_mode"] = c.solver.prior_mode == PriorMode::majority ? "majority"
                      : c.solver.prior_mode == PriorMode::uniform ? "uniform" : "none";
  doc["use_slack"] = c.solver.use_slack;
  doc["use_constraints"] = c.solver.use_constraints;
  doc["max_epochs"] = c.solver.max_epochs;
  doc["convergence_tol"] = c.solver.convergence_tol;
  doc["lr_theta"] = c.solver.lr_theta;
  doc["lr_lambda"] = c.solver.lr_lambda;
  doc["lr_xi"] = c.solver.lr_xi;
  doc["seed"] = c.solver.seed;
  doc["architecture"] = c.label_model.architecture == Architecture::linear ? "linear" : "two_layer";
  doc["hidden_units"] = c.label_model.hidden_units;
  doc["dropout_rate"] = c.label_model.dropout_rate;
  doc["end_model"] = c.end_model;
  doc["end_epochs"] = c.end_epochs;
  doc["end_lr"] = c.end_lr;
  doc["end_loss"] = c.end_loss == EndLoss::squared ? "squared" : "cross_entropy";
  doc["plus_end_on_all"] = c.plus_end_on_all;
  doc["trials"] = c.trials;
  return doc;
}

}  // namespace

void emit_metrics(const MetricsReport& report, const ExperimentConfig& config,
                  const std::string& path) {
  json doc;
  doc["label_accuracy_mean"] = value_or_null(report.label_accuracy_mean);
  doc["label_accuracy_std"] = value_or_null(report.label_accuracy_std);
  doc["test_accuracy_mean"] = value_or_null(report.test_accuracy_mean);
  doc["test_accuracy_std"] = value_or_null(report.test_accuracy_std);
  doc["f1_mean"] = value_or_null(report.f1_mean);
  doc["f1_std"] = value_or_null(report.f1_std);
  doc["epochs_mean"] = value_or_null(report.epochs_mean);

  json per_trial;
  per_trial["label_accuracy"] = json::array();
  per_trial["label_f1"] = json::array();
  per_trial["test_accuracy"] = json::array();
  per_trial["test_f1"] = json::array();
  per_trial["epochs"] = json::array();
  per_trial["max_violation_at_stop"] = json::array();
  per_trial["converged"] = json::array();
  per_trial["stalled"] = json::array();
  for (const auto& t : report.per_trial) {
    per_trial["label_accuracy"].push_back(value_or_null(t.label_accuracy));
    per_trial["label_f1"].push_back(value_or_null(t.label_f1));
    per_trial["test_accuracy"].push_back(value_or_null(t.test_accuracy));
    per_trial["test_f1"].push_back(value_or_null(t.test_f1));
    per_trial["epochs"].push_back(t.epochs);
    per_trial["max_violation_at_stop"].push_back(value_or_null(t.max_violation_at_stop));
    per_trial["converged"].push_back(t.converged);
    per_trial["stalled"].push_back(t.stalled);
  }
  doc["per_trial"] = per_trial;
  doc["data_hash"] = report.data_hash;
  doc["config"] = config_echo(config);
  doc["version"] = version_string();

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

void apply_solver_config(SolverConfig& config, const std::map<std::string, std::string>& keys) {
  for (const auto& [key, value] : keys) {
    if (key == "slack_penalty") config.slack_penalty = std::stod(value);
    else if (key == "prior_mode") {
      if (value == "majority") config.prior_mode = PriorMode::majority;
      else if (value == "uniform") config.prior_mode = PriorMode::uniform;
      else if (value == "none") config.prior_mode = PriorMode::none;
      else throw std::invalid_argument("bad prior_mode: " + value);
    } else if (key == "use_slack") config.use_slack = value == "true" || value == "1";
    else if (key == "use_constraints") config.use_constraints = value == "true" || value == "1";
    else if (key == "max_epochs") config.max_epochs = std::stoi(value);
    else if (key == "convergence_tol") config.convergence_tol = std::stod(value);
    else if (key == "lr_theta") config.lr_theta = std::stod(value);
    else if (key == "lr_lambda") config.lr_lambda = std::stod(value);
    else if (key == "lr_xi") config.lr_xi = std::stod(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else throw std::invalid_argument("unknown solver config key: " + key);
  }
}

void apply_config(ExperimentConfig& config, const std::map<std::string, std::string>& keys) {
  for (const auto& [key, value] : keys) {
    if (key == "synthetic") config.synthetic = value == "true" || value == "1";
    else if (key == "benchmark") config.benchmark = value;
    else if (key == "n_train") config.synth.n_train = std::stoull(value);
    else if (key == "n_test") config.synth.n_test = std::stoull(value);
    else if (key == "n_features") config.synth.n_features = std::stoull(value);
    else if (key == "feature_agreement_lo") config.synth.feature_agreement_lo = std::stod(value);
    else if (key == "feature_agreement_hi") config.synth.feature_agreement_hi = std::stod(value);
    else if (key == "n_signals") config.synth.n_signals = std::stoull(value);
    else if (key == "n_copies") config.synth.n_copies = std::stoull(value);
    else if (key == "copy_flip_rate") config.synth.copy_flip_rate = std::stod(value);
    else if (key == "coverage") config.synth.coverage = std::stod(value);
    else if (key == "error_lo") config.synth.error_lo = std::stod(value);
    else if (key == "error_hi") config.synth.error_hi = std::stod(value);
    else if (key == "data_seed") config.synth.seed = std::stoull(value);
    else if (key == "features_path") config.features_path = value;
    else if (key == "signals_path") config.signals_path = value;
    else if (key == "meta_path") config.meta_path = value;
    else if (key == "labels_path") config.labels_path = value;
    else if (key == "test_features_path") config.test_features_path = value;
    else if (key == "test_labels_path") config.test_labels_path = value;
    else if (key == "bounds_path") config.bounds_path = value;
    else if (key == "method") {
      if (value == "dcws") config.method = Method::dcws;
      else if (value == "direct") config.method = Method::direct;
      else if (value == "majority") config.method = Method::majority;
      else throw std::invalid_argument("bad method: " + value);
    } else if (key == "dcws_plus") config.dcws_plus = value == "true" || value == "1";
    else if (key == "cluster_features_k") config.cluster_features_k = std::stoull(value);
    else if (key == "bounds_source") {
      if (value == "zero") config.bounds_source = BoundsSource::zero;
      else if (value == "file") config.bounds_source = BoundsSource::file;
      else if (value == "validation") config.bounds_source = BoundsSource::validation;
      else throw std::invalid_argument("bad bounds_source: " + value);
    } else if (key == "validation_fraction") config.validation_fraction = std::stod(value);
    else if (key == "end_model") config.end_model = value == "true" || value == "1";
    else if (key == "end_epochs") config.end_epochs = std::stoi(value);
    else if (key == "end_lr") config.end_lr = std::stod(value);
    else if (key == "end_loss") {
      if (value == "squared") config.end_loss = EndLoss::squared;
      else if (value == "cross_entropy") config.end_loss = EndLoss::cross_entropy;
      else throw std::invalid_argument("bad end_loss: " + value);
    } else if (key == "plus_end_on_all") config.plus_end_on_all = value == "true" || value == "1";
    else if (key == "trials") config.trials = std::stoi(value);
    else if (key == "output") config.output_path = value;
    else if (key == "architecture") {
      if (value == "linear") config.label_model.architecture = Architecture::linear;
      else if (value == "two_layer") config.label_model.architecture = Architecture::two_layer;
      else throw std::invalid_argument("bad architecture: " + value);
    } else if (key == "hidden_units") config.label_model.hidden_units = std::stoi(value);
    else if (key == "dropout_rate") config.label_model.dropout_rate = std::stod(value);
    else {
      apply_solver_config(config.solver, {{key, value}});
    }
  }
}

}  // namespace dcws

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "CLI11.hpp"

#include "dcws/io.hpp"
#include "dcws/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

dcws::ExperimentConfig load_experiment_config(const std::string& path) {
  dcws::ExperimentConfig config;
  if (!path.empty()) dcws::apply_config(config, dcws::read_config_file(path));
  return config;
}

void write_dataset(const dcws::SyntheticSpec& spec, const dcws::SyntheticBundle& bundle,
                   const fs::path& dir) {
  fs::create_directories(dir);
  dcws::write_csv_matrix((dir / "train_features.csv").string(), bundle.train_features.values);
  dcws::write_label_file((dir / "train_labels.csv").string(), bundle.train_truth.true_labels);
  dcws::write_csv_matrix((dir / "test_features.csv").string(), bundle.test_features.values);
  dcws::write_label_file((dir / "test_labels.csv").string(), bundle.test_truth.true_labels);
  dcws::write_signals((dir / "signals.csv").string(), (dir / "signal_meta.json").string(),
                      bundle.signals);
  dcws::write_manifest((dir / "manifest.json").string(), spec, bundle);
}

int cmd_generate(const std::string& spec_path, const std::string& out_dir) {
  dcws::ExperimentConfig config = load_experiment_config(spec_path);
  dcws::SyntheticBundle bundle = config.benchmark == "independent"
                                     ? dcws::generate_independent(config.synth)
                                     : dcws::generate_dependent(config.synth);
  write_dataset(config.synth, bundle, out_dir);
  std::cout << "wrote " << config.benchmark << " benchmark to " << out_dir << "\n";
  return 0;
}

int cmd_fit(const std::string& features_path, const std::string& signals_path,
            const std::string& meta_path, const std::string& bounds_path, bool bounds_zero,
            bool plus, const std::string& prior, const std::string& config_path,
            const std::string& log_path, const std::string& out_dir) {
  dcws::SolverConfig solver;
  dcws::LabelModelSpec spec;
  if (!config_path.empty()) {
    dcws::ExperimentConfig experiment;
    dcws::apply_config(experiment, dcws::read_config_file(config_path));
    solver = experiment.solver;
    spec = experiment.label_model;
  }
  if (!prior.empty()) {
    if (prior == "majority") solver.prior_mode = dcws::PriorMode::majority;
    else if (prior == "uniform") solver.prior_mode = dcws::PriorMode::uniform;
    else if (prior == "none") solver.prior_mode = dcws::PriorMode::none;
    else throw std::runtime_error("bad --prior value: " + prior);
  }

  dcws::FeatureMatrix features;
  features.values = dcws::read_csv_matrix(features_path);
  dcws::WeakSignalSet signals = dcws::read_signals(signals_path, meta_path);
  if (features.n_examples() != signals.n_examples())
    throw std::runtime_error("feature and signal row counts differ");

  dcws::BoundVector bounds = dcws::BoundVector::zeros(signals.n_signals());
  if (!bounds_path.empty() && !bounds_zero)
    bounds = dcws::read_bounds(bounds_path, signals.n_signals());

  std::vector<std::size_t> fit_rows;
  if (plus) {
    fit_rows.resize(features.n_examples());
    for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_rows[i] = i;
  } else {
    fit_rows = dcws::covered_rows(signals);
    if (fit_rows.empty()) throw std::runtime_error("no covered examples to fit");
  }

  dcws::FeatureMatrix fit_features;
  fit_features.values = dcws::Matrix(fit_rows.size(), features.values.cols());
  for (std::size_t i = 0; i < fit_rows.size(); ++i) {
    const double* src = features.values.row(fit_rows[i]);
    std::copy(src, src + features.values.cols(), fit_features.values.row(i));
  }
  dcws::WeakSignalSet fit_signals = signals.subset_rows(fit_rows);

  spec.n_outputs = static_cast<int>(fit_signals.label_columns());
  spec.output_head = spec.n_outputs == 1 ? dcws::OutputHead::sigmoid : dcws::OutputHead::softmax;

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (log_path == "-") {
    log = &std::cout;
  } else if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw std::runtime_error("cannot write " + log_path);
    log = &log_file;
  }

  dcws::FitResult fit = dcws::fit_dcws(fit_features, fit_signals, bounds, spec, solver, log);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  // Labels for every input row; the model is defined on covered and
  // uncovered examples alike.
  const dcws::SoftLabelMatrix all_labels =
      dcws::predict(fit.state.params, spec, features.values);
  dcws::write_csv_matrix((dir / "labels.csv").string(), all_labels.probs);
  {
    std::ofstream rows((dir / "fit_rows.csv").string());
    for (std::size_t r : fit_rows) rows << r << '\n';
  }
  dcws::save_checkpoint((dir / "model.ckpt").string(), spec, fit.state.params);

  dcws::ExperimentConfig echo;
  echo.synthetic = false;
  echo.features_path = features_path;
  echo.signals_path = signals_path;
  echo.meta_path = meta_path;
  echo.bounds_path = bounds_path;
  echo.dcws_plus = plus;
  echo.solver = solver;
  echo.label_model = spec;
  echo.end_model = false;
  echo.trials = 1;

  dcws::MetricsReport report;
  dcws::TrialMetrics trial;
  trial.label_accuracy = std::numeric_limits<double>::quiet_NaN();
  trial.label_f1 = std::numeric_limits<double>::quiet_NaN();
  trial.test_accuracy = std::numeric_limits<double>::quiet_NaN();
  trial.test_f1 = std::numeric_limits<double>::quiet_NaN();
  trial.epochs = fit.state.epoch;
  trial.converged = fit.state.converged;
  trial.stalled = fit.state.stalled;
  trial.max_violation_at_stop =
      fit.state.history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : fit.state.history.back().max_violation;
  report.per_trial.push_back(trial);
  report.label_accuracy_mean = report.label_accuracy_std = std::numeric_limits<double>::quiet_NaN();
  report.test_accuracy_mean = report.test_accuracy_std = std::numeric_limits<double>::quiet_NaN();
  report.f1_mean = report.f1_std = std::numeric_limits<double>::quiet_NaN();
  report.epochs_mean = fit.state.epoch;
  dcws::emit_metrics(report, echo, (dir / "metrics.json").string());

  std::cout << "fit " << (fit.state.converged ? "converged" : "stopped") << " after "
            << fit.state.epoch << " epochs";
  if (fit.state.stalled) std::cout << " (infeasible stall: best max violation "
                                   << fit.state.best_max_violation << ")";
  std::cout << "; outputs in " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& features_path,
             const std::string& labels_path) {
  const dcws::Checkpoint ckpt = dcws::load_checkpoint(model_path);
  dcws::Matrix features = dcws::read_csv_matrix(features_path);
  dcws::LabeledEval truth{dcws::read_label_file(labels_path)};
  const dcws::SoftLabelMatrix preds = dcws::predict(ckpt.params, ckpt.spec, features);
  std::cout << "accuracy\t" << dcws::format_double(dcws::accuracy(preds, truth)) << "\n";
  std::cout << "f1\t" << dcws::format_double(dcws::f1_score(preds, truth)) << "\n";
  return 0;
}

int cmd_ablate(const std::string& spec_path, const std::string& out_dir) {
  dcws::ExperimentConfig config = load_experiment_config(spec_path);
  fs::create_directories(out_dir);
  const auto results = dcws::run_ablation(config);

  std::ofstream summary(fs::path(out_dir) / "summary.tsv");
  summary << "arm\tlabel_accuracy_mean\tlabel_accuracy_std\ttest_accuracy_mean\n";
  std::cout << "arm\tlabel_acc\ttest_acc\n";
  for (const auto& [arm, report] : results) {
    dcws::emit_metrics(report, dcws::ablation_arm_config(config, arm),
                       (fs::path(out_dir) / ("metrics_" + arm + ".json")).string());
    summary << arm << '\t' << report.label_accuracy_mean << '\t' << report.label_accuracy_std
            << '\t' << report.test_accuracy_mean << '\n';
    std::cout << arm << '\t' << report.label_accuracy_mean << '\t' << report.test_accuracy_mean
              << '\n';
  }
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path) {
  dcws::ExperimentConfig config = load_experiment_config(config_path);
  const dcws::MetricsReport report = dcws::run_experiment(config);
  dcws::emit_metrics(report, config, out_path);
  std::cout << "label_accuracy " << report.label_accuracy_mean << " +- "
            << report.label_accuracy_std << "\n";
  if (!std::isnan(report.test_accuracy_mean))
    std::cout << "test_accuracy " << report.test_accuracy_mean << " +- "
              << report.test_accuracy_std << "\n";
  std::cout << "wall_seconds " << report.wall_seconds << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-consistent weak supervision trainer and benchmark harness"};
  app.require_subcommand(1);

  std::string spec_path, out_dir, out_path;
  std::string features_path, signals_path, meta_path, bounds_path, prior, config_path, log_path;
  std::string model_path, labels_path;
  bool bounds_zero = false, plus = false;

  auto* generate = app.add_subcommand("generate", "Generate a synthetic benchmark dataset");
  generate->add_option("--spec", spec_path, "Spec key-value file")->required();
  generate->add_option("--out", out_dir, "Output directory")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Fit soft labels from features and weak signals");
  fit_cmd->add_option("--features", features_path, "Features CSV")->required();
  fit_cmd->add_option("--signals", signals_path, "Weak-signal CSV")->required();
  fit_cmd->add_option("--meta", meta_path, "Signal metadata JSON")->required();
  fit_cmd->add_option("--bounds", bounds_path, "Per-signal bounds CSV");
  fit_cmd->add_flag("--bounds-zero", bounds_zero, "Use zero error bounds (default)");
  fit_cmd->add_flag("--plus", plus, "Train on all rows, covered or not");
  fit_cmd->add_option("--prior", prior, "majority|uniform|none");
  fit_cmd->add_option("--config", config_path, "Solver/model key-value config");
  fit_cmd->add_option("--log", log_path, "Per-epoch training log file ('-' for stdout)");
  fit_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved label model");
  eval_cmd->add_option("--model", model_path, "Model checkpoint")->required();
  eval_cmd->add_option("--features", features_path, "Features CSV")->required();
  eval_cmd->add_option("--labels", labels_path, "True labels CSV")->required();

  auto* ablate = app.add_subcommand("ablate", "Run the ablation arms on one benchmark");
  ablate->add_option("--spec", spec_path, "Benchmark + solver key-value file")->required();
  ablate->add_option("--out", out_dir, "Output directory")->required();

  auto* experiment = app.add_subcommand("experiment", "Run a full multi-trial experiment");
  experiment->add_option("--config", config_path, "Experiment key-value config")->required();
  experiment->add_option("--out", out_path, "Metrics JSON output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(spec_path, out_dir);
    if (fit_cmd->parsed())
      return cmd_fit(features_path, signals_path, meta_path, bounds_path, bounds_zero, plus, prior,
                     config_path, log_path, out_dir);
    if (eval_cmd->parsed()) return cmd_eval(model_path, features_path, labels_path);
    if (ablate->parsed()) return cmd_ablate(spec_path, out_dir);
    if (experiment->parsed()) return cmd_experiment(config_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

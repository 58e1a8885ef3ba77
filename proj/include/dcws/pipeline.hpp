#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dcws/core.hpp"
#include "dcws/model.hpp"
#include "dcws/solver.hpp"
#include "dcws/synth.hpp"

namespace dcws {

enum class BoundsSource { zero, file, validation };
enum class Method { dcws, direct, majority };
enum class EndLoss { squared, cross_entropy };

struct ExperimentConfig {
  // Data: a generated benchmark or files in the core CSV formats.
  bool synthetic = true;
  std::string benchmark = "dependent";  // dependent | independent
  SyntheticSpec synth;
  std::string features_path, signals_path, meta_path, labels_path;
  std::string test_features_path, test_labels_path, bounds_path;

  Method method = Method::dcws;
  bool dcws_plus = false;  // fit on all rows instead of covered rows only
  SolverConfig solver;
  LabelModelSpec label_model;
  std::size_t cluster_features_k = 0;  // 0 = raw features

  BoundsSource bounds_source = BoundsSource::zero;
  double validation_fraction = 0.1;

  bool end_model = true;
  int end_epochs = 200;
  double end_lr = 0.001;
  EndLoss end_loss = EndLoss::squared;
  bool plus_end_on_all = true;  // DCWS+: end model trains on all produced labels

  int trials = 3;
  std::string output_path;

  void validate() const;
};

struct TrialMetrics {
  double label_accuracy = 0.0;
  double label_f1 = 0.0;
  double test_accuracy = 0.0;  // NaN when the end model is disabled
  double test_f1 = 0.0;
  int epochs = 0;
  double max_violation_at_stop = 0.0;
  bool converged = false;
  bool stalled = false;
  double seconds = 0.0;
};

struct MetricsReport {
  std::vector<TrialMetrics> per_trial;
  double label_accuracy_mean = 0.0, label_accuracy_std = 0.0;
  double test_accuracy_mean = 0.0, test_accuracy_std = 0.0;
  double f1_mean = 0.0, f1_std = 0.0;
  double epochs_mean = 0.0;
  double wall_seconds = 0.0;  // reported on stdout only, never in metrics JSON
  std::string data_hash;
};

// Fixed two-hidden-layer 512-unit ReLU network trained full batch on the
// produced soft labels; returns eval-mode test predictions.
SoftLabelMatrix train_end_model(const Matrix& train_x, const SoftLabelMatrix& soft_labels,
                                const Matrix& test_x, std::uint64_t seed, int epochs = 200,
                                EndLoss loss = EndLoss::squared, double lr = 0.001);

MetricsReport run_experiment(const ExperimentConfig& config);

// Table-6 arm list on shared data: the DCWS baseline, the removal variants,
// the slack-penalty sweep, and the cluster-label representations.
std::vector<std::pair<std::string, MetricsReport>> run_ablation(const ExperimentConfig& config);

std::vector<std::string> ablation_arm_names();
ExperimentConfig ablation_arm_config(const ExperimentConfig& base, const std::string& arm);

void emit_metrics(const MetricsReport& report, const ExperimentConfig& config,
                  const std::string& path);

// Applies flat key-value settings (spec field names) onto a config.
void apply_config(ExperimentConfig& config, const std::map<std::string, std::string>& keys);

void apply_solver_config(SolverConfig& config, const std::map<std::string, std::string>& keys);

}  // namespace dcws

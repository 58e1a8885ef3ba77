#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dcws/constraints.hpp"
#include "dcws/core.hpp"
#include "dcws/model.hpp"

namespace dcws {

enum class PriorMode { majority, uniform, none };

struct SolverConfig {
  double slack_penalty = 10.0;  // C
  PriorMode prior_mode = PriorMode::majority;
  bool use_slack = true;
  bool use_constraints = true;
  int max_epochs = 1000;
  double convergence_tol = 1e-3;
  double lr_theta = 0.01;
  double lr_lambda = 0.01;
  double lr_xi = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  double lagrangian = 0.0;
  double max_violation = 0.0;
  double mean_slack = 0.0;
  double min_lambda = 0.0;
  double min_xi = 0.0;
};

struct TrainState {
  LabelModelParams params;
  std::vector<double> lambda;
  std::vector<double> xi;
  int epoch = 0;
  std::vector<EpochStats> history;
  bool converged = false;
  bool stalled = false;
  double best_max_violation = 0.0;
};

// Value of the Lagrangian: squared distance to the prior (omitted when prior
// is empty), the linear slack penalty, and the multiplier terms. lambda and
// xi must be non-negative.
double lagrangian_value(const SoftLabelMatrix& f, const SoftLabelMatrix& prior,
                        const ConstraintSystem& system, const std::vector<double>& lambda,
                        const std::vector<double>& xi, double slack_penalty);

// dL/df: 2 (f - prior) plus lambda_i * A_i accumulated into column k_i.
Matrix output_gradient(const SoftLabelMatrix& f, const SoftLabelMatrix& prior,
                       const ConstraintSystem& system, const std::vector<double>& lambda);

struct FitResult {
  SoftLabelMatrix labels;
  TrainState state;
};

// Full-batch saddle-point loop: Adam descent on the label model, projected
// gradient ascent on lambda, projected descent on the slack. Multiplier
// updates use the post-step eval-mode output of the same epoch. Returned
// labels come from a final eval-mode forward pass.
FitResult fit_dcws(const FeatureMatrix& features, const WeakSignalSet& signals,
                   const BoundVector& bounds, const LabelModelSpec& spec,
                   const SolverConfig& config, std::ostream* log = nullptr);

// The same loop with the label matrix itself as the free variable, projected
// onto [0,1] (rows renormalized for K > 1) after every step.
SoftLabelMatrix fit_direct(const WeakSignalSet& signals, const BoundVector& bounds,
                           const SoftLabelMatrix& prior, const SolverConfig& config,
                           std::ostream* log = nullptr);

SoftLabelMatrix predict(const LabelModelParams& params, const LabelModelSpec& spec, const Matrix& x);

// Builds the prior selected by the config (empty matrix for PriorMode::none).
SoftLabelMatrix make_prior(PriorMode mode, const WeakSignalSet& signals);

}  // namespace dcws

#pragma once

// Brute-force oracle over the label hypercube for desk-scale instances.

#include <algorithm>
#include <vector>

#include "dcws/constraints.hpp"
#include "dcws/core.hpp"

namespace dcws::testing {

// Objective value at fixed labels with the slack minimized out:
// ||f - prior||^2 + C * sum_i max(0, A_i f - b_i).
inline double dcws_objective(const SoftLabelMatrix& labels, const SoftLabelMatrix& prior,
                             const ConstraintSystem& system, double slack_penalty) {
  double value = 0.0;
  if (!prior.probs.empty()) value = squared_frobenius_distance(labels.probs, prior.probs);
  for (double r : raw_violations(system, labels)) value += slack_penalty * std::max(0.0, r);
  return value;
}

// Exhaustive minimum of the objective over a binary label column discretized
// with the given step.
inline double grid_min_objective(const SoftLabelMatrix& prior, const ConstraintSystem& system,
                                 double slack_penalty, double step = 0.05) {
  const std::size_t n = system.n_examples();
  const std::size_t levels = static_cast<std::size_t>(1.0 / step + 0.5) + 1;
  SoftLabelMatrix labels;
  labels.probs = Matrix(n, 1);
  std::vector<std::size_t> odometer(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t j = 0; j < n; ++j) labels.probs(j, 0) = step * odometer[j];
    best = std::min(best, dcws_objective(labels, prior, system, slack_penalty));
    std::size_t pos = 0;
    while (pos < n && ++odometer[pos] == levels) odometer[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

}  // namespace dcws::testing

#include "dcws/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcws {

void BoundVector::validate() const {
  for (double b : bounds)
    if (!(b >= 0.0) || !std::isfinite(b))
      throw std::invalid_argument("BoundVector: bounds must be non-negative and finite");
}

double empirical_error(std::span<const double> signal_votes, std::span<const double> class_labels) {
  if (signal_votes.size() != class_labels.size())
    throw std::invalid_argument("empirical_error: length mismatch");
  double sum = 0.0;
  std::size_t covered = 0;
  for (std::size_t j = 0; j < signal_votes.size(); ++j) {
    const double q = signal_votes[j];
    if (is_abstain(q)) continue;
    const double y = class_labels[j];
    if (!(y >= 0.0 && y <= 1.0))
      throw std::invalid_argument("empirical_error: label outside [0,1]");
    sum += (1.0 - 2.0 * q) * y + q;
    ++covered;
  }
  if (covered == 0) throw std::invalid_argument("empirical_error: signal abstains everywhere");
  return sum / static_cast<double>(covered);
}

ConstraintSystem build_constraint_system(const WeakSignalSet& signals, const BoundVector& bounds) {
  signals.validate();
  bounds.validate();
  if (bounds.size() != signals.n_signals())
    throw std::invalid_argument("build_constraint_system: bounds length mismatch");

  const std::size_t n = signals.n_examples();
  const std::size_t m = signals.n_signals();
  const bool single_column = signals.label_columns() == 1;

  ConstraintSystem system;
  system.rows = Matrix(m, n);
  system.offsets.resize(m);
  system.signal_class.resize(m);
  system.covered_counts.resize(m);

  for (std::size_t s = 0; s < m; ++s) {
    double vote_sum = 0.0;
    std::size_t covered = 0;
    double* arow = system.rows.row(s);
    for (std::size_t j = 0; j < n; ++j) {
      double q = signals.votes(j, s);
      if (is_abstain(q)) {
        arow[j] = 0.0;
        continue;
      }
      // Single-column tasks: a class-0 signal is the class-1 signal 1 - q.
      if (single_column && signals.signal_class[s] == 0) q = 1.0 - q;
      arow[j] = 1.0 - 2.0 * q;
      vote_sum += q;
      ++covered;
    }
    system.offsets[s] = static_cast<double>(covered) * bounds.bounds[s] - vote_sum;
    system.signal_class[s] = single_column ? 0 : signals.signal_class[s];
    system.covered_counts[s] = covered;
  }
  return system;
}

std::vector<double> raw_violations(const ConstraintSystem& system, const SoftLabelMatrix& labels) {
  if (labels.n_examples() != system.n_examples())
    throw std::invalid_argument("violations: example count mismatch");
  std::vector<double> out(system.n_signals());
  for (std::size_t s = 0; s < system.n_signals(); ++s) {
    const int col = system.signal_class[s];
    if (col < 0 || static_cast<std::size_t>(col) >= labels.n_columns())
      throw std::invalid_argument("violations: signal class incompatible with label columns");
    const double* arow = system.rows.row(s);
    double dot = 0.0;
    for (std::size_t j = 0; j < system.n_examples(); ++j)
      dot += arow[j] * labels.probs(j, static_cast<std::size_t>(col));
    out[s] = dot - system.offsets[s];
  }
  return out;
}

std::vector<double> violations(const ConstraintSystem& system, const SoftLabelMatrix& labels,
                               const std::vector<double>& slack) {
  if (slack.size() != system.n_signals())
    throw std::invalid_argument("violations: slack length mismatch");
  for (double x : slack)
    if (!(x >= 0.0)) throw std::invalid_argument("violations: slack must be non-negative");
  auto out = raw_violations(system, labels);
  for (std::size_t s = 0; s < out.size(); ++s) out[s] -= slack[s];
  return out;
}

BoundEstimate estimate_bounds(const WeakSignalSet& signals, const LabeledEval& validation) {
  if (validation.size() != signals.n_examples())
    throw std::invalid_argument("estimate_bounds: validation length mismatch");
  validation.validate(signals.n_classes);

  const std::size_t n = signals.n_examples();
  const std::size_t m = signals.n_signals();
  const bool single_column = signals.label_columns() == 1;

  BoundEstimate est;
  est.bounds.bounds.assign(m, 0.0);
  est.all_abstained.assign(m, false);

  std::vector<double> votes(n), targets(n);
  for (std::size_t s = 0; s < m; ++s) {
    std::size_t covered = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double q = signals.votes(j, s);
      if (!is_abstain(q)) {
        if (single_column && signals.signal_class[s] == 0) q = 1.0 - q;
        ++covered;
      }
      votes[j] = q;
      const int target_class = single_column ? 1 : signals.signal_class[s];
      targets[j] = validation.true_labels[j] == target_class ? 1.0 : 0.0;
    }
    if (covered == 0) {
      est.all_abstained[s] = true;
      continue;
    }
    const double err = empirical_error(votes, targets);
    est.bounds.bounds[s] = std::clamp(err, 0.0, 1.0);
  }
  return est;
}

}  // namespace dcws

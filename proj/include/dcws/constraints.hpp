#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dcws/core.hpp"
#include "dcws/matrix.hpp"

namespace dcws {

// Per-signal upper bounds on expected one-vs-all error rates.
struct BoundVector {
  std::vector<double> bounds;

  static BoundVector zeros(std::size_t n_signals) { return {std::vector<double>(n_signals, 0.0)}; }
  std::size_t size() const { return bounds.size(); }
  void validate() const;
};

// Linear rearrangement of the error bounds: row i holds
// A_i = mask_i * (1 - 2 q_i) with zeros where signal i abstains, and
// offsets b_i = n_i * bound_i - sum of covered votes, so that
// A_i y <= b_i is the bound inequality and
// A_i y - b_i = n_i * (empirical_error_i(y) - bound_i) identically.
struct ConstraintSystem {
  Matrix rows;                          // n_signals x n_examples
  std::vector<double> offsets;          // b
  std::vector<int> signal_class;        // label column each row constrains
  std::vector<std::size_t> covered_counts;  // n_i

  std::size_t n_signals() const { return rows.rows(); }
  std::size_t n_examples() const { return rows.cols(); }
};

// Expected one-vs-all error of a (possibly abstaining) signal against soft
// class labels, averaged over the signal's covered examples.
double empirical_error(std::span<const double> signal_votes, std::span<const double> class_labels);

ConstraintSystem build_constraint_system(const WeakSignalSet& signals, const BoundVector& bounds);

// A_i f[:, k_i] - b_i - xi_i per signal; positive entries are violations.
std::vector<double> violations(const ConstraintSystem& system, const SoftLabelMatrix& labels,
                               const std::vector<double>& slack);

std::vector<double> raw_violations(const ConstraintSystem& system, const SoftLabelMatrix& labels);

struct BoundEstimate {
  BoundVector bounds;
  std::vector<bool> all_abstained;  // signals with no covered validation row
};

// Per-signal empirical error against validation labels of the signal's class,
// clamped to [0, 1]. Signals abstaining on every validation row get bound 0
// and are flagged. The signal set passed in must already be restricted to the
// validation rows.
BoundEstimate estimate_bounds(const WeakSignalSet& signals, const LabeledEval& validation);

}  // namespace dcws

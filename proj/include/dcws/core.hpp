#pragma once

#include <cstddef>
#include <vector>

#include "dcws/matrix.hpp"

namespace dcws {

// Abstain sentinel used both internally and in signal CSV files. Votes live
// in [0, 1], so any negative entry marks an abstention.
constexpr double kAbstain = -1.0;

inline bool is_abstain(double v) { return v < 0.0; }

// Feature descriptors, one row per example.
struct FeatureMatrix {
  Matrix values;

  std::size_t n_examples() const { return values.rows(); }
  std::size_t n_features() const { return values.cols(); }
  void validate() const;  // throws std::invalid_argument
};

// Noisy one-vs-all weak signals. votes(i, s) is signal s's soft vote on
// example i, or kAbstain. Binary tasks (n_classes <= 2) use a single label
// column; a signal with signal_class 0 votes for the negative class and its
// votes are flipped wherever the single-column convention applies.
struct WeakSignalSet {
  Matrix votes;                    // n_examples x n_signals
  std::vector<int> signal_class;   // size n_signals, entries in [0, n_classes)
  int n_classes = 2;

  std::size_t n_examples() const { return votes.rows(); }
  std::size_t n_signals() const { return votes.cols(); }
  std::size_t label_columns() const { return n_classes <= 2 ? 1 : static_cast<std::size_t>(n_classes); }

  void validate() const;
  WeakSignalSet subset_rows(const std::vector<std::size_t>& rows) const;
};

// Estimated class probabilities: one column for binary, K columns (rows
// summing to 1) for multiclass.
struct SoftLabelMatrix {
  Matrix probs;

  std::size_t n_examples() const { return probs.rows(); }
  std::size_t n_columns() const { return probs.cols(); }
  void validate() const;
};

// Held-out integer labels; used only for metrics and bound estimation.
struct LabeledEval {
  std::vector<int> true_labels;

  std::size_t size() const { return true_labels.size(); }
  void validate(int n_classes) const;
  LabeledEval subset(const std::vector<std::size_t>& rows) const;
};

// True where at least one signal does not abstain.
std::vector<bool> coverage(const WeakSignalSet& signals);

std::vector<std::size_t> covered_rows(const WeakSignalSet& signals);

// Hard per-signal majority vote. Binary: mean of rounded non-abstaining votes,
// thresholded at 1/2 with ties and uncovered rows at 0.5. Multiclass: the same
// tally per class, rows normalized to sum to 1 (uniform when nothing votes).
SoftLabelMatrix majority_vote_prior(const WeakSignalSet& signals);

SoftLabelMatrix uniform_prior(std::size_t n_examples, std::size_t n_columns);

// Fraction of examples whose predicted class matches the truth. Binary
// predictions threshold at 0.5 with 0.5 classified as class 1; multiclass
// argmax ties resolve to the lowest class index.
double accuracy(const SoftLabelMatrix& predictions, const LabeledEval& truth);

// Macro F1 over the classes present in truth or predictions.
double f1_score(const SoftLabelMatrix& predictions, const LabeledEval& truth);

// Hard class index per example under the accuracy tie-break rules.
std::vector<int> hard_predictions(const SoftLabelMatrix& predictions);

}  // namespace dcws

#include "dcws/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcws {

void FeatureMatrix::validate() const {
  if (values.rows() < 1 || values.cols() < 1)
    throw std::invalid_argument("FeatureMatrix: need at least one example and one feature");
  if (!all_finite(values)) throw std::invalid_argument("FeatureMatrix: non-finite entry");
}

void WeakSignalSet::validate() const {
  if (votes.rows() < 1 || votes.cols() < 1)
    throw std::invalid_argument("WeakSignalSet: empty vote matrix");
  if (signal_class.size() != votes.cols())
    throw std::invalid_argument("WeakSignalSet: signal_class size mismatch");
  if (n_classes < 1) throw std::invalid_argument("WeakSignalSet: n_classes must be >= 1");
  for (int c : signal_class)
    if (c < 0 || c >= std::max(n_classes, 2))
      throw std::invalid_argument("WeakSignalSet: signal class out of range");
  std::vector<bool> any(votes.cols(), false);
  for (std::size_t i = 0; i < votes.rows(); ++i) {
    const double* row = votes.row(i);
    for (std::size_t s = 0; s < votes.cols(); ++s) {
      const double v = row[s];
      if (is_abstain(v)) {
        if (v != kAbstain) throw std::invalid_argument("WeakSignalSet: negative non-sentinel vote");
        continue;
      }
      if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v))
        throw std::invalid_argument("WeakSignalSet: vote outside [0,1]");
      any[s] = true;
    }
  }
  for (std::size_t s = 0; s < any.size(); ++s)
    if (!any[s]) throw std::invalid_argument("WeakSignalSet: signal " + std::to_string(s) + " abstains everywhere");
}

WeakSignalSet WeakSignalSet::subset_rows(const std::vector<std::size_t>& rows) const {
  WeakSignalSet out;
  out.votes = Matrix(rows.size(), votes.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = votes.row(rows[i]);
    std::copy(src, src + votes.cols(), out.votes.row(i));
  }
  out.signal_class = signal_class;
  out.n_classes = n_classes;
  return out;
}

void SoftLabelMatrix::validate() const {
  for (double v : probs.data())
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("SoftLabelMatrix: entry outside [0,1]");
  if (probs.cols() > 1) {
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < probs.cols(); ++j) sum += probs(i, j);
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("SoftLabelMatrix: row does not sum to 1");
    }
  }
}

void LabeledEval::validate(int n_classes) const {
  for (int y : true_labels)
    if (y < 0 || y >= std::max(n_classes, 2))
      throw std::invalid_argument("LabeledEval: label out of range");
}

LabeledEval LabeledEval::subset(const std::vector<std::size_t>& rows) const {
  LabeledEval out;
  out.true_labels.reserve(rows.size());
  for (std::size_t r : rows) out.true_labels.push_back(true_labels[r]);
  return out;
}

std::vector<bool> coverage(const WeakSignalSet& signals) {
  std::vector<bool> covered(signals.n_examples(), false);
  for (std::size_t i = 0; i < signals.n_examples(); ++i) {
    const double* row = signals.votes.row(i);
    for (std::size_t s = 0; s < signals.n_signals(); ++s) {
      if (!is_abstain(row[s])) {
        covered[i] = true;
        break;
      }
    }
  }
  return covered;
}

std::vector<std::size_t> covered_rows(const WeakSignalSet& signals) {
  auto mask = coverage(signals);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(i);
  return rows;
}

namespace {

// Binary tally of hard votes: 1 / 0 / 0.5 on ties or no votes.
double tally(double sum, std::size_t count) {
  if (count == 0) return 0.5;
  const double mean = sum / static_cast<double>(count);
  if (mean > 0.5) return 1.0;
  if (mean < 0.5) return 0.0;
  return 0.5;
}

}  // namespace

SoftLabelMatrix majority_vote_prior(const WeakSignalSet& signals) {
  signals.validate();
  const std::size_t n = signals.n_examples();
  const std::size_t m = signals.n_signals();
  const std::size_t cols = signals.label_columns();
  SoftLabelMatrix out;
  out.probs = Matrix(n, cols);

  for (std::size_t i = 0; i < n; ++i) {
    const double* row = signals.votes.row(i);
    if (cols == 1) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t s = 0; s < m; ++s) {
        double v = row[s];
        if (is_abstain(v)) continue;
        if (signals.signal_class[s] == 0) v = 1.0 - v;  // negative signal votes for class 0
        sum += v >= 0.5 ? 1.0 : 0.0;
        ++count;
      }
      out.probs(i, 0) = tally(sum, count);
    } else {
      double row_sum = 0.0;
      for (std::size_t k = 0; k < cols; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s < m; ++s) {
          if (signals.signal_class[s] != static_cast<int>(k)) continue;
          const double v = row[s];
          if (is_abstain(v)) continue;
          sum += v >= 0.5 ? 1.0 : 0.0;
          ++count;
        }
        const double t = tally(sum, count);
        out.probs(i, k) = t;
        row_sum += t;
      }
      if (row_sum <= 0.0) {
        for (std::size_t k = 0; k < cols; ++k) out.probs(i, k) = 1.0 / static_cast<double>(cols);
      } else {
        for (std::size_t k = 0; k < cols; ++k) out.probs(i, k) /= row_sum;
      }
    }
  }
  return out;
}

SoftLabelMatrix uniform_prior(std::size_t n_examples, std::size_t n_columns) {
  if (n_examples < 1 || n_columns < 1)
    throw std::invalid_argument("uniform_prior: empty shape");
  SoftLabelMatrix out;
  const double v = n_columns == 1 ? 0.5 : 1.0 / static_cast<double>(n_columns);
  out.probs = Matrix(n_examples, n_columns, v);
  return out;
}

std::vector<int> hard_predictions(const SoftLabelMatrix& predictions) {
  std::vector<int> preds(predictions.n_examples());
  for (std::size_t i = 0; i < predictions.n_examples(); ++i) {
    if (predictions.n_columns() == 1) {
      preds[i] = predictions.probs(i, 0) >= 0.5 ? 1 : 0;
    } else {
      std::size_t best = 0;
      for (std::size_t k = 1; k < predictions.n_columns(); ++k)
        if (predictions.probs(i, k) > predictions.probs(i, best)) best = k;
      preds[i] = static_cast<int>(best);
    }
  }
  return preds;
}

double accuracy(const SoftLabelMatrix& predictions, const LabeledEval& truth) {
  if (predictions.n_examples() != truth.size())
    throw std::invalid_argument("accuracy: length mismatch");
  if (truth.size() == 0) throw std::invalid_argument("accuracy: empty input");
  const auto preds = hard_predictions(predictions);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == truth.true_labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double f1_score(const SoftLabelMatrix& predictions, const LabeledEval& truth) {
  if (predictions.n_examples() != truth.size())
    throw std::invalid_argument("f1_score: length mismatch");
  if (truth.size() == 0) throw std::invalid_argument("f1_score: empty input");
  const auto preds = hard_predictions(predictions);

  int max_class = 1;
  for (int y : truth.true_labels) max_class = std::max(max_class, y);
  for (int y : preds) max_class = std::max(max_class, y);
  const int n_classes = max_class + 1;

  double f1_sum = 0.0;
  std::size_t included = 0;
  for (int k = 0; k < n_classes; ++k) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i] == k;
      const bool t = truth.true_labels[i] == k;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    if (tp + fp + fn == 0) continue;  // class absent from both sides
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    f1_sum += f1;
    ++included;
  }
  if (included == 0) throw std::invalid_argument("f1_score: no class has support");
  return f1_sum / static_cast<double>(included);
}

}  // namespace dcws

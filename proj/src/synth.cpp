#include "dcws/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "dcws/rng.hpp"

namespace dcws {

namespace {

constexpr int kMaxResampleAttempts = 100;

void generate_features(Rng& rng, const std::vector<double>& agreement,
                       const std::vector<int>& truth, Matrix& out) {
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const bool agree = rng.bernoulli(agreement[j]);
      row[j] = agree ? truth[i] : 1 - truth[i];
    }
  }
}

std::vector<int> coin_labels(Rng& rng, std::size_t n) {
  std::vector<int> labels(n);
  for (auto& y : labels) y = rng.bernoulli(0.5) ? 1 : 0;
  return labels;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_train < 1 || n_test < 1 || n_features < 1 || n_signals < 1)
    throw std::invalid_argument("SyntheticSpec: counts must be positive");
  if (n_copies >= n_signals)
    throw std::invalid_argument("SyntheticSpec: n_copies must be below n_signals");
  if (!(feature_agreement_lo > 0.5 && feature_agreement_hi < 1.0 &&
        feature_agreement_lo <= feature_agreement_hi))
    throw std::invalid_argument("SyntheticSpec: feature agreement range must lie in (0.5, 1)");
  if (!(coverage > 0.0 && coverage <= 1.0))
    throw std::invalid_argument("SyntheticSpec: coverage must lie in (0, 1]");
  if (!(error_lo > 0.0 && error_hi < 1.0 && error_lo <= error_hi))
    throw std::invalid_argument("SyntheticSpec: error range must lie in (0, 1)");
  if (!(copy_flip_rate >= 0.0 && copy_flip_rate <= 1.0))
    throw std::invalid_argument("SyntheticSpec: copy_flip_rate must lie in [0, 1]");
}

SyntheticBundle generate_dependent(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  SyntheticBundle bundle;
  bundle.train_truth.true_labels = coin_labels(rng, spec.n_train);
  bundle.test_truth.true_labels = coin_labels(rng, spec.n_test);

  std::vector<double> agreement(spec.n_features);
  for (auto& p : agreement) p = rng.uniform(spec.feature_agreement_lo, spec.feature_agreement_hi);
  bundle.train_features.values = Matrix(spec.n_train, spec.n_features);
  bundle.test_features.values = Matrix(spec.n_test, spec.n_features);
  generate_features(rng, agreement, bundle.train_truth.true_labels, bundle.train_features.values);
  generate_features(rng, agreement, bundle.test_truth.true_labels, bundle.test_features.values);

  const std::size_t n = spec.n_train;
  const std::size_t n_base = spec.n_signals - spec.n_copies;
  bundle.signals.votes = Matrix(n, spec.n_signals, kAbstain);
  bundle.signals.signal_class.assign(spec.n_signals, 1);
  bundle.signals.n_classes = 2;
  bundle.realized_errors.assign(spec.n_signals, 0.0);

  const std::size_t cov_count =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.coverage * n)));
  std::vector<std::size_t> base_mask;

  for (std::size_t s = 0; s < n_base; ++s) {
    const auto mask = rng.sample_indices(n, cov_count);
    if (s == 0) base_mask = mask;

    bool accepted = false;
    for (int attempt = 0; attempt < kMaxResampleAttempts && !accepted; ++attempt) {
      const double e = rng.uniform(spec.error_lo, spec.error_hi);
      const std::size_t flips = static_cast<std::size_t>(std::llround(e * cov_count));
      const double realized = static_cast<double>(flips) / static_cast<double>(cov_count);
      if (realized < spec.error_lo || realized > spec.error_hi) continue;
      const auto flip_pos = rng.sample_indices(cov_count, flips);
      for (std::size_t j : mask) bundle.signals.votes(j, s) = bundle.train_truth.true_labels[j];
      for (std::size_t p : flip_pos) {
        const std::size_t j = mask[p];
        bundle.signals.votes(j, s) = 1.0 - bundle.signals.votes(j, s);
      }
      bundle.realized_errors[s] = realized;
      accepted = true;
    }
    if (!accepted)
      throw std::runtime_error("generate_dependent: could not realize a base signal inside the error range");
  }

  for (std::size_t c = 0; c < spec.n_copies; ++c) {
    const std::size_t s = n_base + c;
    const std::size_t flips =
        static_cast<std::size_t>(std::llround(spec.copy_flip_rate * cov_count));
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxResampleAttempts && !accepted; ++attempt) {
      const auto flip_pos = rng.sample_indices(cov_count, flips);
      std::vector<bool> flipped(cov_count, false);
      for (std::size_t p : flip_pos) flipped[p] = true;
      std::size_t wrong = 0;
      for (std::size_t p = 0; p < cov_count; ++p) {
        const std::size_t j = base_mask[p];
        double v = bundle.signals.votes(j, 0);
        if (flipped[p]) v = 1.0 - v;
        bundle.signals.votes(j, s) = v;
        wrong += v != static_cast<double>(bundle.train_truth.true_labels[j]);
      }
      const double realized = static_cast<double>(wrong) / static_cast<double>(cov_count);
      if (realized >= spec.error_lo && realized <= spec.error_hi) {
        bundle.realized_errors[s] = realized;
        accepted = true;
      }
    }
    if (!accepted)
      throw std::runtime_error("generate_dependent: could not realize a copy inside the error range");
  }

  bundle.signals.validate();
  return bundle;
}

SyntheticBundle generate_independent(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.coverage != 1.0 || spec.n_copies != 0)
    throw std::invalid_argument("generate_independent: requires coverage = 1 and n_copies = 0");
  return generate_dependent(spec);
}

Matrix kmeans_features(const Matrix& x, std::size_t k, std::uint64_t seed, int max_iters,
                       std::size_t minibatch) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans_features: need 1 <= k <= n_examples");
  Rng rng(seed);

  auto dist2 = [&](const double* a, const double* b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = a[j] - b[j];
      sum += diff * diff;
    }
    return sum;
  };

  // k-means++ seeding.
  Matrix centers(k, d);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  {
    const std::size_t first = rng.index(n);
    std::copy(x.row(first), x.row(first) + d, centers.row(0));
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], dist2(x.row(i), centers.row(c - 1)));
        total += nearest[i];
      }
      std::size_t chosen = n - 1;
      if (total > 0.0) {
        double r = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
          r -= nearest[i];
          if (r <= 0.0) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = rng.index(n);
      }
      std::copy(x.row(chosen), x.row(chosen) + d, centers.row(c));
    }
  }

  std::vector<std::size_t> assignment(n, 0);
  auto assign_point = [&](std::size_t i) {
    std::size_t best = 0;
    double best_d = dist2(x.row(i), centers.row(0));
    for (std::size_t c = 1; c < k; ++c) {
      const double dd = dist2(x.row(i), centers.row(c));
      if (dd < best_d) {
        best_d = dd;
        best = c;
      }
    }
    assignment[i] = best;
    return best_d;
  };

  if (minibatch == 0) {
    std::vector<double> point_dist(n, 0.0);
    for (int iter = 0; iter < max_iters; ++iter) {
      bool changed = iter == 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t before = assignment[i];
        point_dist[i] = assign_point(i);
        changed |= assignment[i] != before;
      }

      Matrix sums(k, d);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        double* srow = sums.row(assignment[i]);
        const double* xrow = x.row(i);
        for (std::size_t j = 0; j < d; ++j) srow[j] += xrow[j];
        ++counts[assignment[i]];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          // Reseed an empty cluster to the point farthest from its centroid.
          std::size_t far = 0;
          for (std::size_t i = 1; i < n; ++i)
            if (point_dist[i] > point_dist[far]) far = i;
          std::copy(x.row(far), x.row(far) + d, centers.row(c));
          assignment[far] = c;
          point_dist[far] = 0.0;
          changed = true;
          continue;
        }
        double* crow = centers.row(c);
        const double* srow = sums.row(c);
        for (std::size_t j = 0; j < d; ++j) crow[j] = srow[j] / static_cast<double>(counts[c]);
      }
      if (!changed) break;
    }
    for (std::size_t i = 0; i < n; ++i) assign_point(i);
  } else {
    std::vector<std::size_t> center_counts(k, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
      for (std::size_t b = 0; b < minibatch; ++b) {
        const std::size_t i = rng.index(n);
        assign_point(i);
        const std::size_t c = assignment[i];
        ++center_counts[c];
        const double lr = 1.0 / static_cast<double>(center_counts[c]);
        double* crow = centers.row(c);
        const double* xrow = x.row(i);
        for (std::size_t j = 0; j < d; ++j) crow[j] += lr * (xrow[j] - crow[j]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) assign_point(i);
  }

  Matrix onehot(n, k);
  for (std::size_t i = 0; i < n; ++i) onehot(i, assignment[i]) = 1.0;
  return onehot;
}

namespace {

void hash_doubles(std::uint64_t& h, const std::vector<double>& values) {
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h ^= bits;
    h *= 0x100000001B3ull;
  }
}

void hash_ints(std::uint64_t& h, const std::vector<int>& values) {
  for (int v : values) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 0x100000001B3ull;
  }
}

}  // namespace

std::uint64_t bundle_hash(const SyntheticBundle& bundle) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  h ^= bundle.train_features.values.rows() * 31 + bundle.train_features.values.cols();
  h *= 0x100000001B3ull;
  hash_doubles(h, bundle.train_features.values.data());
  hash_doubles(h, bundle.test_features.values.data());
  hash_doubles(h, bundle.signals.votes.data());
  hash_ints(h, bundle.train_truth.true_labels);
  hash_ints(h, bundle.test_truth.true_labels);
  hash_ints(h, bundle.signals.signal_class);
  return h;
}

std::string bundle_hash_hex(const SyntheticBundle& bundle) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bundle_hash(bundle)));
  return buf;
}

}  // namespace dcws

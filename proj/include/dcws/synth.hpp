#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcws/core.hpp"
#include "dcws/matrix.hpp"

namespace dcws {

struct SyntheticSpec {
  std::size_t n_train = 32000;
  std::size_t n_test = 8000;
  std::size_t n_features = 200;
  double feature_agreement_lo = 0.55;
  double feature_agreement_hi = 0.65;
  std::size_t n_signals = 10;
  std::size_t n_copies = 9;     // noisy copies of the first base signal
  double copy_flip_rate = 0.05;
  double coverage = 0.5;
  double error_lo = 0.35;
  double error_hi = 0.45;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticBundle {
  FeatureMatrix train_features;
  LabeledEval train_truth;
  FeatureMatrix test_features;
  LabeledEval test_truth;
  WeakSignalSet signals;
  std::vector<double> realized_errors;  // hard one-vs-all error on covered rows
};

// Binary task with random binary features agreeing with the label at a
// per-feature rate drawn from the agreement range. One base signal covers a
// random coverage-fraction subset with votes flipped on an error-range
// fraction; each copy reuses the base coverage mask and independently flips
// copy_flip_rate of the covered votes (resampled until its realized error
// lands inside the error range; throws after 100 attempts).
SyntheticBundle generate_dependent(const SyntheticSpec& spec);

// Fully covering, independently flipped signals (requires coverage == 1 and
// n_copies == 0).
SyntheticBundle generate_independent(const SyntheticSpec& spec);

// Lloyd's k-means with k-means++ seeding; empty clusters are reseeded to the
// point farthest from its assigned centroid. minibatch > 0 switches to
// mini-batch updates of that batch size. Returns one-hot cluster rows.
Matrix kmeans_features(const Matrix& x, std::size_t k, std::uint64_t seed, int max_iters = 100,
                       std::size_t minibatch = 0);

// Order-sensitive content hash used to confirm ablation arms share data.
std::uint64_t bundle_hash(const SyntheticBundle& bundle);
std::string bundle_hash_hex(const SyntheticBundle& bundle);

}  // namespace dcws

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "dcws/rng.hpp"
#include "dcws/synth.hpp"

using namespace dcws;

namespace {

SyntheticSpec small_dependent(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_train = 4000;
  spec.n_test = 1000;
  spec.n_features = 50;
  spec.seed = seed;
  return spec;
}

double covered_mv_accuracy(const SyntheticBundle& bundle) {
  const auto rows = covered_rows(bundle.signals);
  const auto prior = majority_vote_prior(bundle.signals);
  std::size_t correct = 0;
  for (std::size_t r : rows) {
    const int pred = prior.probs(r, 0) >= 0.5 ? 1 : 0;
    correct += pred == bundle.train_truth.true_labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("zero copy flips duplicate the base signal") {
  auto spec = small_dependent(3);
  spec.copy_flip_rate = 0.0;
  auto bundle = generate_dependent(spec);
  for (std::size_t j = 0; j < spec.n_train; ++j)
    for (std::size_t s = 1; s < spec.n_signals; ++s)
      CHECK(bundle.signals.votes(j, s) == bundle.signals.votes(j, 0));
}

TEST_CASE("copies overlap the base signal by about 95 percent") {
  auto bundle = generate_dependent(small_dependent(4));
  const auto rows = covered_rows(bundle.signals);
  for (std::size_t s = 1; s < 10; ++s) {
    std::size_t agree = 0;
    for (std::size_t r : rows)
      agree += bundle.signals.votes(r, s) == bundle.signals.votes(r, 0);
    const double rate = static_cast<double>(agree) / static_cast<double>(rows.size());
    CHECK(rate >= 0.94);
    CHECK(rate <= 0.96);
  }
}

TEST_CASE("realized errors stay inside the requested range") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    auto bundle = generate_dependent(small_dependent(seed));
    REQUIRE(bundle.realized_errors.size() == 10);
    for (double e : bundle.realized_errors) {
      CHECK(e >= 0.35);
      CHECK(e <= 0.45);
    }
    // Recompute from the votes to confirm the bookkeeping.
    const auto rows = covered_rows(bundle.signals);
    for (std::size_t s = 0; s < 10; ++s) {
      std::size_t wrong = 0;
      for (std::size_t r : rows)
        wrong += bundle.signals.votes(r, s) != bundle.train_truth.true_labels[r];
      CHECK(static_cast<double>(wrong) / rows.size() ==
            doctest::Approx(bundle.realized_errors[s]));
    }
  }
}

TEST_CASE("per-signal coverage tracks the spec") {
  auto bundle = generate_dependent(small_dependent(9));
  for (std::size_t s = 0; s < 10; ++s) {
    std::size_t covered = 0;
    for (std::size_t j = 0; j < bundle.signals.n_examples(); ++j)
      covered += !is_abstain(bundle.signals.votes(j, s));
    const double rate = static_cast<double>(covered) / bundle.signals.n_examples();
    CHECK(std::abs(rate - 0.5) <= 0.02);
  }
}

TEST_CASE("generation is reproducible bit for bit") {
  auto a = generate_dependent(small_dependent(12));
  auto b = generate_dependent(small_dependent(12));
  CHECK(a.train_features.values.data() == b.train_features.values.data());
  CHECK(a.test_features.values.data() == b.test_features.values.data());
  CHECK(a.signals.votes.data() == b.signals.votes.data());
  CHECK(a.train_truth.true_labels == b.train_truth.true_labels);
  CHECK(bundle_hash(a) == bundle_hash(b));

  auto c = generate_dependent(small_dependent(13));
  CHECK(bundle_hash(a) != bundle_hash(c));
}

TEST_CASE("feature agreement with the truth stays near the drawn range") {
  SyntheticSpec spec;  // paper-scale defaults, generation only
  spec.seed = 21;
  auto bundle = generate_dependent(spec);
  for (std::size_t j = 0; j < spec.n_features; ++j) {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < spec.n_train; ++i)
      agree += bundle.train_features.values(i, j) ==
               static_cast<double>(bundle.train_truth.true_labels[i]);
    const double rate = static_cast<double>(agree) / spec.n_train;
    CHECK(rate >= 0.53);
    CHECK(rate <= 0.67);
  }
}

TEST_CASE("majority vote on the dependent benchmark lands near the expected value") {
  // Sanity link: hard majority vote over base-plus-copies tracks one minus
  // the realized base error, about 0.625 for mid-range draws.
  SyntheticSpec spec;
  spec.n_train = 8000;
  spec.n_test = 100;
  spec.seed = 2;
  auto bundle = generate_dependent(spec);
  const double mv = covered_mv_accuracy(bundle);
  CHECK(mv == doctest::Approx(1.0 - bundle.realized_errors[0]).epsilon(0.03));
}

TEST_CASE("independent benchmark covers everything with distinct signals") {
  SyntheticSpec spec;
  spec.n_train = 2000;
  spec.n_test = 200;
  spec.n_features = 40;
  spec.n_signals = 20;
  spec.n_copies = 0;
  spec.coverage = 1.0;
  spec.seed = 6;
  auto bundle = generate_independent(spec);

  for (double v : bundle.signals.votes.data()) CHECK_FALSE(is_abstain(v));
  for (double e : bundle.realized_errors) {
    CHECK(e >= 0.35);
    CHECK(e <= 0.45);
  }
  std::set<std::vector<double>> columns;
  for (std::size_t s = 0; s < 20; ++s) {
    std::vector<double> col(spec.n_train);
    for (std::size_t j = 0; j < spec.n_train; ++j) col[j] = bundle.signals.votes(j, s);
    columns.insert(col);
  }
  CHECK(columns.size() == 20);

  SyntheticSpec bad = spec;
  bad.coverage = 0.5;
  CHECK_THROWS(generate_independent(bad));
}

TEST_CASE("kmeans one-hot output") {
  Matrix x(7, 3);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = static_cast<double>(i * 3 + j);

  auto onehot = kmeans_features(x, 1, 0);
  for (std::size_t i = 0; i < 7; ++i) CHECK(onehot(i, 0) == 1.0);

  CHECK_THROWS(kmeans_features(x, 8, 0));
}

TEST_CASE("kmeans separates distant clouds exactly") {
  Rng rng(14);
  const std::size_t per_cloud = 40;
  Matrix x(2 * per_cloud, 4);
  for (std::size_t i = 0; i < per_cloud; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      x(i, j) = rng.uniform();                  // cloud around the origin
      x(per_cloud + i, j) = 100.0 + rng.uniform();  // far cloud
    }
  auto onehot = kmeans_features(x, 2, 3);
  for (std::size_t i = 0; i < 2 * per_cloud; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 2; ++c) sum += onehot(i, c);
    CHECK(sum == 1.0);
  }
  // All points in a cloud share a cluster, and the clouds differ.
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 1; i < per_cloud; ++i)
      CHECK(onehot(c * per_cloud + i, 0) == onehot(c * per_cloud, 0));
  CHECK(onehot(0, 0) != onehot(per_cloud, 0));

  // Deterministic per seed, including the mini-batch variant.
  auto again = kmeans_features(x, 2, 3);
  CHECK(onehot.data() == again.data());
  auto mb1 = kmeans_features(x, 2, 3, 50, 16);
  auto mb2 = kmeans_features(x, 2, 3, 50, 16);
  CHECK(mb1.data() == mb2.data());
  for (std::size_t i = 0; i < 2 * per_cloud; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 2; ++c) sum += mb1(i, c);
    CHECK(sum == 1.0);
  }
}

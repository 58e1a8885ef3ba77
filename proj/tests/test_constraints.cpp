#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dcws/constraints.hpp"
#include "dcws/rng.hpp"

using namespace dcws;

namespace {

WeakSignalSet make_signals(const std::vector<std::vector<double>>& rows,
                           std::vector<int> classes, int n_classes = 2) {
  WeakSignalSet s;
  s.votes = Matrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) s.votes(i, j) = rows[i][j];
  s.signal_class = std::move(classes);
  s.n_classes = n_classes;
  return s;
}

SoftLabelMatrix make_labels(const std::vector<double>& column) {
  SoftLabelMatrix m;
  m.probs = Matrix(column.size(), 1);
  for (std::size_t i = 0; i < column.size(); ++i) m.probs(i, 0) = column[i];
  return m;
}

WeakSignalSet random_signals(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  for (auto& row : rows)
    for (auto& v : row) v = rng.bernoulli(0.3) ? kAbstain : rng.uniform();
  for (std::size_t s = 0; s < m; ++s) rows[s % n][s] = rng.uniform();  // no empty signal
  return make_signals(rows, std::vector<int>(m, 1));
}

}  // namespace

TEST_CASE("empirical error hand cases") {
  const double A = kAbstain;
  CHECK(empirical_error(std::vector<double>{1, 1}, std::vector<double>{1, 0}) ==
        doctest::Approx(0.5));
  CHECK(empirical_error(std::vector<double>{1, 0, 1}, std::vector<double>{1, 0, 1}) ==
        doctest::Approx(0.0));
  CHECK(empirical_error(std::vector<double>{1, 0, A}, std::vector<double>{0, 1, 1}) ==
        doctest::Approx(1.0));
  CHECK_THROWS(empirical_error(std::vector<double>{A, A}, std::vector<double>{0, 1}));
}

TEST_CASE("constraint system hand cases") {
  const double A = kAbstain;
  auto system = build_constraint_system(make_signals({{1}, {0}, {A}}, {1}),
                                        BoundVector::zeros(1));
  CHECK(system.rows(0, 0) == -1.0);
  CHECK(system.rows(0, 1) == 1.0);
  CHECK(system.rows(0, 2) == 0.0);
  CHECK(system.offsets[0] == doctest::Approx(-1.0));
  CHECK(system.covered_counts[0] == 2);

  // Soft 0.5 votes: zero row, offset -sum of votes.
  system = build_constraint_system(make_signals({{0.5}, {0.5}, {0.5}, {0.5}}, {1}),
                                   BoundVector::zeros(1));
  for (std::size_t j = 0; j < 4; ++j) CHECK(system.rows(0, j) == 0.0);
  CHECK(system.offsets[0] == doctest::Approx(-2.0));
}

TEST_CASE("bound of 1 admits every labeling for a hard signal") {
  auto signals = make_signals({{1}, {0}, {1}}, {1});
  auto system = build_constraint_system(signals, BoundVector{{1.0}});
  Rng rng(1);
  for (int round = 0; round < 200; ++round) {
    auto y = make_labels({rng.uniform(), rng.uniform(), rng.uniform()});
    auto v = violations(system, y, {0.0});
    CHECK(v[0] <= 1e-12);
  }
}

TEST_CASE("violations hand cases") {
  const double A = kAbstain;
  auto signals = make_signals({{1}, {0}, {A}}, {1});
  auto system = build_constraint_system(signals, BoundVector::zeros(1));
  CHECK(violations(system, make_labels({1, 0, 0.3}), {0.0})[0] == doctest::Approx(0.0));
  CHECK(violations(system, make_labels({0, 1, 0.3}), {0.0})[0] == doctest::Approx(2.0));
  CHECK_THROWS(violations(system, make_labels({1, 0, 0.3}), {-0.1}));
}

TEST_CASE("identity links the bound and the linear system") {
  // A_i y - b_i = n_i (err_i(y) - bound_i) for random instances, to 1e-9.
  Rng rng(42);
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = 2 + rng.index(8);
    const std::size_t m = 1 + rng.index(4);
    auto signals = random_signals(rng, n, m);
    BoundVector bounds;
    for (std::size_t s = 0; s < m; ++s) bounds.bounds.push_back(rng.uniform());
    auto system = build_constraint_system(signals, bounds);

    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform();
    auto labels = make_labels(y);
    auto raw = raw_violations(system, labels);

    for (std::size_t s = 0; s < m; ++s) {
      std::vector<double> votes(n);
      for (std::size_t j = 0; j < n; ++j) votes[j] = signals.votes(j, s);
      const double err = empirical_error(votes, y);
      const double expected = static_cast<double>(system.covered_counts[s]) *
                              (err - bounds.bounds[s]);
      CHECK(raw[s] == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("entries of A stay in [-1, 1] with one nonzero per covered entry") {
  Rng rng(9);
  auto signals = random_signals(rng, 12, 5);
  auto system = build_constraint_system(signals, BoundVector::zeros(5));
  for (std::size_t s = 0; s < 5; ++s) {
    std::size_t nonzero_allowed = 0;
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(system.rows(s, j) >= -1.0);
      CHECK(system.rows(s, j) <= 1.0);
      if (!is_abstain(signals.votes(j, s))) ++nonzero_allowed;
      else CHECK(system.rows(s, j) == 0.0);
    }
    CHECK(system.covered_counts[s] == nonzero_allowed);
  }
}

TEST_CASE("system permutes with the examples") {
  Rng rng(13);
  auto signals = random_signals(rng, 6, 3);
  auto system = build_constraint_system(signals, BoundVector::zeros(3));

  std::vector<std::size_t> perm{4, 2, 0, 5, 1, 3};
  auto permuted = signals.subset_rows(perm);
  auto permuted_system = build_constraint_system(permuted, BoundVector::zeros(3));
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(permuted_system.offsets[s] == doctest::Approx(system.offsets[s]));
    for (std::size_t j = 0; j < perm.size(); ++j)
      CHECK(permuted_system.rows(s, j) == system.rows(s, perm[j]));
  }
}

TEST_CASE("hard signal with zero bound pins covered labels") {
  // Feasibility with zero slack forces exact agreement on covered entries.
  const double A = kAbstain;
  auto signals = make_signals({{1}, {0}, {A}}, {1});
  auto system = build_constraint_system(signals, BoundVector::zeros(1));
  auto feasible = make_labels({1, 0, 0.7});
  CHECK(violations(system, feasible, {0.0})[0] <= 1e-12);
  // Any covered deviation violates.
  auto off = make_labels({0.9, 0, 0.7});
  CHECK(violations(system, off, {0.0})[0] > 0.0);
  off = make_labels({1, 0.05, 0.7});
  CHECK(violations(system, off, {0.0})[0] > 0.0);
}

TEST_CASE("class-0 signals flip on single-column tasks") {
  // A perfect negative signal: votes 1 where the true class is 0.
  auto signals = make_signals({{1.0}, {0.0}}, {0});
  auto system = build_constraint_system(signals, BoundVector::zeros(1));
  // Flipped votes are {0,1}: A = [1,-1], b = -1.
  CHECK(system.rows(0, 0) == doctest::Approx(1.0));
  CHECK(system.rows(0, 1) == doctest::Approx(-1.0));
  CHECK(system.offsets[0] == doctest::Approx(-1.0));
  CHECK(violations(system, make_labels({0, 1}), {0.0})[0] == doctest::Approx(0.0));
}

TEST_CASE("estimate_bounds") {
  const double A = kAbstain;
  // Perfect signal on validation rows.
  auto perfect = make_signals({{1}, {0}, {1}}, {1});
  auto est = estimate_bounds(perfect, LabeledEval{{1, 0, 1}});
  CHECK(est.bounds.bounds[0] == doctest::Approx(0.0));
  CHECK_FALSE(est.all_abstained[0]);

  // q=[1,1] against one-vs-all truth [1,0] -> 0.5, matching empirical_error.
  auto half = make_signals({{1}, {1}}, {1});
  est = estimate_bounds(half, LabeledEval{{1, 0}});
  CHECK(est.bounds.bounds[0] == doctest::Approx(0.5));

  // Signal abstaining on every validation row: bound 0 with a flag.
  auto abstaining = make_signals({{A, 1}, {A, 0}}, {1, 1});
  est = estimate_bounds(abstaining, LabeledEval{{1, 0}});
  CHECK(est.bounds.bounds[0] == 0.0);
  CHECK(est.all_abstained[0]);
  CHECK_FALSE(est.all_abstained[1]);

  // Multiclass one-vs-all target construction.
  auto multi = make_signals({{1.0}, {1.0}, {0.0}}, {2}, 3);
  est = estimate_bounds(multi, LabeledEval{{2, 0, 1}});
  // Votes [1,1,0] vs y_2=[1,0,0]: errors (0 + 1 + 0)/3.
  CHECK(est.bounds.bounds[0] == doctest::Approx(1.0 / 3.0));
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nexcp/conformal.hpp"
#include "oracles.hpp"

using namespace nexcp;

namespace {

struct Instance {
  TaggedDataset train;
  TestPoint test;
  std::vector<double> raw;
  std::vector<oracle::Row> rows;
  std::vector<double> test_x;
};

// Small random regression problem with decaying tags and random weights.
Instance random_instance(RandomStream& rng, std::size_t n, std::size_t p) {
  Instance out;
  const auto ni = static_cast<Eigen::Index>(n);
  const auto pi = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd x(ni, pi);
  Eigen::VectorXd y(ni);
  Eigen::VectorXd tags(ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    oracle::Row row;
    for (Eigen::Index j = 0; j < pi; ++j) {
      x(i, j) = rng.normal();
      row.x.push_back(x(i, j));
    }
    y(i) = x.row(i).sum() + rng.normal();
    tags(i) = 0.2 + 0.8 * rng.uniform();
    row.y = y(i);
    row.tag = tags(i);
    out.rows.push_back(row);
    out.raw.push_back(rng.uniform());
  }
  Eigen::VectorXd tx(pi);
  for (Eigen::Index j = 0; j < pi; ++j) {
    tx(j) = rng.normal();
    out.test_x.push_back(tx(j));
  }
  out.train = TaggedDataset(x, y, tags);
  out.test = TestPoint{tx, 1.0};
  return out;
}

// Infinite endpoints must match exactly, finite ones to rounding.
bool same_endpoint(const ExtendedReal& got, double want) {
  if (std::isinf(want)) return got == ExtendedReal::from_double(want);
  return got.is_finite() && std::abs(got.to_double() - want) <= 1e-9 * (1.0 + std::abs(want));
}

std::vector<double> range(int lo, int hi) {
  std::vector<double> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

}  // namespace

TEST_CASE("split conformal examples") {
  const auto r = range(1, 9);
  const PredictionRegion region = split_conformal(r, 0.0, unit_weights(9), 0.1);
  CHECK(region.lower() == ExtendedReal(-9.0));
  CHECK(region.upper() == ExtendedReal(9.0));
  CHECK(region.width() == 18.0);

  const PredictionRegion open = split_conformal(r, 0.0, normalize_weights(std::vector<double>(9, 0.0)), 0.1);
  CHECK(open.lower().is_neg_inf());
  CHECK(open.upper().is_pos_inf());
  CHECK(std::isinf(open.width()));

  const std::vector<double> res{3, 1, 2};
  const WeightProfile profile = exponential_weights(3, 0.5);
  const PredictionRegion weighted = split_conformal(res, 1.5, profile, 0.2);
  const auto w = oracle::normalized({0.125, 0.25, 0.5});
  const double half = oracle::scan_quantile({3, 1, 2, oracle::kInf}, w, 0.8);
  CHECK(std::isinf(half));
  CHECK(weighted.upper() == ExtendedReal::from_double(1.5 + half));
  CHECK(weighted.lower() == ExtendedReal::from_double(1.5 - half));
}

TEST_CASE("split conformal is symmetric and grows as alpha shrinks") {
  RandomStream rng(21);
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> r(n);
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng.uniform();
      raw[i] = rng.uniform();
    }
    const auto profile = normalize_weights(raw);
    const double a = 0.05 + 0.4 * rng.uniform();
    const PredictionRegion wide = split_conformal(r, 2.0, profile, a / 2);
    const PredictionRegion narrow = split_conformal(r, 2.0, profile, a);
    CHECK(narrow.width() <= wide.width());
    if (narrow.upper().is_finite()) {
      CHECK(narrow.upper().to_double() - 2.0 == doctest::Approx(2.0 - narrow.lower().to_double()));
    }
  }
}

TEST_CASE("split conformal errors") {
  const auto r = range(1, 3);
  CHECK_THROWS_AS(split_conformal(r, 0.0, unit_weights(3), 0.0), std::domain_error);
  CHECK_THROWS_AS(split_conformal(r, 0.0, unit_weights(3), 1.0), std::domain_error);
  CHECK_THROWS_AS(split_conformal(r, 0.0, unit_weights(2), 0.1), std::invalid_argument);
}

TEST_CASE("full conformal with a constant predictor") {
  const TaggedDataset train(Eigen::MatrixXd::Zero(3, 1), Eigen::Vector3d(1, 2, 4), Eigen::Vector3d(1, 2, 3));
  const TestPoint test{Eigen::VectorXd::Zero(1), 4.0};
  const Grid grid = Grid::uniform(-6, 6, 49);
  const PredictionRegion region =
      full_conformal_at(train, test, constant_algorithm(0.0), unit_weights(3), 0.25, grid, 3);
  for (double y : {-4.0, -3.9, 0.0, 2.5, 4.0}) CHECK(region.contains(y));
  for (double y : {-4.01, 4.01, 5.0}) CHECK_FALSE(region.contains(y));
  CHECK(region.lower() == ExtendedReal(-4.0));
  CHECK(region.upper() == ExtendedReal(4.0));
  CHECK(region.accepted_count() == 33);
  CHECK(region.width() == 33 * 0.25);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK((region.accepted()[g] != 0) == region.contains(grid.values()[g]));
  }
}

TEST_CASE("full conformal matches a brute-force reimplementation") {
  RandomStream rng(31);
  for (int c = 0; c < 100; ++c) {
    const std::size_t p = 1 + rng.below(2);
    const std::size_t n = p + 1 + rng.below(5 - p);
    Instance inst = random_instance(rng, n, p);
    const bool weighted = c % 2 == 1;
    const TaggedAlgorithm alg = weighted ? weighted_least_squares_algorithm() : least_squares_algorithm();
    const auto fit = oracle::least_squares_fit(weighted);
    const WeightProfile profile = normalize_weights(inst.raw);
    const double alpha = 0.1 + 0.3 * rng.uniform();
    const std::size_t k = rng.below(n + 1);
    const Grid grid = Grid::around(inst.train.y(), 101, 1.0);
    const PredictionRegion region = full_conformal_at(inst.train, inst.test, alg, profile, alpha, grid, k);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double y = grid.values()[g];
      const bool want = oracle::full_conformal_member(inst.rows, inst.test_x, 1.0, y, fit, inst.raw, alpha, k);
      REQUIRE((region.accepted()[g] != 0) == want);
    }
  }
}

TEST_CASE("fast linear path agrees with the grid path") {
  RandomStream rng(41);
  for (int c = 0; c < 60; ++c) {
    const std::size_t n = 5 + rng.below(25);
    Instance inst = random_instance(rng, n, 2);
    const TaggedAlgorithm alg = c % 3 == 0   ? least_squares_algorithm()
                                : c % 3 == 1 ? weighted_least_squares_algorithm()
                                             : linear_drift_algorithm(static_cast<double>(n + 1));
    if (c % 3 == 2) {
      for (Eigen::Index i = 0; i < inst.train.mutable_tags().size(); ++i) inst.train.mutable_tags()(i) = i + 1.0;
      inst.test.tag = static_cast<double>(n + 1);
    }
    const WeightProfile profile = exponential_weights(n, 0.95);
    const std::size_t k = rng.below(n + 1);
    const Grid grid = Grid::around(inst.train.y(), 301, 0.5);
    const PredictionRegion slow = full_conformal_at(inst.train, inst.test, alg, profile, 0.2, grid, k);
    const PredictionRegion fast = full_conformal_linear(inst.train, inst.test, alg, profile, 0.2, k);
    CHECK(fast.kind() == PredictionRegion::Kind::IntervalUnion);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      REQUIRE((slow.accepted()[g] != 0) == fast.contains(grid.values()[g]));
    }
    // Interval pieces agree with the exact membership test away from boundaries.
    for (const auto& piece : fast.pieces()) {
      if (piece.lower.is_finite() && piece.upper.is_finite()) {
        CHECK(fast.contains(0.5 * (piece.lower.to_double() + piece.upper.to_double())));
      }
    }
    FullConformalOptions opt;
    opt.fast_linear_path = true;
    const PredictionRegion via_option = full_conformal_at(inst.train, inst.test, alg, profile, 0.2, grid, k, opt);
    CHECK(via_option.width() == fast.width());
  }
}

TEST_CASE("fast path needs a linear algorithm") {
  RandomStream rng(1);
  Instance inst = random_instance(rng, 6, 1);
  CHECK_THROWS_AS(full_conformal_linear(inst.train, inst.test, autoregressive_algorithm(1), unit_weights(6), 0.1, 6),
                  std::invalid_argument);
}

TEST_CASE("full conformal is the whole line when the test mass exceeds alpha") {
  RandomStream rng(2);
  Instance inst = random_instance(rng, 4, 1);
  const WeightProfile profile = normalize_weights(std::vector<double>{0.1, 0.1, 0.1, 0.1});
  const Grid grid = Grid::around(inst.train.y(), 50);
  const PredictionRegion region =
      full_conformal_at(inst.train, inst.test, least_squares_algorithm(), profile, 0.1, grid, 4);
  CHECK(std::isinf(region.width()));
  CHECK(region.contains(1e9));
  const PredictionRegion fast =
      full_conformal_linear(inst.train, inst.test, least_squares_algorithm(), profile, 0.1, 4);
  CHECK(fast.lower().is_neg_inf());
  CHECK(fast.upper().is_pos_inf());
}

TEST_CASE("a test residual above the training quantile is rejected") {
  const TaggedDataset train(Eigen::MatrixXd::Zero(3, 1), Eigen::Vector3d(0.5, 1, 1.5), Eigen::Vector3d(1, 2, 3));
  const TestPoint test{Eigen::VectorXd::Zero(1), 4.0};
  const Grid grid = Grid::uniform(-3, 3, 7);
  const PredictionRegion region =
      full_conformal_at(train, test, constant_algorithm(0.0), unit_weights(3), 0.3, grid, 3);
  CHECK_FALSE(region.contains(10.0));
  CHECK(region.contains(1.5));
}

TEST_CASE("reduction: unit weights and least squares give the classic methods") {
  RandomStream rng(51);
  for (int c = 0; c < 40; ++c) {
    const std::size_t n = 3 + rng.below(8);
    Instance inst = random_instance(rng, n, 2);
    const double alpha = 0.05 + 0.4 * rng.uniform();
    const WeightProfile unit = unit_weights(n);
    const TaggedAlgorithm ls = least_squares_algorithm();
    const Grid grid = Grid::around(inst.train.y(), 61);
    const PredictionRegion classic_full = classic::full_conformal(inst.train, inst.test.x, ls, alpha, grid);
    const PredictionRegion classic_jack = classic::jackknife_plus(inst.train, inst.test.x, ls, alpha);
    for (std::size_t k = 0; k <= n; ++k) {
      const PredictionRegion full = full_conformal_at(inst.train, inst.test, ls, unit, alpha, grid, k);
      for (std::size_t g = 0; g < grid.size(); ++g) REQUIRE(full.accepted()[g] == classic_full.accepted()[g]);
      const PredictionRegion jack = jackknife_plus_at(inst.train, inst.test, ls, unit, alpha, k);
      CHECK(jack.lower() == classic_jack.lower());
      CHECK(jack.upper() == classic_jack.upper());
    }
    std::vector<double> r(n);
    for (auto& v : r) v = rng.uniform();
    const PredictionRegion split = split_conformal(r, 0.3, unit, alpha);
    const PredictionRegion classic_split = classic::split_conformal(r, 0.3, alpha);
    CHECK(split.lower() == classic_split.lower());
    CHECK(split.upper() == classic_split.upper());
  }
}

TEST_CASE("jackknife+ matches a brute-force reimplementation") {
  RandomStream rng(61);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 4 + rng.below(6);
    Instance inst = random_instance(rng, n, 2);
    const WeightProfile profile = normalize_weights(inst.raw);
    const double alpha = 0.05 + 0.3 * rng.uniform();
    const std::size_t k = rng.below(n + 1);
    const PredictionRegion region =
        jackknife_plus_at(inst.train, inst.test, weighted_least_squares_algorithm(), profile, alpha, k);
    const auto [lo, hi] =
        oracle::jackknife_plus(inst.rows, inst.test_x, 1.0, oracle::least_squares_fit(true), inst.raw, alpha, k);
    CHECK(same_endpoint(region.lower(), lo));
    CHECK(same_endpoint(region.upper(), hi));
  }
}

TEST_CASE("jackknife+ edge cases") {
  SUBCASE("one point of full weight") {
    const TaggedDataset train(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    const PredictionRegion r = jackknife_plus_at(train, {Eigen::VectorXd::Ones(1), 2.0}, constant_algorithm(0.0),
                                                 normalize_weights(std::vector<double>{1.0}), 0.1, 0);
    CHECK(r.lower().is_neg_inf());
    CHECK(r.upper().is_pos_inf());
  }
  SUBCASE("constant predictor") {
    const Eigen::VectorXd y = Eigen::Vector4d(1.0, -3.0, 2.0, 0.5);
    const TaggedDataset train(Eigen::MatrixXd::Zero(4, 1), y, Eigen::Vector4d(1, 2, 3, 4));
    const std::vector<double> raw{0.2, 0.9, 0.5, 1.0};
    const WeightProfile profile = normalize_weights(raw);
    const PredictionRegion r =
        jackknife_plus_at(train, {Eigen::VectorXd::Zero(1), 5.0}, constant_algorithm(0.0), profile, 0.3, 2);
    const auto w = oracle::normalized(raw);
    CHECK(r.lower().to_double() == oracle::scan_quantile({-1, -3, -2, -0.5, -oracle::kInf}, w, 0.3));
    CHECK(r.upper().to_double() == oracle::scan_quantile({1, 3, 2, 0.5, oracle::kInf}, w, 0.7));
  }
  SUBCASE("errors") {
    const TaggedDataset empty(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), Eigen::VectorXd(0));
    CHECK_THROWS_AS(jackknife_plus_at(empty, {Eigen::VectorXd::Zero(1), 1.0}, least_squares_algorithm(),
                                      unit_weights(0), 0.1, 0),
                    std::domain_error);
    RandomStream rng(3);
    Instance inst = random_instance(rng, 5, 1);
    CHECK_THROWS_AS(jackknife_plus_at(inst.train, inst.test, least_squares_algorithm(), unit_weights(5), 1.2, 0),
                    std::domain_error);
    CHECK_THROWS_AS(jackknife_plus_at(inst.train, inst.test, least_squares_algorithm(), unit_weights(4), 0.1, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("leave-one-out models follow the swap case split") {
  RandomStream rng(71);
  Instance inst = random_instance(rng, 6, 2);
  const TaggedAlgorithm wls = weighted_least_squares_algorithm();
  const Eigen::Vector2d probe(0.4, 0.1);
  // K = n+1 or K = i: plain leave-one-out.
  const FittedModel plain = fit_leave_one_out(inst.train, inst.test, wls, 6, 2);
  CHECK(fit_leave_one_out(inst.train, inst.test, wls, 2, 2).predict(probe) == plain.predict(probe));
  // K = 4, i = 2: point 4 carries the test tag.
  std::vector<std::size_t> rows{0, 1, 3, 5, 4};
  TaggedDataset manual = inst.train.select(rows);
  manual.mutable_tags()(4) = inst.test.tag;
  CHECK(fit_leave_one_out(inst.train, inst.test, wls, 4, 2).predict(probe) ==
        doctest::Approx(wls.fit(manual).predict(probe)).epsilon(1e-12));
  CHECK_THROWS_AS(fit_leave_one_out(inst.train, inst.test, wls, 7, 0), std::out_of_range);
  CHECK_THROWS_AS(fit_leave_one_out(inst.train, inst.test, wls, 0, 6), std::out_of_range);
}

TEST_CASE("random K draws use one value from the stream") {
  RandomStream rng(81);
  Instance inst = random_instance(rng, 8, 1);
  const WeightProfile profile = exponential_weights(8, 0.9);
  const Grid grid = Grid::around(inst.train.y(), 21);
  RandomStream a(5);
  RandomStream b(5);
  const std::size_t k = draw_swap_index(profile, b).index;
  const PredictionRegion drawn = full_conformal(inst.train, inst.test, weighted_least_squares_algorithm(), profile,
                                                0.2, grid, a);
  const PredictionRegion fixed = full_conformal_at(inst.train, inst.test, weighted_least_squares_algorithm(),
                                                   profile, 0.2, grid, k);
  CHECK(a.consumed() == 1);
  for (std::size_t g = 0; g < grid.size(); ++g) CHECK(drawn.accepted()[g] == fixed.accepted()[g]);
  RandomStream c(5);
  const PredictionRegion jack = jackknife_plus(inst.train, inst.test, weighted_least_squares_algorithm(), profile, 0.2, c);
  const PredictionRegion jack_fixed =
      jackknife_plus_at(inst.train, inst.test, weighted_least_squares_algorithm(), profile, 0.2, k);
  CHECK(jack.lower() == jack_fixed.lower());
  CHECK(jack.upper() == jack_fixed.upper());
}

TEST_CASE("regions shrink as alpha grows") {
  RandomStream rng(91);
  for (int c = 0; c < 20; ++c) {
    Instance inst = random_instance(rng, 12, 2);
    const WeightProfile profile = normalize_weights(inst.raw);
    const std::size_t k = rng.below(13);
    const Grid grid = Grid::around(inst.train.y(), 81);
    const TaggedAlgorithm wls = weighted_least_squares_algorithm();
    const PredictionRegion big = full_conformal_at(inst.train, inst.test, wls, profile, 0.1, grid, k);
    const PredictionRegion small = full_conformal_at(inst.train, inst.test, wls, profile, 0.3, grid, k);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (small.accepted()[g]) CHECK(big.accepted()[g]);
    }
    const PredictionRegion jb = jackknife_plus_at(inst.train, inst.test, wls, profile, 0.1, k);
    const PredictionRegion js = jackknife_plus_at(inst.train, inst.test, wls, profile, 0.3, k);
    CHECK(jb.lower() <= js.lower());
    CHECK(js.upper() <= jb.upper());
  }
}

TEST_CASE("general scores") {
  RandomStream rng(101);
  Instance inst = random_instance(rng, 10, 2);
  const WeightProfile profile = normalize_weights(inst.raw);
  const Grid grid = Grid::around(inst.train.y(), 101);

  SUBCASE("absolute residual score reduces to split conformal") {
    std::vector<double> r(10);
    for (auto& v : r) v = rng.uniform();
    const double mu = 0.7;
    const PredictionRegion split = split_conformal(r, mu, profile, 0.2);
    const PredictionRegion scores =
        split_conformal_scores(r, [mu](double y) { return std::abs(y - mu); }, profile, 0.2, grid);
    for (double y = -5.0; y <= 5.0; y += 0.01) REQUIRE(scores.contains(y) == split.contains(y));
  }
  SUBCASE("monotone score gives a half line") {
    std::vector<double> y(10);
    for (auto& v : y) v = rng.normal();
    const PredictionRegion region = split_conformal_scores(y, [](double v) { return v; }, unit_weights(10), 0.2,
                                                           Grid::uniform(-5, 5, 11));
    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[8];  // ceil(0.8 * 11) = 9th smallest
    CHECK(region.contains(cutoff));
    CHECK_FALSE(region.contains(std::nextafter(cutoff, 1e9)));
    CHECK(region.contains(-1e9));
  }
  SUBCASE("zero weights give the whole line") {
    const PredictionRegion region = split_conformal_scores(std::vector<double>(10, 1.0), [](double v) { return v; },
                                                           normalize_weights(std::vector<double>(10, 0.0)), 0.2, grid);
    CHECK(std::isinf(region.width()));
    CHECK(region.contains(1e12));
  }
  SUBCASE("absolute residual score reduces to full conformal") {
    const TaggedAlgorithm wls = weighted_least_squares_algorithm();
    for (std::size_t k : {std::size_t{0}, std::size_t{4}, std::size_t{10}}) {
      const PredictionRegion a = full_conformal_at(inst.train, inst.test, wls, profile, 0.2, grid, k);
      const PredictionRegion b =
          full_conformal_scores_at(inst.train, inst.test, absolute_residual_score(wls), profile, 0.2, grid, k);
      for (std::size_t g = 0; g < grid.size(); ++g) REQUIRE(a.accepted()[g] == b.accepted()[g]);
    }
  }
  SUBCASE("constant score accepts everything") {
    const ScoreAlgorithm constant = [](const TaggedDataset&) -> ScoreFunction {
      return [](const Eigen::Ref<const Eigen::VectorXd>&, double) { return 2.0; };
    };
    RandomStream draw(4);
    const PredictionRegion r = full_conformal_scores(inst.train, inst.test, constant, profile, 0.2, grid, draw);
    CHECK(r.accepted_count() == grid.size());
  }
  SUBCASE("score-based full conformal against a brute-force loop") {
    const TaggedAlgorithm wls = weighted_least_squares_algorithm();
    const auto fit = oracle::least_squares_fit(true);
    for (std::size_t k = 0; k <= 10; ++k) {
      const PredictionRegion r =
          full_conformal_scores_at(inst.train, inst.test, absolute_residual_score(wls), profile, 0.25, grid, k);
      for (std::size_t g = 0; g < grid.size(); g += 5) {
        const bool want =
            oracle::full_conformal_member(inst.rows, inst.test_x, 1.0, grid.values()[g], fit, inst.raw, 0.25, k);
        REQUIRE((r.accepted()[g] != 0) == want);
      }
    }
  }
}

TEST_CASE("prediction region shapes") {
  const PredictionRegion empty = PredictionRegion::interval(2.0, 1.0);
  CHECK(empty.empty());
  CHECK_FALSE(empty.contains(1.5));
  CHECK(empty.width() == 0.0);

  const PredictionRegion pieces = PredictionRegion::interval_union(
      {{ExtendedReal(0.0), ExtendedReal(1.0)}, {ExtendedReal(2.0), ExtendedReal(4.0)}},
      [](double y) { return (y >= 0 && y <= 1) || (y >= 2 && y <= 4); });
  CHECK(pieces.width() == 3.0);
  CHECK(pieces.lower() == ExtendedReal(0.0));
  CHECK(pieces.upper() == ExtendedReal(4.0));
  CHECK_FALSE(pieces.contains(1.5));

  CHECK(Grid::uniform(0, 1, 11).cell_length() == doctest::Approx(0.1));
  CHECK(Grid::uniform(3, 3, 1).cell_length() == 0.0);
  CHECK_THROWS_AS(Grid(std::vector<double>{2, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Grid::uniform(1, 0, 3), std::invalid_argument);
  const std::vector<double> ys{1.0, 3.0};
  const Grid around = Grid::around(ys, 5, 0.5);
  CHECK(around.values().front() == 0.0);
  CHECK(around.values().back() == 4.0);
  CHECK_THROWS_AS(PredictionRegion::grid_set(Grid::uniform(0, 1, 3), {1, 0}, nullptr), std::invalid_argument);
}

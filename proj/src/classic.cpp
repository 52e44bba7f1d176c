// Unweighted split conformal, full conformal and jackknife+ in their original
// order-statistic form.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nexcp/conformal.hpp"

namespace nexcp::classic {

namespace {

// ceil(level * m), with the same slack the weighted quantile grants its
// cumulative masses (masses of 1/m each).
std::size_t ceil_rank(double level, std::size_t m) {
  const double scaled = level * static_cast<double>(m);
  return static_cast<std::size_t>(std::ceil(scaled - kMassTolerance * static_cast<double>(m)));
}

// k-th smallest (1-based) of `values`.
double order_statistic(std::vector<double> values, std::size_t k) {
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

}  // namespace

PredictionRegion split_conformal(std::span<const double> residuals, double point_prediction, double alpha) {
  check_alpha(alpha);
  const std::size_t n = residuals.size();
  const std::size_t k = ceil_rank(1.0 - alpha, n + 1);
  if (k > n) return PredictionRegion::interval(ExtendedReal::neg_inf(), ExtendedReal::pos_inf());
  const double half = order_statistic({residuals.begin(), residuals.end()}, k);
  return PredictionRegion::interval(point_prediction - half, point_prediction + half);
}

PredictionRegion full_conformal(const TaggedDataset& train, const Eigen::VectorXd& test_x,
                                const TaggedAlgorithm& alg, double alpha, const Grid& grid) {
  check_alpha(alpha);
  if (grid.size() == 0) throw std::invalid_argument("grid must be nonempty");
  const std::size_t n = train.size();
  const std::size_t k = ceil_rank(1.0 - alpha, n + 1);

  auto membership = [train, test_x, alg, k, n](double y) {
    const FittedModel model = alg.fit(train.with_point({test_x, y, 0.0}));
    std::vector<double> r(n + 1);
    const Eigen::VectorXd fitted = model.predict_rows(train.x());
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = std::abs(train.y()(static_cast<Eigen::Index>(i)) - fitted(static_cast<Eigen::Index>(i)));
    }
    r[n] = std::abs(y - model.predict(test_x));
    const double test = r[n];
    return test <= order_statistic(std::move(r), k);
  };
  std::vector<char> mask(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) mask[g] = membership(grid.values()[g]) ? 1 : 0;
  // k <= n + 1 always, and the test residual is one of the n + 1 values, so
  // the set is the whole line only when k = n + 1 and ties do not matter.
  return PredictionRegion::grid_set(grid, std::move(mask), membership, k > n);
}

PredictionRegion jackknife_plus(const TaggedDataset& train, const Eigen::VectorXd& test_x,
                                const TaggedAlgorithm& alg, double alpha) {
  check_alpha(alpha);
  const std::size_t n = train.size();
  if (n == 0) throw std::domain_error("jackknife+ needs at least one training point");
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) rows.push_back(j);
    }
    const FittedModel model = alg.fit(train.select(rows));
    const auto row = static_cast<Eigen::Index>(i);
    const double loo = std::abs(train.y()(row) - model.predict(train.x().row(row).transpose()));
    const double at_test = model.predict(test_x);
    lo[i] = at_test - loo;
    hi[i] = at_test + loo;
  }
  // Q_alpha with a -inf atom of mass 1/(n+1): the (ceil(alpha (n+1)) - 1)-th
  // smallest, or -inf when that rank is zero.
  const std::size_t k_lo = ceil_rank(alpha, n + 1);
  const std::size_t k_hi = ceil_rank(1.0 - alpha, n + 1);
  const ExtendedReal lower =
      k_lo <= 1 ? ExtendedReal::neg_inf() : ExtendedReal(order_statistic(lo, k_lo - 1));
  const ExtendedReal upper = k_hi > n ? ExtendedReal::pos_inf() : ExtendedReal(order_statistic(hi, k_hi));
  return PredictionRegion::interval(lower, upper);
}

}  // namespace nexcp::classic

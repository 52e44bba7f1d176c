#include "nexcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace nexcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grid(const Grid& grid) {
  if (grid.size() == 0) throw std::invalid_argument("grid must be nonempty");
}

// Every y is accepted when the training mass alone cannot reach 1 - alpha.
bool trivially_unbounded(const WeightProfile& profile, double alpha) {
  return 1.0 - profile.test_mass() < (1.0 - alpha) - kMassTolerance;
}

bool accept_residuals(std::span<const double> residuals, const WeightProfile& profile, double alpha) {
  const std::size_t n = profile.n();
  const double test = residuals[n];
  const ExtendedReal q =
      weighted_quantile_with_tail(residuals.first(n), profile, ExtendedReal(test), 1.0 - alpha);
  return ExtendedReal(test) <= q;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<double> values) : values_(std::move(values)) {
  if (!std::is_sorted(values_.begin(), values_.end())) throw std::invalid_argument("grid must be sorted");
}

Grid Grid::uniform(double lo, double hi, std::size_t size) {
  if (size == 0) throw std::invalid_argument("grid size must be positive");
  if (!(lo <= hi)) throw std::invalid_argument("grid bounds out of order");
  std::vector<double> v(size);
  if (size == 1) {
    v[0] = lo;
  } else {
    const double step = (hi - lo) / static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i) v[i] = lo + step * static_cast<double>(i);
    v.back() = hi;
  }
  return Grid(std::move(v));
}

Grid Grid::around(std::span<const double> responses, std::size_t size, double padding) {
  if (responses.empty()) throw std::invalid_argument("cannot build a grid around no responses");
  const auto [lo, hi] = std::minmax_element(responses.begin(), responses.end());
  const double range = *hi - *lo;
  return uniform(*lo - padding * range, *hi + padding * range, size);
}

Grid Grid::around(const Eigen::VectorXd& responses, std::size_t size, double padding) {
  return around(std::span<const double>(responses.data(), static_cast<std::size_t>(responses.size())),
                size, padding);
}

double Grid::cell_length() const {
  if (values_.size() < 2) return 0.0;
  return (values_.back() - values_.front()) / static_cast<double>(values_.size() - 1);
}

// ---------------------------------------------------------------------------
// PredictionRegion

PredictionRegion PredictionRegion::interval(ExtendedReal lower, ExtendedReal upper) {
  PredictionRegion r;
  r.kind_ = Kind::Interval;
  if (lower <= upper) r.pieces_.push_back({lower, upper});
  return r;
}

PredictionRegion PredictionRegion::interval_union(std::vector<Interval> pieces, Membership exact) {
  PredictionRegion r;
  r.kind_ = Kind::IntervalUnion;
  r.pieces_ = std::move(pieces);
  r.exact_ = std::move(exact);
  return r;
}

PredictionRegion PredictionRegion::grid_set(Grid grid, std::vector<char> accepted, Membership exact,
                                            bool unbounded) {
  if (accepted.size() != grid.size()) throw std::invalid_argument("mask length must match grid");
  PredictionRegion r;
  r.kind_ = Kind::GridSet;
  r.grid_ = std::move(grid);
  r.accepted_ = std::move(accepted);
  r.exact_ = std::move(exact);
  r.unbounded_ = unbounded;
  return r;
}

bool PredictionRegion::contains(double y) const {
  if (kind_ != Kind::Interval && exact_) return exact_(y);
  const ExtendedReal v(y);
  return std::any_of(pieces_.begin(), pieces_.end(),
                     [&](const Interval& p) { return p.lower <= v && v <= p.upper; });
}

std::size_t PredictionRegion::accepted_count() const {
  return static_cast<std::size_t>(std::count(accepted_.begin(), accepted_.end(), char{1}));
}

double PredictionRegion::width() const {
  if (kind_ == Kind::GridSet) {
    if (unbounded_) return kInf;
    return static_cast<double>(accepted_count()) * grid_.cell_length();
  }
  double total = 0.0;
  for (const auto& p : pieces_) {
    if (!p.lower.is_finite() || !p.upper.is_finite()) return kInf;
    total += p.upper.to_double() - p.lower.to_double();
  }
  return total;
}

bool PredictionRegion::empty() const {
  if (kind_ == Kind::GridSet) return !unbounded_ && accepted_count() == 0;
  return pieces_.empty();
}

ExtendedReal PredictionRegion::lower() const {
  if (kind_ == Kind::GridSet) {
    if (unbounded_) return ExtendedReal::neg_inf();
    for (std::size_t i = 0; i < accepted_.size(); ++i) {
      if (accepted_[i]) return grid_.values()[i];
    }
    return ExtendedReal::pos_inf();
  }
  return pieces_.empty() ? ExtendedReal::pos_inf() : pieces_.front().lower;
}

ExtendedReal PredictionRegion::upper() const {
  if (kind_ == Kind::GridSet) {
    if (unbounded_) return ExtendedReal::pos_inf();
    for (std::size_t i = accepted_.size(); i-- > 0;) {
      if (accepted_[i]) return grid_.values()[i];
    }
    return ExtendedReal::neg_inf();
  }
  return pieces_.empty() ? ExtendedReal::neg_inf() : pieces_.back().upper;
}

// ---------------------------------------------------------------------------
// Methods

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error(fmt::format("alpha {} outside (0,1)", alpha));
}

PredictionRegion split_conformal(std::span<const double> residuals, double point_prediction,
                                 const WeightProfile& profile, double alpha) {
  check_alpha(alpha);
  if (residuals.size() != profile.n()) throw std::invalid_argument("residual count does not match weights");
  const ExtendedReal half =
      weighted_quantile_with_tail(residuals, profile, ExtendedReal::pos_inf(), 1.0 - alpha);
  if (half.is_pos_inf()) return PredictionRegion::interval(ExtendedReal::neg_inf(), ExtendedReal::pos_inf());
  return PredictionRegion::interval(point_prediction - half.to_double(), point_prediction + half.to_double());
}

FittedModel fit_swapped(const TaggedDataset& train, const TestPoint& test, double y,
                        const TaggedAlgorithm& alg, std::size_t swap_index) {
  const TaggedDataset augmented = train.with_point({test.x, y, test.tag});
  if (swap_index > train.size()) throw std::out_of_range("swap index out of range");
  if (alg.symmetric || swap_index == train.size()) return alg.fit(augmented);
  return alg.fit(swap_points(augmented, swap_index));
}

ResidualVector full_conformal_residuals(const TaggedDataset& train, const TestPoint& test, double y,
                                        const TaggedAlgorithm& alg, std::size_t swap_index) {
  const FittedModel model = fit_swapped(train, test, y, alg, swap_index);
  const std::size_t n = train.size();
  ResidualVector r;
  r.values.resize(n + 1);
  const Eigen::VectorXd fitted = model.predict_rows(train.x());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    r.values[i] = std::abs(train.y()(row) - fitted(row));
  }
  r.values[n] = std::abs(y - model.predict(test.x));
  r.provenance = fmt::format("full conformal, {}, K={}", alg.name, swap_index + 1);
  return r;
}

PredictionRegion full_conformal_at(const TaggedDataset& train, const TestPoint& test,
                                   const TaggedAlgorithm& alg, const WeightProfile& profile,
                                   double alpha, const Grid& grid, std::size_t swap_index,
                                   const FullConformalOptions& options) {
  check_alpha(alpha);
  if (train.size() != profile.n()) throw std::invalid_argument("training size does not match weights");
  if (options.fast_linear_path) {
    return full_conformal_linear(train, test, alg, profile, alpha, swap_index);
  }
  check_grid(grid);

  // Captured by value so the region outlives the caller's data.
  auto membership = [train, test, alg, profile, alpha, swap_index](double y) {
    const ResidualVector r = full_conformal_residuals(train, test, y, alg, swap_index);
    return accept_residuals(r.values, profile, alpha);
  };
  std::vector<char> mask(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) mask[g] = membership(grid.values()[g]) ? 1 : 0;
  return PredictionRegion::grid_set(grid, std::move(mask), membership, trivially_unbounded(profile, alpha));
}

PredictionRegion full_conformal(const TaggedDataset& train, const TestPoint& test,
                                const TaggedAlgorithm& alg, const WeightProfile& profile,
                                double alpha, const Grid& grid, RandomStream& rng,
                                const FullConformalOptions& options) {
  check_alpha(alpha);
  const SwapDraw k = draw_swap_index(profile, rng);
  return full_conformal_at(train, test, alg, profile, alpha, grid, k.index, options);
}

FittedModel fit_leave_one_out(const TaggedDataset& train, const TestPoint& test,
                              const TaggedAlgorithm& alg, std::size_t swap_index, std::size_t left_out) {
  const std::size_t n = train.size();
  if (left_out >= n || swap_index > n) throw std::out_of_range("leave-one-out index out of range");
  if (alg.symmetric || swap_index == n || swap_index == left_out) {
    std::vector<std::size_t> rows;
    rows.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != left_out) rows.push_back(j);
    }
    return alg.fit(train.select(rows));
  }
  // Positions 1..n+1 hold pi_K(j); drop the positions holding point i and the
  // test point. Point K lands at the last position and inherits t_{n+1}.
  const TaggedDataset swapped = swap_points(train.with_point({test.x, 0.0, test.tag}), swap_index);
  std::vector<std::size_t> rows;
  rows.reserve(n - 1);
  for (std::size_t pos = 0; pos <= n; ++pos) {
    const std::size_t point = pos == swap_index ? n : (pos == n ? swap_index : pos);
    if (point != left_out && point != n) rows.push_back(pos);
  }
  return alg.fit(swapped.select(rows));
}

PredictionRegion jackknife_plus_at(const TaggedDataset& train, const TestPoint& test,
                                   const TaggedAlgorithm& alg, const WeightProfile& profile,
                                   double alpha, std::size_t swap_index) {
  check_alpha(alpha);
  const std::size_t n = train.size();
  if (n == 0) throw std::domain_error("jackknife+ needs at least one training point");
  if (n != profile.n()) throw std::invalid_argument("training size does not match weights");
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FittedModel model = fit_leave_one_out(train, test, alg, swap_index, i);
    const auto row = static_cast<Eigen::Index>(i);
    const double loo = std::abs(train.y()(row) - model.predict(train.x().row(row).transpose()));
    const double at_test = model.predict(test.x);
    lo[i] = at_test - loo;
    hi[i] = at_test + loo;
  }
  const ExtendedReal lower = weighted_quantile_with_tail(lo, profile, ExtendedReal::neg_inf(), alpha);
  const ExtendedReal upper = weighted_quantile_with_tail(hi, profile, ExtendedReal::pos_inf(), 1.0 - alpha);
  return PredictionRegion::interval(lower, upper);
}

PredictionRegion jackknife_plus(const TaggedDataset& train, const TestPoint& test,
                                const TaggedAlgorithm& alg, const WeightProfile& profile,
                                double alpha, RandomStream& rng) {
  check_alpha(alpha);
  const SwapDraw k = draw_swap_index(profile, rng);
  return jackknife_plus_at(train, test, alg, profile, alpha, k.index);
}

PredictionRegion split_conformal_scores(std::span<const double> scores,
                                        const std::function<double(double)>& score_at,
                                        const WeightProfile& profile, double alpha, const Grid& grid) {
  check_alpha(alpha);
  check_grid(grid);
  if (scores.size() != profile.n()) throw std::invalid_argument("score count does not match weights");
  const ExtendedReal threshold =
      weighted_quantile_with_tail(scores, profile, ExtendedReal::pos_inf(), 1.0 - alpha);
  auto membership = [score_at, threshold](double y) { return ExtendedReal(score_at(y)) <= threshold; };
  std::vector<char> mask(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) mask[g] = membership(grid.values()[g]) ? 1 : 0;
  return PredictionRegion::grid_set(grid, std::move(mask), membership, threshold.is_pos_inf());
}

PredictionRegion full_conformal_scores_at(const TaggedDataset& train, const TestPoint& test,
                                          const ScoreAlgorithm& score_alg, const WeightProfile& profile,
                                          double alpha, const Grid& grid, std::size_t swap_index) {
  check_alpha(alpha);
  check_grid(grid);
  const std::size_t n = train.size();
  if (n != profile.n()) throw std::invalid_argument("training size does not match weights");
  if (swap_index > n) throw std::out_of_range("swap index out of range");

  auto membership = [train, test, score_alg, profile, alpha, swap_index, n](double y) {
    const TaggedDataset augmented = train.with_point({test.x, y, test.tag});
    const ScoreFunction score =
        score_alg(swap_index == n ? augmented : swap_points(augmented, swap_index));
    std::vector<double> s(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      s[i] = score(train.x().row(row).transpose(), train.y()(row));
    }
    s[n] = score(test.x, y);
    return accept_residuals(s, profile, alpha);
  };
  std::vector<char> mask(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) mask[g] = membership(grid.values()[g]) ? 1 : 0;
  return PredictionRegion::grid_set(grid, std::move(mask), membership, trivially_unbounded(profile, alpha));
}

PredictionRegion full_conformal_scores(const TaggedDataset& train, const TestPoint& test,
                                       const ScoreAlgorithm& score_alg, const WeightProfile& profile,
                                       double alpha, const Grid& grid, RandomStream& rng) {
  check_alpha(alpha);
  const SwapDraw k = draw_swap_index(profile, rng);
  return full_conformal_scores_at(train, test, score_alg, profile, alpha, grid, k.index);
}

ScoreAlgorithm absolute_residual_score(TaggedAlgorithm alg) {
  return [alg = std::move(alg)](const TaggedDataset& data) -> ScoreFunction {
    auto model = std::make_shared<FittedModel>(alg.fit(data));
    return [model](const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
      return std::abs(y - model->predict(x));
    };
  };
}

}  // namespace nexcp

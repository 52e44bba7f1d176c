#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nexcp/random.hpp"
#include "nexcp/regression.hpp"
#include "nexcp/weights.hpp"

namespace nexcp {

struct Interval {
  ExtendedReal lower;
  ExtendedReal upper;
};

/// Candidate responses for full conformal, equally spaced and ascending.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<double> values);
  static Grid uniform(double lo, double hi, std::size_t size);
  /// [min y - padding * range, max y + padding * range] of the responses.
  static Grid around(std::span<const double> responses, std::size_t size = 1000, double padding = 0.5);
  static Grid around(const Eigen::VectorXd& responses, std::size_t size = 1000, double padding = 0.5);

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  /// Spacing between consecutive candidates (0 for a single candidate).
  [[nodiscard]] double cell_length() const;

 private:
  std::vector<double> values_;
};

/// A prediction set C_n(X_{n+1}).
///
/// Three shapes: a closed interval (split conformal, jackknife+), a union of
/// intervals computed exactly (full conformal fast path), or a membership
/// mask over a grid (full conformal). Every region answers `contains(y)`
/// exactly at any real y, independent of any grid; `width()` is the total
/// Lebesgue measure (grid measure for grid sets) and `lower()`/`upper()`
/// give the hull.
class PredictionRegion {
 public:
  enum class Kind { Interval, IntervalUnion, GridSet };
  using Membership = std::function<bool(double)>;

  /// An interval with lower > upper is empty.
  static PredictionRegion interval(ExtendedReal lower, ExtendedReal upper);
  static PredictionRegion interval_union(std::vector<Interval> pieces, Membership exact);
  /// `unbounded` marks sets known to be the whole real line.
  static PredictionRegion grid_set(Grid grid, std::vector<char> accepted, Membership exact,
                                   bool unbounded = false);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] bool contains(double y) const;
  [[nodiscard]] double width() const;
  [[nodiscard]] ExtendedReal lower() const;
  [[nodiscard]] ExtendedReal upper() const;
  [[nodiscard]] bool empty() const;

  [[nodiscard]] std::span<const Interval> pieces() const { return pieces_; }
  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] std::span<const char> accepted() const { return accepted_; }
  [[nodiscard]] std::size_t accepted_count() const;

 private:
  Kind kind_ = Kind::Interval;
  std::vector<Interval> pieces_;
  Grid grid_;
  std::vector<char> accepted_;
  Membership exact_;
  bool unbounded_ = false;
};

/// The test feature vector and the tag t_{n+1} it carries before any swap.
struct TestPoint {
  Eigen::VectorXd x;
  double tag = 1.0;
};

/// Residuals R_1..R_{n+1} indexed by original data point (the test point
/// last) plus a note on how they were produced.
struct ResidualVector {
  std::vector<double> values;
  std::string provenance;
};

/// Nonconformity score S(x, y).
using ScoreFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&, double)>;
/// Fits a score function on tagged data (general-score full conformal).
using ScoreAlgorithm = std::function<ScoreFunction(const TaggedDataset&)>;

struct FullConformalOptions {
  /// Exact membership boundaries from affine residuals; needs an algorithm
  /// with `linear_in_response`.
  bool fast_linear_path = false;
};

/// Throws std::domain_error unless 0 < alpha < 1.
void check_alpha(double alpha);

/// mu(X_{n+1}) +/- Q_{1-alpha}(sum_i w~_i delta_{R_i} + w~_{n+1} delta_{+inf}).
PredictionRegion split_conformal(std::span<const double> residuals, double point_prediction,
                                 const WeightProfile& profile, double alpha);

/// Model mu^{y,K} fitted on the training set plus (x_{n+1}, y) after swapping
/// positions K and n+1; symmetric algorithms skip the (no-op) swap.
FittedModel fit_swapped(const TaggedDataset& train, const TestPoint& test, double y,
                        const TaggedAlgorithm& alg, std::size_t swap_index);

/// R^{y,K}: residuals of mu^{y,K} at every original point.
ResidualVector full_conformal_residuals(const TaggedDataset& train, const TestPoint& test, double y,
                                        const TaggedAlgorithm& alg, std::size_t swap_index);

/// Non-exchangeable full conformal: draws K once from `rng`, then accepts y iff
/// R^{y,K}_{n+1} <= Q_{1-alpha}(sum_{i<=n+1} w~_i delta_{R^{y,K}_i}).
PredictionRegion full_conformal(const TaggedDataset& train, const TestPoint& test,
                                const TaggedAlgorithm& alg, const WeightProfile& profile,
                                double alpha, const Grid& grid, RandomStream& rng,
                                const FullConformalOptions& options = {});

/// As above with a fixed swap index (0-based, n = identity).
PredictionRegion full_conformal_at(const TaggedDataset& train, const TestPoint& test,
                                   const TaggedAlgorithm& alg, const WeightProfile& profile,
                                   double alpha, const Grid& grid, std::size_t swap_index,
                                   const FullConformalOptions& options = {});

/// Exact fast path for linear smoothers. Fitted values are affine in the
/// hypothesized response, so each comparison R_i(y) < R_{n+1}(y) flips at
/// most twice; a sweep over those breakpoints yields the accepted pieces.
/// Throws std::invalid_argument if `alg.linear_in_response` is false.
PredictionRegion full_conformal_linear(const TaggedDataset& train, const TestPoint& test,
                                       const TaggedAlgorithm& alg, const WeightProfile& profile,
                                       double alpha, std::size_t swap_index);

/// Leave-one-out model mu^K_{-i} (i 0-based, i < n).
FittedModel fit_leave_one_out(const TaggedDataset& train, const TestPoint& test,
                              const TaggedAlgorithm& alg, std::size_t swap_index, std::size_t left_out);

/// Non-exchangeable jackknife+ interval, drawing K once from `rng`.
PredictionRegion jackknife_plus(const TaggedDataset& train, const TestPoint& test,
                                const TaggedAlgorithm& alg, const WeightProfile& profile,
                                double alpha, RandomStream& rng);

PredictionRegion jackknife_plus_at(const TaggedDataset& train, const TestPoint& test,
                                   const TaggedAlgorithm& alg, const WeightProfile& profile,
                                   double alpha, std::size_t swap_index);

/// {y : S(x_{n+1}, y) <= Q_{1-alpha}(sum_i w~_i delta_{S_i} + w~_{n+1} delta_{+inf})}.
PredictionRegion split_conformal_scores(std::span<const double> scores,
                                        const std::function<double(double)>& score_at,
                                        const WeightProfile& profile, double alpha, const Grid& grid);

PredictionRegion full_conformal_scores(const TaggedDataset& train, const TestPoint& test,
                                       const ScoreAlgorithm& score_alg, const WeightProfile& profile,
                                       double alpha, const Grid& grid, RandomStream& rng);

PredictionRegion full_conformal_scores_at(const TaggedDataset& train, const TestPoint& test,
                                          const ScoreAlgorithm& score_alg, const WeightProfile& profile,
                                          double alpha, const Grid& grid, std::size_t swap_index);

/// |y - mu(x)| with mu fitted by `alg`; reduces the general-score methods to
/// the residual ones.
ScoreAlgorithm absolute_residual_score(TaggedAlgorithm alg);

/// The original unweighted methods, written with order statistics and
/// without tags or swaps. Reference implementations for the reductions.
namespace classic {

PredictionRegion split_conformal(std::span<const double> residuals, double point_prediction, double alpha);

PredictionRegion full_conformal(const TaggedDataset& train, const Eigen::VectorXd& test_x,
                                const TaggedAlgorithm& alg, double alpha, const Grid& grid);

PredictionRegion jackknife_plus(const TaggedDataset& train, const Eigen::VectorXd& test_x,
                                const TaggedAlgorithm& alg, double alpha);

}  // namespace classic

}  // namespace nexcp

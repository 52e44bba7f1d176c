#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nexcp {

/// One observation (X_i, Y_i, t_i).
struct TaggedPoint {
  Eigen::VectorXd x;
  double y = 0.0;
  double tag = 0.0;
};

/// Ordered tagged data stored column-wise: row i of `x` pairs with y(i), tag(i).
class TaggedDataset {
 public:
  TaggedDataset() = default;
  TaggedDataset(Eigen::MatrixXd x, Eigen::VectorXd y, Eigen::VectorXd tags);
  explicit TaggedDataset(const std::vector<TaggedPoint>& points);

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(y_.size()); }
  [[nodiscard]] bool empty() const { return size() == 0; }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }

  [[nodiscard]] const Eigen::MatrixXd& x() const { return x_; }
  [[nodiscard]] const Eigen::VectorXd& y() const { return y_; }
  [[nodiscard]] const Eigen::VectorXd& tags() const { return tags_; }
  Eigen::VectorXd& mutable_y() { return y_; }
  Eigen::VectorXd& mutable_tags() { return tags_; }

  [[nodiscard]] TaggedPoint point(std::size_t i) const;
  /// Copy with `p` appended at the end.
  [[nodiscard]] TaggedDataset with_point(const TaggedPoint& p) const;
  /// Rows selected by position, in the given order.
  [[nodiscard]] TaggedDataset select(const std::vector<std::size_t>& rows) const;

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd tags_;
};

/// A fitted regression function. Every built-in algorithm produces the affine
/// form x^T coef + offset; `from_function` wraps anything else.
class FittedModel {
 public:
  using Function = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

  static FittedModel linear(Eigen::VectorXd coef, double offset = 0.0, bool rank_deficient = false);
  static FittedModel constant(double value, std::size_t dim);
  static FittedModel from_function(Function f);

  [[nodiscard]] double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Predictions for every row of `x`.
  [[nodiscard]] Eigen::VectorXd predict_rows(const Eigen::MatrixXd& x) const;

  [[nodiscard]] bool is_linear() const { return !function_; }
  [[nodiscard]] const Eigen::VectorXd& coef() const { return coef_; }
  [[nodiscard]] double offset() const { return offset_; }
  /// Set when the design was rank deficient and the minimal-norm solution was used.
  [[nodiscard]] bool rank_deficient() const { return rank_deficient_; }

 private:
  Eigen::VectorXd coef_;
  double offset_ = 0.0;
  bool rank_deficient_ = false;
  Function function_;
};

/// A regression procedure acting on tagged data.
struct TaggedAlgorithm {
  std::string name;
  std::function<FittedModel(const TaggedDataset&)> fit;
  /// True iff tags and point order are ignored.
  bool symmetric = false;
  /// True iff fitted values are affine in the response vector (linear
  /// smoothers), which enables the exact full-conformal fast path.
  bool linear_in_response = false;
};

/// Minimal-norm solution of min sum_i w_i (b_i - a_i^T beta)^2 through a
/// Householder QR followed by an SVD of R. Singular values below
/// kRankTolerance times the largest are treated as zero.
struct LeastSquaresSolution {
  Eigen::VectorXd coef;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

inline constexpr double kRankTolerance = 1e-10;

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs,
                                         const Eigen::VectorXd* weights = nullptr);

FittedModel fit_least_squares(const TaggedDataset& data);
/// Tags are the regression weights; throws std::domain_error if any tag is
/// negative or all are zero.
FittedModel fit_weighted_least_squares(const TaggedDataset& data);
/// y ~ x^T beta + gamma * tag. Predicts at `prediction_tag`, defaulting to
/// (max training tag) + 1.
FittedModel fit_linear_drift(const TaggedDataset& data, std::optional<double> prediction_tag = {});
/// y_i ~ x_i^T beta + (y_{i-1}, ..., y_{i-k})^T gamma over rows i > k in
/// tag order; the trailing k responses are frozen into the model.
FittedModel fit_autoregressive(const TaggedDataset& data, std::size_t lags);

TaggedAlgorithm least_squares_algorithm();
TaggedAlgorithm weighted_least_squares_algorithm();
TaggedAlgorithm linear_drift_algorithm(std::optional<double> prediction_tag = {});
TaggedAlgorithm autoregressive_algorithm(std::size_t lags);
/// mu(x) = value regardless of the data (symmetric, trivially linear).
TaggedAlgorithm constant_algorithm(double value);

/// Z^k: exchange the (x, y) pairs at positions k and n (0-based; the last
/// position holds the test point) while tags stay with positions.
/// k == size()-1 is the identity. Throws std::out_of_range otherwise.
TaggedDataset swap_points(const TaggedDataset& data, std::size_t k);

}  // namespace nexcp

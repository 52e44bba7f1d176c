#include "nexcp/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace nexcp {

TaggedDataset::TaggedDataset(Eigen::MatrixXd x, Eigen::VectorXd y, Eigen::VectorXd tags)
    : x_(std::move(x)), y_(std::move(y)), tags_(std::move(tags)) {
  if (x_.rows() != y_.size() || y_.size() != tags_.size()) {
    throw std::invalid_argument("dataset columns have inconsistent lengths");
  }
  for (Eigen::Index i = 0; i < tags_.size(); ++i) {
    if (!std::isfinite(tags_(i))) throw std::invalid_argument("tags must be finite");
  }
}

TaggedDataset::TaggedDataset(const std::vector<TaggedPoint>& points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::Index p = points.empty() ? 0 : points.front().x.size();
  x_.resize(n, p);
  y_.resize(n);
  tags_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = points[static_cast<std::size_t>(i)];
    if (pt.x.size() != p) throw std::invalid_argument("inconsistent feature dimension");
    if (!std::isfinite(pt.tag)) throw std::invalid_argument("tags must be finite");
    x_.row(i) = pt.x.transpose();
    y_(i) = pt.y;
    tags_(i) = pt.tag;
  }
}

TaggedPoint TaggedDataset::point(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return {x_.row(r).transpose(), y_(r), tags_(r)};
}

TaggedDataset TaggedDataset::with_point(const TaggedPoint& p) const {
  if (!empty() && static_cast<std::size_t>(p.x.size()) != dim()) {
    throw std::invalid_argument("inconsistent feature dimension");
  }
  const Eigen::Index n = x_.rows();
  Eigen::MatrixXd x(n + 1, p.x.size());
  x.topRows(n) = x_;
  x.row(n) = p.x.transpose();
  Eigen::VectorXd y(n + 1);
  y.head(n) = y_;
  y(n) = p.y;
  Eigen::VectorXd t(n + 1);
  t.head(n) = tags_;
  t(n) = p.tag;
  return {std::move(x), std::move(y), std::move(t)};
}

TaggedDataset TaggedDataset::select(const std::vector<std::size_t>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(m, x_.cols());
  Eigen::VectorXd y(m);
  Eigen::VectorXd t(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    x.row(i) = x_.row(r);
    y(i) = y_(r);
    t(i) = tags_(r);
  }
  return {std::move(x), std::move(y), std::move(t)};
}

FittedModel FittedModel::linear(Eigen::VectorXd coef, double offset, bool rank_deficient) {
  FittedModel m;
  m.coef_ = std::move(coef);
  m.offset_ = offset;
  m.rank_deficient_ = rank_deficient;
  return m;
}

FittedModel FittedModel::constant(double value, std::size_t dim) {
  return linear(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), value);
}

FittedModel FittedModel::from_function(Function f) {
  FittedModel m;
  m.function_ = std::move(f);
  return m;
}

double FittedModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (function_) return function_(x);
  if (x.size() != coef_.size()) throw std::invalid_argument("feature dimension mismatch");
  return x.dot(coef_) + offset_;
}

Eigen::VectorXd FittedModel::predict_rows(const Eigen::MatrixXd& x) const {
  if (function_) {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = function_(x.row(i).transpose());
    return out;
  }
  if (x.cols() != coef_.size()) throw std::invalid_argument("feature dimension mismatch");
  return (x * coef_).array() + offset_;
}

namespace {

LeastSquaresSolution solve_unweighted(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = a.cols();
  LeastSquaresSolution out;
  if (p == 0) {
    out.coef = Eigen::VectorXd(0);
    return out;
  }
  Eigen::MatrixXd r;
  Eigen::VectorXd qtb;
  if (n > p) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    qtb = (qr.householderQ().adjoint() * b).head(p);
  } else {
    r = a;
    qtb = b;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankTolerance);
  out.coef = svd.solve(qtb);
  out.rank = svd.rank();
  out.rank_deficient = out.rank < p;
  return out;
}

}  // namespace

LeastSquaresSolution solve_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs,
                                         const Eigen::VectorXd* weights) {
  if (design.rows() != rhs.size()) throw std::invalid_argument("design/response size mismatch");
  if (weights == nullptr) return solve_unweighted(design, rhs);
  if (weights->size() != rhs.size()) throw std::invalid_argument("weight/response size mismatch");

  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < weights->size(); ++i) {
    const double w = (*weights)(i);
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::domain_error("regression weights must be >= 0");
    if (w > 0.0) ++kept;
  }
  Eigen::MatrixXd a(kept, design.cols());
  Eigen::VectorXd b(kept);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < weights->size(); ++i) {
    const double w = (*weights)(i);
    if (w <= 0.0) continue;
    const double s = std::sqrt(w);
    a.row(row) = s * design.row(i);
    b(row) = s * rhs(i);
    ++row;
  }
  return solve_unweighted(a, b);
}

FittedModel fit_least_squares(const TaggedDataset& data) {
  if (data.empty()) throw std::domain_error("least squares needs at least one point");
  auto sol = solve_least_squares(data.x(), data.y());
  return FittedModel::linear(std::move(sol.coef), 0.0, sol.rank_deficient);
}

FittedModel fit_weighted_least_squares(const TaggedDataset& data) {
  if (data.empty()) throw std::domain_error("weighted least squares needs at least one point");
  if ((data.tags().array() < 0.0).any()) throw std::domain_error("tags must be nonnegative");
  if (!(data.tags().array() > 0.0).any()) throw std::domain_error("all tags are zero");
  auto sol = solve_least_squares(data.x(), data.y(), &data.tags());
  return FittedModel::linear(std::move(sol.coef), 0.0, sol.rank_deficient);
}

FittedModel fit_linear_drift(const TaggedDataset& data, std::optional<double> prediction_tag) {
  if (data.empty()) throw std::domain_error("linear drift needs at least one point");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = static_cast<Eigen::Index>(data.dim());
  Eigen::MatrixXd design(n, p + 1);
  design.leftCols(p) = data.x();
  design.col(p) = data.tags();
  auto sol = solve_least_squares(design, data.y());
  const double at = prediction_tag.value_or(data.tags().maxCoeff() + 1.0);
  Eigen::VectorXd beta = sol.coef.head(p);
  return FittedModel::linear(std::move(beta), sol.coef(p) * at, sol.rank_deficient);
}

FittedModel fit_autoregressive(const TaggedDataset& data, std::size_t lags) {
  const std::size_t n = data.size();
  if (n <= lags) {
    throw std::domain_error(fmt::format("autoregression with {} lags needs more than {} points", lags, lags));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.tags()(a) < data.tags()(b); });

  const auto p = static_cast<Eigen::Index>(data.dim());
  const auto k = static_cast<Eigen::Index>(lags);
  const auto rows = static_cast<Eigen::Index>(n - lags);
  Eigen::MatrixXd design(rows, p + k);
  Eigen::VectorXd response(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t pos = static_cast<std::size_t>(r) + lags;
    const auto row = static_cast<Eigen::Index>(order[pos]);
    design.row(r).head(p) = data.x().row(row);
    for (Eigen::Index j = 0; j < k; ++j) {
      design(r, p + j) = data.y()(static_cast<Eigen::Index>(order[pos - 1 - static_cast<std::size_t>(j)]));
    }
    response(r) = data.y()(row);
  }
  auto sol = solve_least_squares(design, response);
  double offset = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    offset += sol.coef(p + j) * data.y()(static_cast<Eigen::Index>(order[n - 1 - static_cast<std::size_t>(j)]));
  }
  Eigen::VectorXd beta = sol.coef.head(p);
  return FittedModel::linear(std::move(beta), offset, sol.rank_deficient);
}

TaggedAlgorithm least_squares_algorithm() {
  return {"LS", [](const TaggedDataset& d) { return fit_least_squares(d); }, true, true};
}

TaggedAlgorithm weighted_least_squares_algorithm() {
  return {"WLS", [](const TaggedDataset& d) { return fit_weighted_least_squares(d); }, false, true};
}

TaggedAlgorithm linear_drift_algorithm(std::optional<double> prediction_tag) {
  return {"drift", [prediction_tag](const TaggedDataset& d) { return fit_linear_drift(d, prediction_tag); },
          false, true};
}

TaggedAlgorithm autoregressive_algorithm(std::size_t lags) {
  // The frozen trailing responses make predictions nonlinear in y once the
  // hypothesized test response enters the lag window.
  return {fmt::format("AR{}", lags),
          [lags](const TaggedDataset& d) { return fit_autoregressive(d, lags); }, lags == 0, lags == 0};
}

TaggedAlgorithm constant_algorithm(double value) {
  return {"constant",
          [value](const TaggedDataset& d) { return FittedModel::constant(value, d.dim()); }, true, true};
}

TaggedDataset swap_points(const TaggedDataset& data, std::size_t k) {
  const std::size_t last = data.size() - 1;
  if (data.empty() || k > last) throw std::out_of_range("swap index out of range");
  if (k == last) return data;
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::swap(rows[k], rows[last]);
  TaggedDataset swapped = data.select(rows);
  // Tags stay attached to positions.
  swapped.mutable_tags() = data.tags();
  return swapped;
}

}  // namespace nexcp

#pragma once

// Independent reference implementations used only by the tests. They avoid
// the library's quantile, solver and swap code paths on purpose.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest candidate v with sum_{values <= v} mass >= tau - 1e-12, by a
// full pass per candidate. Infinite values are ordinary doubles here.
inline double scan_quantile(const std::vector<double>& values, const std::vector<double>& masses, double tau) {
  double best = kInf;
  bool found = false;
  for (double v : values) {
    double cdf = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (values[j] <= v) cdf += masses[j];
    }
    if (cdf >= tau - 1e-12 && (!found || v < best)) {
      best = v;
      found = true;
    }
  }
  if (!found) best = *std::max_element(values.begin(), values.end());
  return best;
}

// w~ from raw weights.
inline std::vector<double> normalized(const std::vector<double>& raw) {
  double total = 1.0;
  for (double w : raw) total += w;
  std::vector<double> out;
  for (double w : raw) out.push_back(w / total);
  out.push_back(1.0 / total);
  return out;
}

// Weighted normal equations (X^T W X) beta = X^T W y via LDLT.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd* w = nullptr) {
  Eigen::VectorXd weights = w ? *w : Eigen::VectorXd::Ones(y.size());
  const Eigen::MatrixXd gram = x.transpose() * weights.asDiagonal() * x;
  const Eigen::VectorXd rhs = x.transpose() * weights.asDiagonal() * y;
  return gram.ldlt().solve(rhs);
}

// Row-major little dataset for the brute-force conformal oracles.
struct Row {
  std::vector<double> x;
  double y = 0.0;
  double tag = 0.0;
};

// Fit returning a prediction function; the weighted flag uses tags as weights.
using Fit = std::function<std::function<double(const std::vector<double>&)>(const std::vector<Row>&)>;

inline Fit least_squares_fit(bool weighted) {
  return [weighted](const std::vector<Row>& rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(rows.front().x.size());
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) x(i, j) = rows[i].x[j];
      y(i) = rows[i].y;
      w(i) = weighted ? rows[i].tag : 1.0;
    }
    const Eigen::VectorXd beta = normal_equations(x, y, &w);
    return std::function<double(const std::vector<double>&)>([beta](const std::vector<double>& v) {
      double s = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) s += beta(static_cast<Eigen::Index>(j)) * v[j];
      return s;
    });
  };
}

// Accept y iff R_{n+1} <= Q_{1-alpha}(sum_{i<=n+1} w~_i delta_{R_i}) after the
// (x,y) pairs at positions k and n+1 (0-based k, n = identity) trade places.
inline bool full_conformal_member(const std::vector<Row>& train, const std::vector<double>& test_x, double test_tag,
                                  double y, const Fit& fit, const std::vector<double>& raw_weights, double alpha,
                                  std::size_t k) {
  std::vector<Row> z = train;
  z.push_back({test_x, y, test_tag});
  std::vector<Row> swapped = z;
  const std::size_t last = z.size() - 1;
  swapped[k].x = z[last].x;
  swapped[k].y = z[last].y;
  swapped[last].x = z[k].x;
  swapped[last].y = z[k].y;
  const auto mu = fit(swapped);
  std::vector<double> r;
  for (const auto& row : z) r.push_back(std::abs(row.y - mu(row.x)));
  const double q = scan_quantile(r, normalized(raw_weights), 1.0 - alpha);
  return r.back() <= q;
}

// Jackknife+ endpoints with the leave-one-out models built by hand.
inline std::pair<double, double> jackknife_plus(const std::vector<Row>& train, const std::vector<double>& test_x,
                                                double test_tag, const Fit& fit,
                                                const std::vector<double>& raw_weights, double alpha, std::size_t k) {
  const std::size_t n = train.size();
  std::vector<double> lo;
  std::vector<double> hi;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Row> rows;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && j != k) rows.push_back(train[j]);
    }
    if (k < n && k != i) rows.push_back({train[k].x, train[k].y, test_tag});
    const auto mu = fit(rows);
    const double r = std::abs(train[i].y - mu(train[i].x));
    lo.push_back(mu(test_x) - r);
    hi.push_back(mu(test_x) + r);
  }
  const auto w = normalized(raw_weights);
  lo.push_back(-kInf);
  hi.push_back(kInf);
  return {scan_quantile(lo, w, alpha), scan_quantile(hi, w, 1.0 - alpha)};
}

// Direct O(N w) trailing mean.
inline std::vector<double> rolling_mean(const std::vector<double>& s, std::size_t window) {
  std::vector<double> out;
  for (std::size_t k = 0; k + window <= s.size(); ++k) {
    double total = 0.0;
    for (std::size_t j = k; j < k + window; ++j) total += s[j];
    out.push_back(total / static_cast<double>(window));
  }
  return out;
}

// Upper critical value of chi-square(df) at upper-tail p = 0.001
// (Wilson-Hilferty).
inline double chi_square_critical_001(double df) {
  const double z = 3.090232306167813;
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace oracle

// Exact full conformal for algorithms whose fitted values are affine in the
// hypothesized test response.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nexcp/conformal.hpp"

namespace nexcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Residual i at candidate y is |u_i + v_i * y|; the test point is index n.
struct AffineResiduals {
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> mass;  // w~_1..w~_n
  double threshold = 0.0;    // (1 - alpha) - kMassTolerance

  [[nodiscard]] std::size_t n() const { return mass.size(); }

  [[nodiscard]] bool accepts(double y) const {
    const std::size_t count = n();
    const double test = std::abs(u[count] + v[count] * y);
    long double below = 0.0L;
    for (std::size_t i = 0; i < count; ++i) {
      if (std::abs(u[i] + v[i] * y) < test) below += mass[i];
    }
    return below < threshold;
  }
};

struct Event {
  double at;
  double delta;
};

// Open set where (a1 + b1 y)(a2 + b2 y) < 0, as at most two intervals.
void negative_set(double a1, double b1, double a2, double b2, double mass, long double& base,
                  std::vector<Event>& events) {
  auto add = [&](double lo, double hi) {
    if (!(lo < hi)) return;
    if (lo == -kInf) {
      base += mass;
    } else {
      events.push_back({lo, mass});
    }
    if (hi != kInf) events.push_back({hi, -mass});
  };
  if (b1 == 0.0 && b2 == 0.0) {
    if (a1 * a2 < 0.0) add(-kInf, kInf);
    return;
  }
  if (b1 == 0.0 || b2 == 0.0) {
    const double c = b1 == 0.0 ? a1 : a2;
    const double a = b1 == 0.0 ? a2 : a1;
    const double b = b1 == 0.0 ? b2 : b1;
    if (c == 0.0) return;
    const double root = -a / b;
    // Sign of c * (a + b y) is negative below the root iff c * b > 0.
    if ((c > 0.0) == (b > 0.0)) {
      add(-kInf, root);
    } else {
      add(root, kInf);
    }
    return;
  }
  const double r1 = -a1 / b1;
  const double r2 = -a2 / b2;
  const double lo = std::min(r1, r2);
  const double hi = std::max(r1, r2);
  if ((b1 > 0.0) == (b2 > 0.0)) {
    add(lo, hi);
  } else {
    add(-kInf, lo);
    add(hi, kInf);
  }
}

}  // namespace

PredictionRegion full_conformal_linear(const TaggedDataset& train, const TestPoint& test,
                                       const TaggedAlgorithm& alg, const WeightProfile& profile,
                                       double alpha, std::size_t swap_index) {
  check_alpha(alpha);
  if (!alg.linear_in_response) {
    throw std::invalid_argument("fast path needs an algorithm that is linear in the response");
  }
  const std::size_t n = train.size();
  if (n != profile.n()) throw std::invalid_argument("training size does not match weights");

  const FittedModel at_zero = fit_swapped(train, test, 0.0, alg, swap_index);
  const FittedModel at_one = fit_swapped(train, test, 1.0, alg, swap_index);
  const Eigen::VectorXd f0 = at_zero.predict_rows(train.x());
  const Eigen::VectorXd f1 = at_one.predict_rows(train.x());

  auto affine = std::make_shared<AffineResiduals>();
  affine->u.resize(n + 1);
  affine->v.resize(n + 1);
  affine->mass.assign(profile.normalized().begin(), profile.normalized().end() - 1);
  affine->threshold = (1.0 - alpha) - kMassTolerance;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    affine->u[i] = train.y()(row) - f0(row);
    affine->v[i] = -(f1(row) - f0(row));
  }
  const double t0 = at_zero.predict(test.x);
  const double t1 = at_one.predict(test.x);
  affine->u[n] = -t0;
  affine->v[n] = 1.0 - (t1 - t0);

  // |u_i + v_i y| < |u_t + v_t y|  <=>  (d_u + d_v y)(s_u + s_v y) < 0.
  long double base = 0.0L;
  std::vector<Event> events;
  events.reserve(4 * n);
  const double ut = affine->u[n];
  const double vt = affine->v[n];
  for (std::size_t i = 0; i < n; ++i) {
    if (affine->mass[i] == 0.0) continue;
    negative_set(affine->u[i] - ut, affine->v[i] - vt, affine->u[i] + ut, affine->v[i] + vt,
                 affine->mass[i], base, events);
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.at < b.at; });

  std::vector<Interval> pieces;
  auto accept_segment = [&](double lo, double hi) {
    if (!(lo < hi)) return;
    const ExtendedReal l = ExtendedReal::from_double(lo);
    const ExtendedReal h = ExtendedReal::from_double(hi);
    if (!pieces.empty() && pieces.back().upper == l) {
      pieces.back().upper = h;
    } else {
      pieces.push_back({l, h});
    }
  };
  long double mass = base;
  double current = -kInf;
  std::size_t e = 0;
  while (e < events.size()) {
    const double at = events[e].at;
    if (mass < affine->threshold) accept_segment(current, at);
    while (e < events.size() && events[e].at == at) {
      mass += events[e].delta;
      ++e;
    }
    current = at;
  }
  if (mass < affine->threshold) accept_segment(current, kInf);

  return PredictionRegion::interval_union(std::move(pieces),
                                          [affine](double y) { return affine->accepts(y); });
}

}  // namespace nexcp

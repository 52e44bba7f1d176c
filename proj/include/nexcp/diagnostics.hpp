#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nexcp/weights.hpp"

namespace nexcp {

/// Probability masses over an indexed finite support {0, ..., m-1}.
using MassTable = std::vector<double>;

/// Throws std::domain_error unless masses are nonnegative and sum to 1
/// within kMassTolerance.
void check_mass_table(std::span<const double> masses);

/// 1/2 sum_x |p(x) - q(x)| over a shared indexed support. Tables of
/// different length belong to different support families and are rejected
/// with std::invalid_argument.
double tv_discrete(std::span<const double> p, std::span<const double> q);

/// Same distance for value-keyed distributions (union of supports, ignoring
/// infinite atoms' extended-real ordering beyond equality).
double tv_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// d_mix(p, q) = inf{t : p = (1-t) q + t r for some distribution r}
///             = max(0, 1 - min_{x : q(x) > 0} p(x) / q(x)).
double dmix_discrete(std::span<const double> p, std::span<const double> q);

struct SwapDistance {
  double exact_tv = 0.0;  // d_TV(Z, Z^i) by enumerating every joint tuple
  double marginal_tv = 0.0;  // d = d_TV(Z_i, Z_{n+1})
  double bound = 0.0;  // 2d - d^2
};

inline constexpr std::size_t kMaxJointTuples = 1'000'000;

/// Exact swapped-joint distance for independent coordinates. The last
/// marginal is the test coordinate Z_{n+1}; `i` is 0-based and must name a
/// training coordinate whose support matches the test one. Throws
/// std::length_error past kMaxJointTuples tuples and std::logic_error if the
/// bound were ever violated.
SwapDistance swap_distance_check(const std::vector<MassTable>& marginals, std::size_t i);

struct StrangenessSet {
  std::vector<std::size_t> indices;  // 0-based
  double weighted_mass = 0.0;
};

using QuantileFunction = std::function<ExtendedReal(const DiscreteDistribution&, double)>;

/// {i : r_i > Q_{1-alpha}(sum_j w~_j delta_{r_j})} over n+1 scores. The
/// quantile routine is injectable for mutation testing.
StrangenessSet strangeness_full(std::span<const double> r, const WeightProfile& profile, double alpha,
                                const QuantileFunction& quantile = weighted_quantile);

/// {i : sum_j w~_j 1[r_ij > r_ji] >= 1 - alpha} for an (n+1) x (n+1) matrix.
StrangenessSet strangeness_jackknife(const Eigen::MatrixXd& r, const WeightProfile& profile, double alpha);

struct GapBound {
  double exact_sum = 0.0;
  double closed_form = 0.0;
};

/// Coverage-gap bound under Lipschitz TV drift with w_i = rho^{n+1-i}:
/// sum_i w~_i 2 eps (n+1-i) against 2 eps / (1 - rho).
GapBound drift_gap_bound(double epsilon, double rho, std::size_t n);

/// Changepoint k steps back with worst-case TV 1 before it:
/// sum_{i<=n-k} rho^{n+1-i} / (1 + sum_{i<=n} rho^{n+1-i}) against rho^k.
GapBound changepoint_gap_bound(double rho, std::size_t k, std::size_t n);

/// factor * alpha / (1 - sum_i wbar_i dmix_i) with wbar_i = w_i / sum_j w_j,
/// capped at 1 (returned as 1 when the denominator is not positive).
double huber_bound(double alpha, const WeightProfile& profile, std::span<const double> dmix, int factor);

}  // namespace nexcp

#include "nexcp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace nexcp {

void check_mass_table(std::span<const double> masses) {
  if (masses.empty()) throw std::domain_error("mass table is empty");
  double total = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw std::domain_error("masses must be finite and nonnegative");
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::domain_error(fmt::format("masses sum to {:.17g}, not 1", total));
  }
}

double tv_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("mass tables live on different supports");
  check_mass_table(p);
  check_mass_table(q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

double tv_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  // Signed masses keyed by value: +p, -q, then merge equal values.
  std::vector<std::pair<ExtendedReal, double>> signed_mass;
  for (const auto& a : p.atoms()) signed_mass.emplace_back(a.value, a.mass);
  for (const auto& a : q.atoms()) signed_mass.emplace_back(a.value, -a.mass);
  std::sort(signed_mass.begin(), signed_mass.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double total = 0.0;
  std::size_t i = 0;
  while (i < signed_mass.size()) {
    double net = 0.0;
    std::size_t j = i;
    while (j < signed_mass.size() && signed_mass[j].first == signed_mass[i].first) {
      net += signed_mass[j].second;
      ++j;
    }
    total += std::abs(net);
    i = j;
  }
  return 0.5 * total;
}

double dmix_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("mass tables live on different supports");
  check_mass_table(p);
  check_mass_table(q);
  double min_ratio = 1.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (q[x] > 0.0) min_ratio = std::min(min_ratio, p[x] / q[x]);
  }
  return std::clamp(1.0 - min_ratio, 0.0, 1.0);
}

SwapDistance swap_distance_check(const std::vector<MassTable>& marginals, std::size_t i) {
  if (marginals.size() < 2) throw std::invalid_argument("need at least one training and one test coordinate");
  const std::size_t last = marginals.size() - 1;
  if (i >= last) throw std::out_of_range("swap coordinate must be a training coordinate");
  if (marginals[i].size() != marginals[last].size()) {
    throw std::invalid_argument("swapped coordinates need a common support");
  }
  std::size_t tuples = 1;
  for (const auto& m : marginals) {
    check_mass_table(m);
    if (tuples > kMaxJointTuples / m.size()) throw std::length_error("joint support too large to enumerate");
    tuples *= m.size();
  }
  if (tuples > kMaxJointTuples) throw std::length_error("joint support too large to enumerate");

  // Odometer over every tuple z; P(z) = prod_j p_j(z_j) and the swapped law
  // Q(z) uses p_{n+1} at coordinate i and p_i at coordinate n+1.
  std::vector<std::size_t> z(marginals.size(), 0);
  double total = 0.0;
  for (std::size_t t = 0; t < tuples; ++t) {
    double p = 1.0;
    double q = 1.0;
    for (std::size_t j = 0; j < marginals.size(); ++j) {
      p *= marginals[j][z[j]];
      const auto& source = j == i ? marginals[last] : (j == last ? marginals[i] : marginals[j]);
      q *= source[z[j]];
    }
    total += std::abs(p - q);
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (++z[j] < marginals[j].size()) break;
      z[j] = 0;
    }
  }
  SwapDistance out;
  out.exact_tv = 0.5 * total;
  out.marginal_tv = tv_discrete(marginals[i], marginals[last]);
  out.bound = 2.0 * out.marginal_tv - out.marginal_tv * out.marginal_tv;
  if (out.exact_tv > out.bound + 1e-12) {
    throw std::logic_error(fmt::format("swap distance {} exceeds 2d - d^2 = {}", out.exact_tv, out.bound));
  }
  return out;
}

StrangenessSet strangeness_full(std::span<const double> r, const WeightProfile& profile, double alpha,
                                const QuantileFunction& quantile) {
  if (r.size() != profile.n() + 1) throw std::invalid_argument("need n+1 scores for n weights");
  const auto w = profile.normalized();
  std::vector<Atom> atoms(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) atoms[j] = {ExtendedReal(r[j]), w[j]};
  const ExtendedReal q = quantile(DiscreteDistribution(std::move(atoms)), 1.0 - alpha);
  StrangenessSet out;
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (ExtendedReal(r[j]) > q) {
      out.indices.push_back(j);
      out.weighted_mass += w[j];
    }
  }
  return out;
}

StrangenessSet strangeness_jackknife(const Eigen::MatrixXd& r, const WeightProfile& profile, double alpha) {
  if (r.rows() != r.cols()) throw std::invalid_argument("strangeness matrix must be square");
  if (static_cast<std::size_t>(r.rows()) != profile.n() + 1) {
    throw std::invalid_argument("matrix size must be n+1 for n weights");
  }
  const auto w = profile.normalized();
  StrangenessSet out;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    double dominated = 0.0;
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if (r(i, j) > r(j, i)) dominated += w[static_cast<std::size_t>(j)];
    }
    if (dominated >= (1.0 - alpha) - kMassTolerance) {
      out.indices.push_back(static_cast<std::size_t>(i));
      out.weighted_mass += w[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

namespace {

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
}

}  // namespace

GapBound drift_gap_bound(double epsilon, double rho, std::size_t n) {
  check_rho(rho);
  if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be nonnegative");
  if (n == 0) throw std::domain_error("horizon must be at least 1");
  // Accumulate from the most recent point backwards: lag = n+1-i.
  double weight_sum = 0.0;
  double numerator = 0.0;
  double power = 1.0;
  for (std::size_t lag = 1; lag <= n; ++lag) {
    power *= rho;
    weight_sum += power;
    numerator += power * 2.0 * epsilon * static_cast<double>(lag);
  }
  GapBound out;
  out.exact_sum = numerator / (1.0 + weight_sum);
  out.closed_form = 2.0 * epsilon / (1.0 - rho);
  if (out.exact_sum > out.closed_form * (1.0 + 1e-12)) {
    throw std::logic_error("drift gap sum exceeds its closed form");
  }
  return out;
}

GapBound changepoint_gap_bound(double rho, std::size_t k, std::size_t n) {
  check_rho(rho);
  if (k > n) throw std::domain_error("changepoint lag k must not exceed n");
  double weight_sum = 0.0;
  double pre_change = 0.0;
  double power = 1.0;
  for (std::size_t lag = 1; lag <= n; ++lag) {
    power *= rho;
    weight_sum += power;
    if (lag > k) pre_change += power;  // i = n+1-lag <= n-k
  }
  GapBound out;
  out.exact_sum = pre_change / (1.0 + weight_sum);
  out.closed_form = std::pow(rho, static_cast<double>(k));
  if (out.exact_sum > out.closed_form * (1.0 + 1e-12)) {
    throw std::logic_error("changepoint gap sum exceeds rho^k");
  }
  return out;
}

double huber_bound(double alpha, const WeightProfile& profile, std::span<const double> dmix, int factor) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0,1)");
  if (factor != 1 && factor != 2) throw std::invalid_argument("factor must be 1 or 2");
  if (dmix.size() != profile.n()) throw std::invalid_argument("need one d_mix value per weight");
  double contamination = 0.0;
  if (profile.raw_sum() > 0.0) {
    const auto w = profile.raw();
    for (std::size_t i = 0; i < dmix.size(); ++i) {
      if (!(dmix[i] >= 0.0 && dmix[i] <= 1.0)) throw std::domain_error("d_mix values lie in [0,1]");
      contamination += w[i] / profile.raw_sum() * dmix[i];
    }
  }
  const double denom = 1.0 - contamination;
  if (denom <= 0.0) return 1.0;
  return std::min(1.0, factor * alpha / denom);
}

}  // namespace nexcp

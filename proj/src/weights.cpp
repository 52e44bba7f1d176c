#include "nexcp/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace nexcp {

ExtendedReal ExtendedReal::from_double(double v) {
  if (std::isnan(v)) throw std::domain_error("extended real cannot be NaN");
  if (std::isinf(v)) return v > 0 ? pos_inf() : neg_inf();
  return ExtendedReal(v);
}

double ExtendedReal::to_double() const {
  switch (kind_) {
    case Kind::NegInf:
      return -std::numeric_limits<double>::infinity();
    case Kind::PosInf:
      return std::numeric_limits<double>::infinity();
    case Kind::Finite:
      break;
  }
  return value_;
}

std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) {
  if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
  if (a.kind_ != ExtendedReal::Kind::Finite) return std::partial_ordering::equivalent;
  return a.value_ <=> b.value_;
}

bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
  return (a <=> b) == std::partial_ordering::equivalent;
}

std::string ExtendedReal::to_string() const {
  switch (kind_) {
    case Kind::NegInf:
      return "-inf";
    case Kind::PosInf:
      return "inf";
    case Kind::Finite:
      break;
  }
  return fmt::format("{:.17g}", value_);
}

ExtendedReal operator+(const ExtendedReal& a, double b) {
  return a.is_finite() ? ExtendedReal(a.to_double() + b) : a;
}

ExtendedReal operator-(const ExtendedReal& a, double b) {
  return a.is_finite() ? ExtendedReal(a.to_double() - b) : a;
}

ExtendedReal operator-(const ExtendedReal& a) {
  if (a.is_pos_inf()) return ExtendedReal::neg_inf();
  if (a.is_neg_inf()) return ExtendedReal::pos_inf();
  return ExtendedReal(-a.to_double());
}

WeightProfile normalize_weights(std::span<const double> raw) {
  WeightProfile profile;
  profile.raw_.assign(raw.begin(), raw.end());
  double sum = 0.0;
  for (double w : raw) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::domain_error(fmt::format("weight {} outside [0,1]", w));
    }
    sum += w;
  }
  profile.raw_sum_ = sum;
  const double denom = sum + 1.0;
  profile.normalized_.resize(raw.size() + 1);
  for (std::size_t i = 0; i < raw.size(); ++i) profile.normalized_[i] = raw[i] / denom;
  profile.normalized_.back() = 1.0 / denom;
  return profile;
}

WeightProfile unit_weights(std::size_t n) {
  const std::vector<double> ones(n, 1.0);
  return normalize_weights(ones);
}

WeightProfile exponential_weights(std::size_t n, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("rho must lie in [0,1]");
  std::vector<double> w(n);
  double power = 1.0;
  // w_n = rho, w_{n-1} = rho^2, ...
  for (std::size_t k = n; k-- > 0;) {
    power *= rho;
    w[k] = power;
  }
  return normalize_weights(w);
}

DiscreteDistribution::DiscreteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw std::domain_error("distribution needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass)) {
      throw std::domain_error("atom masses must be finite and nonnegative");
    }
    total += a.mass;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::domain_error(fmt::format("atom masses sum to {:.17g}, not 1", total));
  }
  for (auto& a : atoms_) a.mass /= total;
}

ExtendedReal weighted_quantile(const DiscreteDistribution& dist, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("tau must lie in [0,1]");
  std::vector<Atom> sorted(dist.atoms().begin(), dist.atoms().end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Atom& a, const Atom& b) { return a.value < b.value; });
  const double target = tau - kMassTolerance;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i].mass;
    // Only test at the last copy of a value: F is evaluated on merged atoms.
    const bool last_copy = i + 1 == sorted.size() || sorted[i + 1].value != sorted[i].value;
    if (last_copy && cumulative >= target) return sorted[i].value;
  }
  return sorted.back().value;
}

ExtendedReal weighted_quantile_with_tail(std::span<const double> values,
                                         const WeightProfile& profile, ExtendedReal tail,
                                         double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("tau must lie in [0,1]");
  if (values.size() != profile.n()) {
    throw std::invalid_argument("value count does not match weight profile");
  }
  const auto masses = profile.normalized();
  std::vector<std::pair<double, double>> finite;
  finite.reserve(values.size() + 1);
  for (std::size_t i = 0; i < values.size(); ++i) finite.emplace_back(values[i], masses[i]);
  double below = 0.0;  // mass of a -inf tail
  if (tail.is_finite()) {
    finite.emplace_back(tail.to_double(), profile.test_mass());
  } else if (tail.is_neg_inf()) {
    below = profile.test_mass();
  }
  std::sort(finite.begin(), finite.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const double target = tau - kMassTolerance;
  double cumulative = below;
  if (tail.is_neg_inf() && cumulative >= target) return ExtendedReal::neg_inf();
  for (std::size_t i = 0; i < finite.size(); ++i) {
    cumulative += finite[i].second;
    const bool last_copy = i + 1 == finite.size() || finite[i + 1].first != finite[i].first;
    if (last_copy && cumulative >= target) return ExtendedReal(finite[i].first);
  }
  if (tail.is_pos_inf()) return ExtendedReal::pos_inf();
  return finite.empty() ? tail : ExtendedReal(finite.back().first);
}

SwapDraw draw_swap_index(const WeightProfile& profile, RandomStream& rng) {
  SwapDraw draw;
  draw.stream_key = rng.key();
  draw.stream_position = rng.consumed();
  const double u = rng.uniform();
  const auto w = profile.normalized();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    cumulative += w[i];
    if (u < cumulative) {
      draw.index = i;
      return draw;
    }
  }
  // Rounding left the total just below u; the test mass is always positive.
  draw.index = w.size() - 1;
  return draw;
}

}  // namespace nexcp

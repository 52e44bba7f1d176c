#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nexcp/random.hpp"

namespace nexcp {

/// Absolute tolerance for probability masses. Mass vectors must sum to one
/// within it, and quantile thresholds are compared against cumulative sums
/// with the same slack so that e.g. nine atoms of mass 0.1 reach tau = 0.9.
inline constexpr double kMassTolerance = 1e-12;

/// A point on the extended real line [-inf, +inf].
class ExtendedReal {
 public:
  enum class Kind : std::uint8_t { NegInf, Finite, PosInf };

  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double value) : kind_(Kind::Finite), value_(value) {}  // NOLINT

  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf); }
  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf); }
  /// Maps IEEE infinities onto the tagged representation.
  static ExtendedReal from_double(double v);

  [[nodiscard]] constexpr Kind kind() const { return kind_; }
  [[nodiscard]] constexpr bool is_finite() const { return kind_ == Kind::Finite; }
  [[nodiscard]] constexpr bool is_pos_inf() const { return kind_ == Kind::PosInf; }
  [[nodiscard]] constexpr bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  /// Finite value, or +/-HUGE_VAL for the infinite kinds.
  [[nodiscard]] double to_double() const;

  friend std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b);
  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b);

  [[nodiscard]] std::string to_string() const;

 private:
  constexpr explicit ExtendedReal(Kind k) : kind_(k) {}
  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

ExtendedReal operator+(const ExtendedReal& a, double b);
ExtendedReal operator-(const ExtendedReal& a, double b);
ExtendedReal operator-(const ExtendedReal& a);

/// Raw weights w_1..w_n in [0,1] and normalized weights w~_1..w~_{n+1},
/// where w~_i = w_i / (sum_j w_j + 1) and w~_{n+1} = 1 / (sum_j w_j + 1).
class WeightProfile {
 public:
  WeightProfile() : normalized_{1.0} {}

  [[nodiscard]] std::size_t n() const { return raw_.size(); }
  [[nodiscard]] std::span<const double> raw() const { return raw_; }
  [[nodiscard]] std::span<const double> normalized() const { return normalized_; }
  /// w~_{n+1}, the mass reserved for the test point.
  [[nodiscard]] double test_mass() const { return normalized_.back(); }
  [[nodiscard]] double raw_sum() const { return raw_sum_; }

 private:
  friend WeightProfile normalize_weights(std::span<const double> raw);
  std::vector<double> raw_;
  std::vector<double> normalized_;
  double raw_sum_ = 0.0;
};

/// Throws std::domain_error if any weight lies outside [0,1] or is NaN.
WeightProfile normalize_weights(std::span<const double> raw);

/// Unit weights (classic, unweighted methods).
WeightProfile unit_weights(std::size_t n);

/// w_i = rho^{n+1-i}, i = 1..n.
WeightProfile exponential_weights(std::size_t n, double rho);

struct Atom {
  ExtendedReal value;
  double mass = 0.0;
};

/// Finite mixture of point masses on the extended reals. Duplicate values
/// are allowed; the quantile is defined on the merged CDF.
class DiscreteDistribution {
 public:
  /// Masses must be finite, nonnegative and sum to 1 within kMassTolerance;
  /// they are renormalized once. Anything else throws std::domain_error.
  explicit DiscreteDistribution(std::vector<Atom> atoms);

  [[nodiscard]] std::span<const Atom> atoms() const { return atoms_; }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }

 private:
  std::vector<Atom> atoms_;
};

/// inf{v : F(v) >= tau}, with the cumulative mass compared against
/// tau - kMassTolerance. tau = 0 returns the smallest atom.
/// Throws std::domain_error for tau outside [0,1].
ExtendedReal weighted_quantile(const DiscreteDistribution& dist, double tau);

/// Quantile of sum_i w~_i delta_{values_i} + w~_{n+1} delta_{tail}, the form
/// used by every method. `values` has length n (tail atom appended) or n+1
/// (no tail; pass `tail` ignored).
ExtendedReal weighted_quantile_with_tail(std::span<const double> values,
                                         const WeightProfile& profile,
                                         ExtendedReal tail, double tau);

/// Random swap index. `index` is 0-based: values 0..n-1 name training points
/// and n names the test point (the identity swap).
struct SwapDraw {
  std::size_t index = 0;
  std::uint64_t stream_key = 0;
  std::uint64_t stream_position = 0;  // stream position before the draw

  [[nodiscard]] std::size_t one_based() const { return index + 1; }
};

/// Draws K with P(K = i) = w~_i by inverting the cumulative weights.
/// Consumes exactly one uniform from `rng`.
SwapDraw draw_swap_index(const WeightProfile& profile, RandomStream& rng);

}  // namespace nexcp

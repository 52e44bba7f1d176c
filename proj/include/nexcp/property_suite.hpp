#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nexcp/diagnostics.hpp"

namespace nexcp {

struct PropertyResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t violations = 0;
  std::string first_failure;

  [[nodiscard]] bool passed() const { return violations == 0 && cases > 0; }
};

struct PropertySuiteOptions {
  /// Random cases for the quantile and strangeness fuzzers; the swap-distance
  /// and mixture-distance suites scale from it with floors of 100 and 1000.
  std::size_t fuzz = 10'000;
  std::uint64_t seed = 0x5eed;
  /// Quantile routine under test (swap in a faulty one to check that the
  /// suite notices).
  QuantileFunction quantile = weighted_quantile;
};

/// Randomized checks of the theory's finite-sample identities: quantile vs a
/// cumulative-scan oracle, monotonicity in tau, strangeness mass bounds,
/// swap-distance bound, d_mix >= d_TV, TV metric axioms and the drift and
/// changepoint closed forms over a 20 x 20 sweep.
std::vector<PropertyResult> run_property_suite(const PropertySuiteOptions& options = {});

/// Scan oracle: for each distinct value v, F(v) by a full pass over the
/// atoms; returns the smallest v with F(v) >= tau - kMassTolerance.
ExtendedReal scan_quantile(const DiscreteDistribution& dist, double tau);

}  // namespace nexcp

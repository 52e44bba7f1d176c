#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nexcp/conformal.hpp"
#include "nexcp/random.hpp"
#include "nexcp/regression.hpp"
#include "nexcp/weights.hpp"

namespace nexcp {

/// Simulated linear model y = x^T beta(i) + noise, x ~ N(0, I_4).
///   1: beta = (2,1,0,0) throughout
///   2: (2,1,0,0) up to i = 500, (0,-2,-1,0) up to 1500, (0,0,2,1) after
///   3: linear interpolation from (2,1,0,0) at i = 1 to (0,0,2,1) at i = N
struct SimulationSetting {
  int id = 1;
  std::size_t horizon = 2000;
  double noise_sd = 1.0;

  static constexpr std::size_t kDim = 4;

  /// Coefficients at time i (1-based). Throws std::domain_error for an
  /// unknown setting id or i outside 1..horizon.
  [[nodiscard]] Eigen::VectorXd beta_at(std::size_t i) const;
};

/// A time-ordered sequence of (x, y) pairs.
struct LabeledSeries {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(y.size()); }
};

/// Covariates come from the kCovariates substream of `trial`, noise from
/// kNoise, so the response noise never depends on how many covariates were
/// drawn.
LabeledSeries generate_setting(const SimulationSetting& setting, const RandomStream& trial);

enum class MethodFamily { FullConformal, JackknifePlus };
enum class FitKind { LeastSquares, WeightedLeastSquares, LinearDrift, Autoregressive };

/// One evaluated method. Unweighted methods use unit weights; weighted ones
/// w_i = rho^{n+1-i}. WLS tags are the same decay (test tag 1); drift and
/// autoregressive tags are the time index.
struct MethodSpec {
  std::string name;
  MethodFamily family = MethodFamily::FullConformal;
  FitKind fit = FitKind::LeastSquares;
  bool weighted = false;
  std::size_t lags = 1;  // autoregressive only
};

/// Parses names such as "CP+LS", "nex-CP+WLS", "nex-J+LS", "nex-CP+drift",
/// "nex-CP+AR2" (case-insensitive). Throws std::invalid_argument.
MethodSpec parse_method(std::string_view name);

/// CP+LS, nex-CP+LS, nex-CP+WLS.
std::vector<MethodSpec> default_methods();

struct SequentialConfig {
  double alpha = 0.1;
  double rho = 0.99;
  std::size_t burn_in = 100;
  std::size_t grid_size = 1000;
  double grid_padding = 0.5;
  bool fast_linear_path = false;
};

/// Throws std::invalid_argument for an inconsistent configuration.
void validate(const SequentialConfig& config);

struct StepRecord {
  std::size_t trial = 1;
  std::size_t time = 0;    // index of the predicted point, 1-based
  std::size_t method = 0;  // position in ExperimentReport::methods
  bool covered = false;
  double width = 0.0;
};

struct MethodSummary {
  std::string method;
  double mean_coverage = 0.0;
  double mean_width = 0.0;
};

struct RollingPoint {
  std::size_t time = 0;  // last time index in the window
  std::size_t method = 0;
  double coverage = 0.0;
  double width = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> methods;
  std::vector<StepRecord> records;  // ordered by trial, time, method
  std::vector<MethodSummary> summary;
  std::vector<RollingPoint> rolling;  // ordered by method, time
  std::size_t window = 0;
};

/// Trailing means: out[k] = mean(series[k .. k+window-1]). Windows holding
/// an infinite value average to infinity. Throws std::invalid_argument if
/// window is 0 or exceeds the series length.
std::vector<double> rolling_mean(std::span<const double> series, std::size_t window);

/// Predicts point n+1 from points 1..n for n = burn_in .. N-1. Swap indices
/// come from trial.derive({kSwap, n, method}). Fills `records` only.
ExperimentReport run_sequential(const LabeledSeries& data, std::span<const MethodSpec> methods,
                                const SequentialConfig& config, const RandomStream& trial,
                                std::size_t trial_index = 1);

/// Mean coverage and width per method over all records, and the rolling
/// series of per-time averages across trials.
void summarize(ExperimentReport& report, std::size_t window);

struct SimulationRun {
  SimulationSetting setting;
  SequentialConfig config;
  std::vector<MethodSpec> methods = default_methods();
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::size_t window = 10;
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// Trial t (1-based) uses RandomStream(seed).derive(t). Trials run on up to
/// `threads` workers and are merged in trial order, so output does not depend
/// on the thread count.
ExperimentReport run_simulation(const SimulationRun& run);

/// Draws one labeled point (features and response).
struct LabeledPoint {
  Eigen::VectorXd x;
  double y = 0.0;
};
using PointSampler = std::function<LabeledPoint(RandomStream&)>;

struct HuberResult {
  double miscoverage = 0.0;
  double bound = 0.0;
  double standard_error = 0.0;  // binomial SE at the bound
  std::size_t trials = 0;
  [[nodiscard]] bool within_bound() const { return miscoverage <= bound + 3.0 * standard_error; }
};

/// Training points come from (1 - eps) target + eps contamination, the test
/// point from the target; each trial runs weighted split conformal around the
/// fixed `model` and checks coverage of the test response.
HuberResult run_huber_experiment(const PointSampler& target, const PointSampler& contamination,
                                 double epsilon, std::size_t n, double alpha,
                                 const WeightProfile& profile, std::size_t trials,
                                 const FittedModel& model, const RandomStream& rng);

}  // namespace nexcp

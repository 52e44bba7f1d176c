#include "nexcp/experiments.hpp"

#include "nexcp/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace nexcp {

Eigen::VectorXd SimulationSetting::beta_at(std::size_t i) const {
  if (i < 1 || i > horizon) throw std::domain_error(fmt::format("time {} outside 1..{}", i, horizon));
  const Eigen::Vector4d first(2.0, 1.0, 0.0, 0.0);
  const Eigen::Vector4d middle(0.0, -2.0, -1.0, 0.0);
  const Eigen::Vector4d last(0.0, 0.0, 2.0, 1.0);
  switch (id) {
    case 1:
      return first;
    case 2:
      if (i <= 500) return first;
      if (i <= 1500) return middle;
      return last;
    case 3: {
      if (horizon == 1) return first;
      const double s = static_cast<double>(i - 1) / static_cast<double>(horizon - 1);
      return first + s * (last - first);
    }
    default:
      throw std::domain_error(fmt::format("unknown setting {}", id));
  }
}

LabeledSeries generate_setting(const SimulationSetting& setting, const RandomStream& trial) {
  if (setting.horizon == 0) throw std::domain_error("horizon must be positive");
  RandomStream covariates = trial.derive(stream_id::kCovariates);
  RandomStream noise = trial.derive(stream_id::kNoise);
  const auto n = static_cast<Eigen::Index>(setting.horizon);
  const auto p = static_cast<Eigen::Index>(SimulationSetting::kDim);
  LabeledSeries out{Eigen::MatrixXd(n, p), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) out.x(i, j) = covariates.normal();
    const Eigen::VectorXd beta = setting.beta_at(static_cast<std::size_t>(i) + 1);
    out.y(i) = out.x.row(i).dot(beta) + setting.noise_sd * noise.normal();
  }
  return out;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

MethodSpec parse_method(std::string_view name) {
  const std::string key = lower(name);
  MethodSpec spec;
  std::string_view rest = key;
  if (rest.starts_with("nex-")) {
    spec.weighted = true;
    rest.remove_prefix(4);
  }
  if (rest.starts_with("cp+")) {
    spec.family = MethodFamily::FullConformal;
    rest.remove_prefix(3);
  } else if (rest.starts_with("j+")) {
    spec.family = MethodFamily::JackknifePlus;
    rest.remove_prefix(2);
  } else {
    throw std::invalid_argument(fmt::format("unknown method '{}'", name));
  }
  std::string fit_name;
  if (rest == "ls") {
    spec.fit = FitKind::LeastSquares;
    fit_name = "LS";
  } else if (rest == "wls") {
    spec.fit = FitKind::WeightedLeastSquares;
    fit_name = "WLS";
  } else if (rest == "drift") {
    spec.fit = FitKind::LinearDrift;
    fit_name = "drift";
  } else if (rest.starts_with("ar")) {
    spec.fit = FitKind::Autoregressive;
    const std::string_view digits = rest.substr(2);
    std::size_t lags = 1;
    if (!digits.empty()) {
      if (!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        throw std::invalid_argument(fmt::format("unknown method '{}'", name));
      }
      lags = std::stoul(std::string(digits));
    }
    if (lags == 0) throw std::invalid_argument("autoregressive methods need at least one lag");
    spec.lags = lags;
    fit_name = fmt::format("AR{}", lags);
  } else {
    throw std::invalid_argument(fmt::format("unknown method '{}'", name));
  }
  spec.name = fmt::format("{}{}+{}", spec.weighted ? "nex-" : "",
                          spec.family == MethodFamily::FullConformal ? "CP" : "J", fit_name);
  return spec;
}

std::vector<MethodSpec> default_methods() {
  return {parse_method("CP+LS"), parse_method("nex-CP+LS"), parse_method("nex-CP+WLS")};
}

void validate(const SequentialConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(config.rho > 0.0 && config.rho <= 1.0)) throw std::invalid_argument("rho must lie in (0,1]");
  if (config.burn_in == 0) throw std::invalid_argument("burn-in must be at least 1");
  if (config.grid_size < 2) throw std::invalid_argument("grid needs at least two points");
  if (!(config.grid_padding >= 0.0) || !std::isfinite(config.grid_padding)) {
    throw std::invalid_argument("grid padding must be finite and nonnegative");
  }
}

std::vector<double> rolling_mean(std::span<const double> series, std::size_t window) {
  if (window == 0) throw std::invalid_argument("window must be at least 1");
  if (window > series.size()) {
    throw std::invalid_argument(fmt::format("window {} exceeds series length {}", window, series.size()));
  }
  std::vector<double> out;
  out.reserve(series.size() - window + 1);
  long double finite_sum = 0.0L;
  std::size_t infinite = 0;
  auto add = [&](double v, int sign) {
    if (std::isinf(v)) {
      infinite = sign > 0 ? infinite + 1 : infinite - 1;
    } else {
      finite_sum += sign * static_cast<long double>(v);
    }
  };
  for (std::size_t k = 0; k < series.size(); ++k) {
    add(series[k], +1);
    if (k >= window) add(series[k - window], -1);
    if (k + 1 >= window) {
      out.push_back(infinite > 0 ? std::numeric_limits<double>::infinity()
                                 : static_cast<double>(finite_sum / static_cast<long double>(window)));
    }
  }
  return out;
}

namespace {

TaggedAlgorithm algorithm_for(const MethodSpec& spec, std::size_t n) {
  switch (spec.fit) {
    case FitKind::LeastSquares:
      return least_squares_algorithm();
    case FitKind::WeightedLeastSquares:
      return weighted_least_squares_algorithm();
    case FitKind::LinearDrift:
      return linear_drift_algorithm(static_cast<double>(n + 1));
    case FitKind::Autoregressive:
      return autoregressive_algorithm(spec.lags);
  }
  throw std::logic_error("unhandled fit kind");
}

// Tags for training points 1..n and the test point n+1.
void assign_tags(const MethodSpec& spec, double rho, std::size_t n, Eigen::VectorXd& train_tags,
                 double& test_tag) {
  train_tags.resize(static_cast<Eigen::Index>(n));
  if (spec.fit == FitKind::WeightedLeastSquares) {
    double power = 1.0;
    for (std::size_t i = n; i-- > 0;) {
      power *= rho;
      train_tags(static_cast<Eigen::Index>(i)) = power;
    }
    test_tag = 1.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) train_tags(static_cast<Eigen::Index>(i)) = static_cast<double>(i + 1);
    test_tag = static_cast<double>(n + 1);
  }
}

}  // namespace

ExperimentReport run_sequential(const LabeledSeries& data, std::span<const MethodSpec> methods,
                                const SequentialConfig& config, const RandomStream& trial,
                                std::size_t trial_index) {
  validate(config);
  if (methods.empty()) throw std::invalid_argument("no methods configured");
  const std::size_t total = data.size();
  if (config.burn_in >= total) {
    throw std::invalid_argument(fmt::format("burn-in {} must be below the series length {}", config.burn_in, total));
  }
  if (static_cast<std::size_t>(data.x.rows()) != total) throw std::invalid_argument("features and responses disagree");
  for (const auto& m : methods) {
    if (m.fit == FitKind::Autoregressive && m.lags >= config.burn_in) {
      throw std::invalid_argument(fmt::format("{} needs a burn-in above its lag count", m.name));
    }
  }

  ExperimentReport report;
  for (const auto& m : methods) report.methods.push_back(m.name);
  report.records.reserve((total - config.burn_in) * methods.size());

  for (std::size_t n = config.burn_in; n < total; ++n) {
    const auto rows = static_cast<Eigen::Index>(n);
    const Eigen::MatrixXd train_x = data.x.topRows(rows);
    const Eigen::VectorXd train_y = data.y.head(rows);
    const double response = data.y(rows);
    const WeightProfile unit = unit_weights(n);
    const WeightProfile decay = exponential_weights(n, config.rho);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const MethodSpec& spec = methods[m];
      Eigen::VectorXd tags;
      TestPoint test{data.x.row(rows).transpose(), 0.0};
      assign_tags(spec, config.rho, n, tags, test.tag);
      const TaggedDataset train(train_x, train_y, std::move(tags));
      const TaggedAlgorithm alg = algorithm_for(spec, n);
      const WeightProfile& profile = spec.weighted ? decay : unit;
      RandomStream swap_stream = trial.derive({stream_id::kSwap, n, m});
      const std::size_t k = draw_swap_index(profile, swap_stream).index;

      PredictionRegion region = [&] {
        if (spec.family == MethodFamily::JackknifePlus) {
          return jackknife_plus_at(train, test, alg, profile, config.alpha, k);
        }
        if (config.fast_linear_path && alg.linear_in_response) {
          return full_conformal_linear(train, test, alg, profile, config.alpha, k);
        }
        const Grid grid = Grid::around(train_y, config.grid_size, config.grid_padding);
        return full_conformal_at(train, test, alg, profile, config.alpha, grid, k);
      }();
      report.records.push_back({trial_index, n + 1, m, region.contains(response), region.width()});
    }
  }
  return report;
}

void summarize(ExperimentReport& report, std::size_t window) {
  const std::size_t methods = report.methods.size();
  report.window = window;
  report.summary.assign(methods, {});
  report.rolling.clear();
  if (methods == 0) return;

  std::vector<std::size_t> count(methods, 0);
  std::vector<long double> covered(methods, 0.0L);
  std::vector<long double> width(methods, 0.0L);
  std::vector<bool> infinite(methods, false);
  std::size_t first_time = std::numeric_limits<std::size_t>::max();
  std::size_t last_time = 0;
  for (const auto& r : report.records) {
    ++count[r.method];
    covered[r.method] += r.covered ? 1.0L : 0.0L;
    if (std::isinf(r.width)) {
      infinite[r.method] = true;
    } else {
      width[r.method] += r.width;
    }
    first_time = std::min(first_time, r.time);
    last_time = std::max(last_time, r.time);
  }
  for (std::size_t m = 0; m < methods; ++m) {
    auto& s = report.summary[m];
    s.method = report.methods[m];
    if (count[m] == 0) continue;
    const auto c = static_cast<long double>(count[m]);
    s.mean_coverage = static_cast<double>(covered[m] / c);
    s.mean_width = infinite[m] ? std::numeric_limits<double>::infinity() : static_cast<double>(width[m] / c);
  }
  if (report.records.empty()) return;

  // Per-time averages across trials, then trailing windows.
  const std::size_t span = last_time - first_time + 1;
  if (window == 0 || window > span) {
    throw std::invalid_argument(fmt::format("window {} exceeds the {} evaluated time points", window, span));
  }
  std::vector<std::vector<double>> cov_sum(methods, std::vector<double>(span, 0.0));
  std::vector<std::vector<double>> width_sum(methods, std::vector<double>(span, 0.0));
  std::vector<std::vector<std::size_t>> hits(methods, std::vector<std::size_t>(span, 0));
  for (const auto& r : report.records) {
    const std::size_t t = r.time - first_time;
    cov_sum[r.method][t] += r.covered ? 1.0 : 0.0;
    width_sum[r.method][t] += r.width;
    ++hits[r.method][t];
  }
  for (std::size_t m = 0; m < methods; ++m) {
    for (std::size_t t = 0; t < span; ++t) {
      if (hits[m][t] == 0) throw std::invalid_argument("records do not cover a contiguous time range");
      cov_sum[m][t] /= static_cast<double>(hits[m][t]);
      width_sum[m][t] /= static_cast<double>(hits[m][t]);
    }
    const auto cov = rolling_mean(cov_sum[m], window);
    const auto wid = rolling_mean(width_sum[m], window);
    for (std::size_t k = 0; k < cov.size(); ++k) {
      report.rolling.push_back({first_time + k + window - 1, m, cov[k], wid[k]});
    }
  }
}

ExperimentReport run_simulation(const SimulationRun& run) {
  validate(run.config);
  if (run.trials == 0) throw std::invalid_argument("need at least one trial");
  if (run.setting.id < 1 || run.setting.id > 3) throw std::invalid_argument("setting must be 1, 2 or 3");
  if (run.config.burn_in >= run.setting.horizon) throw std::invalid_argument("burn-in must be below N");
  if (run.methods.empty()) throw std::invalid_argument("no methods configured");

  const RandomStream base(run.seed);
  std::vector<ExperimentReport> per_trial(run.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= run.trials || failed.load()) return;
      try {
        const RandomStream trial = base.derive(t + 1);
        const LabeledSeries data = generate_setting(run.setting, trial);
        per_trial[t] = run_sequential(data, run.methods, run.config, trial, t + 1);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  std::size_t threads = run.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : run.threads;
  threads = std::min(threads, run.trials);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentReport merged;
  for (const auto& m : run.methods) merged.methods.push_back(m.name);
  for (auto& r : per_trial) {
    merged.records.insert(merged.records.end(), r.records.begin(), r.records.end());
  }
  summarize(merged, run.window);
  return merged;
}

HuberResult run_huber_experiment(const PointSampler& target, const PointSampler& contamination,
                                 double epsilon, std::size_t n, double alpha,
                                 const WeightProfile& profile, std::size_t trials,
                                 const FittedModel& model, const RandomStream& rng) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::domain_error("epsilon must lie in [0,1)");
  if (profile.n() != n) throw std::invalid_argument("weights must cover the n training points");
  if (trials == 0) throw std::invalid_argument("need at least one trial");
  check_alpha(alpha);

  std::size_t misses = 0;
  std::vector<double> residuals(n);
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream stream = rng.derive({stream_id::kHuber, t});
    for (std::size_t i = 0; i < n; ++i) {
      const bool contaminated = stream.uniform() < epsilon;
      const LabeledPoint p = contaminated ? contamination(stream) : target(stream);
      residuals[i] = std::abs(p.y - model.predict(p.x));
    }
    const LabeledPoint test = target(stream);
    const PredictionRegion region = split_conformal(residuals, model.predict(test.x), profile, alpha);
    if (!region.contains(test.y)) ++misses;
  }
  HuberResult out;
  out.trials = trials;
  out.miscoverage = static_cast<double>(misses) / static_cast<double>(trials);
  const std::vector<double> dmix(n, epsilon);
  out.bound = huber_bound(alpha, profile, dmix, 1);
  out.standard_error = std::sqrt(out.bound * (1.0 - out.bound) / static_cast<double>(trials));
  return out;
}

}  // namespace nexcp

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nexcp/experiments.hpp"
#include "oracles.hpp"

using namespace nexcp;

TEST_CASE("coefficient schedules") {
  SimulationSetting s1{1, 2000};
  CHECK(s1.beta_at(1) == Eigen::Vector4d(2, 1, 0, 0));
  CHECK(s1.beta_at(2000) == Eigen::Vector4d(2, 1, 0, 0));

  SimulationSetting s2{2, 2000};
  CHECK(s2.beta_at(500) == Eigen::Vector4d(2, 1, 0, 0));
  CHECK(s2.beta_at(501) == Eigen::Vector4d(0, -2, -1, 0));
  CHECK(s2.beta_at(1500) == Eigen::Vector4d(0, -2, -1, 0));
  CHECK(s2.beta_at(1501) == Eigen::Vector4d(0, 0, 2, 1));

  SimulationSetting s3{3, 2001};
  CHECK(s3.beta_at(1) == Eigen::Vector4d(2, 1, 0, 0));
  CHECK(s3.beta_at(2001) == Eigen::Vector4d(0, 0, 2, 1));
  CHECK((s3.beta_at(1001) - Eigen::Vector4d(1, 0.5, 1, 0.5)).norm() < 1e-12);

  CHECK_THROWS_AS((void)s1.beta_at(0), std::domain_error);
  CHECK_THROWS_AS((void)s1.beta_at(2001), std::domain_error);
  const SimulationSetting unknown{4, 10};
  CHECK_THROWS_AS((void)unknown.beta_at(1), std::domain_error);
}

TEST_CASE("generated data follow the schedule") {
  SimulationSetting s{2, 800, 0.0};
  const LabeledSeries d = generate_setting(s, RandomStream(3).derive(1));
  REQUIRE(d.size() == 800);
  for (std::size_t i = 1; i <= 800; ++i) {
    const auto row = static_cast<Eigen::Index>(i - 1);
    CHECK(d.y(row) == doctest::Approx(d.x.row(row).dot(s.beta_at(i))));
  }
  // Covariates do not depend on the noise level.
  SimulationSetting noisy{2, 800, 1.0};
  const LabeledSeries e = generate_setting(noisy, RandomStream(3).derive(1));
  CHECK(e.x == d.x);
  CHECK(e.y != d.y);
  // Residual noise is roughly standard normal.
  const Eigen::VectorXd noise = e.y - d.y;
  CHECK(std::abs(noise.mean()) < 0.15);
  CHECK(std::abs(noise.squaredNorm() / 800 - 1.0) < 0.2);
}

TEST_CASE("method names") {
  CHECK(parse_method("cp+ls").name == "CP+LS");
  const MethodSpec wls = parse_method("NEX-cp+wls");
  CHECK(wls.name == "nex-CP+WLS");
  CHECK(wls.weighted);
  CHECK(wls.fit == FitKind::WeightedLeastSquares);
  const MethodSpec jack = parse_method("nex-J+LS");
  CHECK(jack.family == MethodFamily::JackknifePlus);
  const MethodSpec ar = parse_method("nex-CP+AR3");
  CHECK(ar.fit == FitKind::Autoregressive);
  CHECK(ar.lags == 3);
  CHECK(parse_method("nex-CP+drift").fit == FitKind::LinearDrift);
  CHECK_THROWS_AS(parse_method("CP+ridge"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method("nex-CP+AR0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_method(""), std::invalid_argument);
  CHECK(default_methods().size() == 3);
}

TEST_CASE("rolling means") {
  const std::vector<double> s{0, 1, 0, 1};
  CHECK(rolling_mean(s, 2) == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(rolling_mean(std::vector<double>(7, 3.0), 3) == std::vector<double>(5, 3.0));
  CHECK_THROWS_AS(rolling_mean(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(rolling_mean(s, 5), std::invalid_argument);

  RandomStream rng(4);
  std::vector<double> series(500);
  for (auto& v : series) v = rng.normal();
  for (std::size_t w : {1, 10, 77, 500}) {
    const auto got = rolling_mean(series, w);
    const auto want = oracle::rolling_mean(series, w);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
  }
  series[20] = std::numeric_limits<double>::infinity();
  const auto inf_run = rolling_mean(series, 10);
  CHECK(std::isinf(inf_run[11]));
  CHECK(std::isinf(inf_run[20]));
  CHECK(std::isfinite(inf_run[21]));
}

TEST_CASE("configuration checks") {
  SequentialConfig c;
  CHECK_NOTHROW(validate(c));
  c.alpha = 1.5;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.rho = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = {};
  c.grid_size = 1;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);

  const LabeledSeries d = generate_setting(SimulationSetting{1, 50}, RandomStream(1));
  SequentialConfig late;
  late.burn_in = 50;
  CHECK_THROWS_AS(run_sequential(d, default_methods(), late, RandomStream(1)), std::invalid_argument);
  CHECK_THROWS_AS(run_sequential(d, {}, SequentialConfig{}, RandomStream(1)), std::invalid_argument);
}

TEST_CASE("noiseless responses are covered by zero-width sets") {
  LabeledSeries d;
  d.x = Eigen::MatrixXd::Random(140, 4);
  d.y = Eigen::VectorXd::Zero(140);
  for (bool fast : {false, true}) {
    SequentialConfig c;
    c.fast_linear_path = fast;
    const ExperimentReport r = run_sequential(d, default_methods(), c, RandomStream(2));
    CHECK(r.records.size() == 40 * 3);
    for (const StepRecord& rec : r.records) {
      CHECK(rec.covered);
      CHECK(rec.width == 0.0);
    }
  }
}

TEST_CASE("unit weights collapse the weighted method onto the classic one") {
  const LabeledSeries d = generate_setting(SimulationSetting{2, 260}, RandomStream(9).derive(1));
  const std::vector<MethodSpec> methods{parse_method("CP+LS"), parse_method("nex-CP+LS")};
  SequentialConfig c;
  c.rho = 1.0;
  c.grid_size = 200;
  for (bool fast : {false, true}) {
    c.fast_linear_path = fast;
    const ExperimentReport r = run_sequential(d, methods, c, RandomStream(9));
    REQUIRE(r.records.size() % 2 == 0);
    for (std::size_t i = 0; i < r.records.size(); i += 2) {
      CHECK(r.records[i].covered == r.records[i + 1].covered);
      CHECK(r.records[i].width == r.records[i + 1].width);
    }
  }
}

TEST_CASE("records and summaries") {
  const LabeledSeries d = generate_setting(SimulationSetting{1, 160}, RandomStream(5).derive(1));
  SequentialConfig c;
  c.fast_linear_path = true;
  std::vector<MethodSpec> methods = default_methods();
  methods.push_back(parse_method("nex-J+WLS"));
  methods.push_back(parse_method("nex-CP+drift"));
  ExperimentReport r = run_sequential(d, methods, c, RandomStream(5), 4);
  REQUIRE(r.records.size() == 60 * methods.size());
  CHECK(r.records.front().time == 101);
  CHECK(r.records.front().trial == 4);
  CHECK(r.records.back().time == 160);
  summarize(r, 10);
  REQUIRE(r.summary.size() == methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    double cov = 0.0;
    double width = 0.0;
    for (const auto& rec : r.records) {
      if (rec.method != m) continue;
      cov += rec.covered;
      width += rec.width;
    }
    CHECK(r.summary[m].mean_coverage == doctest::Approx(cov / 60));
    CHECK(r.summary[m].mean_width == doctest::Approx(width / 60));
    CHECK(r.summary[m].mean_coverage >= 0.0);
    CHECK(r.summary[m].mean_coverage <= 1.0);
  }
  CHECK(r.rolling.size() == methods.size() * (60 - 10 + 1));
  CHECK(r.rolling.front().time == 110);
  CHECK_THROWS_AS(summarize(r, 61), std::invalid_argument);
}

TEST_CASE("per-step weights decay into the past") {
  for (std::size_t n : {1, 10, 150}) {
    const WeightProfile w = exponential_weights(n, 0.99);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(w.raw()[i] > 0.0);
      CHECK(w.raw()[i] <= 1.0);
      if (i > 0) CHECK(w.raw()[i - 1] <= w.raw()[i]);
    }
    CHECK(w.raw()[n - 1] == doctest::Approx(0.99));
  }
}

TEST_CASE("simulation output does not depend on threads or trial order") {
  SimulationRun run;
  run.setting = SimulationSetting{3, 150};
  run.trials = 4;
  run.seed = 77;
  run.config.fast_linear_path = true;
  run.threads = 1;
  const ExperimentReport a = run_simulation(run);
  run.threads = 3;
  const ExperimentReport b = run_simulation(run);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].trial == b.records[i].trial);
    CHECK(a.records[i].covered == b.records[i].covered);
    CHECK(a.records[i].width == b.records[i].width);
  }
  // A single trial run on its own reproduces its slice of the batch.
  const RandomStream trial = RandomStream(77).derive(3);
  const ExperimentReport alone =
      run_sequential(generate_setting(run.setting, trial), run.methods, run.config, trial, 3);
  std::size_t offset = 0;
  while (a.records[offset].trial != 3) ++offset;
  for (std::size_t i = 0; i < alone.records.size(); ++i) {
    CHECK(alone.records[i].width == a.records[offset + i].width);
  }
  run.trials = 0;
  CHECK_THROWS_AS(run_simulation(run), std::invalid_argument);
}

TEST_CASE("contamination experiment") {
  const FittedModel model = FittedModel::linear(Eigen::Vector2d(1.0, -1.0));
  const PointSampler target = [](RandomStream& s) {
    LabeledPoint p{Eigen::Vector2d(s.normal(), s.normal()), 0.0};
    p.y = p.x(0) - p.x(1) + s.normal();
    return p;
  };
  const PointSampler shifted = [&target](RandomStream& s) {
    LabeledPoint p = target(s);
    p.y += 100.0;
    return p;
  };
  const WeightProfile unit = unit_weights(50);
  const HuberResult clean = run_huber_experiment(target, shifted, 0.0, 50, 0.1, unit, 2000, model, RandomStream(1));
  CHECK(clean.bound == doctest::Approx(0.1));
  CHECK(std::abs(clean.miscoverage - 0.1) <= 3 * clean.standard_error);
  const HuberResult dirty = run_huber_experiment(target, shifted, 0.1, 50, 0.1, unit, 2000, model, RandomStream(1));
  CHECK(dirty.bound == doctest::Approx(0.1 / 0.9));
  CHECK(dirty.within_bound());
  CHECK(dirty.trials == 2000);
  CHECK_THROWS_AS(run_huber_experiment(target, shifted, 1.0, 50, 0.1, unit, 10, model, RandomStream(1)),
                  std::domain_error);
  CHECK_THROWS_AS(run_huber_experiment(target, shifted, 0.1, 49, 0.1, unit, 10, model, RandomStream(1)),
                  std::invalid_argument);
}

#include "nexcp/cli.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nexcp/diagnostics.hpp"
#include "nexcp/experiments.hpp"
#include "nexcp/ingest.hpp"
#include "nexcp/property_suite.hpp"
#include "nexcp/report_csv.hpp"

namespace nexcp {

namespace {

// Thrown for configurations rejected before any work starts.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int setting = 1;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  double alpha = 0.1;
  double rho = 0.99;
  std::size_t horizon = 2000;
  std::size_t burn_in = 100;
  std::optional<std::size_t> window;
  std::vector<std::string> methods{"CP+LS", "nex-CP+LS", "nex-CP+WLS"};
  std::size_t grid_size = 1000;
  double grid_padding = 0.5;
  bool fast_linear_path = false;
  std::size_t threads = 0;
  std::string out_dir = ".";

  std::string data;
  bool permute = false;
  std::size_t first_slot = 19;
  std::size_t last_slot = 24;
  bool keep_constant_prefix = false;
  double prefix_eps = 0.0;

  double eps = 0.0;
  std::size_t k = 0;
  std::size_t n = 100;
  double huber_rho = 1.0;

  std::size_t fuzz = 10'000;
};

void add_sequential_flags(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--seed", cfg.seed, "64-bit base seed");
  cmd.add_option("--alpha", cfg.alpha, "target miscoverage level");
  cmd.add_option("--rho", cfg.rho, "weight decay, w_i = rho^(n+1-i)");
  cmd.add_option("--burn-in", cfg.burn_in, "points before the first prediction");
  cmd.add_option("--window", cfg.window, "rolling window (default 10 for simulate, 300 for elec2)");
  cmd.add_option("--methods", cfg.methods, "comma-separated methods, e.g. CP+LS,nex-CP+WLS,nex-J+LS")->delimiter(',');
  cmd.add_option("--grid-size", cfg.grid_size, "candidate responses per full-conformal set");
  cmd.add_option("--grid-padding", cfg.grid_padding, "grid padding as a fraction of the response range");
  cmd.add_flag("--fast-linear-path", cfg.fast_linear_path, "exact interval unions for linear fits");
  cmd.add_option("--out", cfg.out_dir, "output directory");
}

SequentialConfig sequential_config(const RunConfig& cfg) {
  SequentialConfig sc;
  sc.alpha = cfg.alpha;
  sc.rho = cfg.rho;
  sc.burn_in = cfg.burn_in;
  sc.grid_size = cfg.grid_size;
  sc.grid_padding = cfg.grid_padding;
  sc.fast_linear_path = cfg.fast_linear_path;
  try {
    validate(sc);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return sc;
}

std::vector<MethodSpec> method_specs(const RunConfig& cfg) {
  if (cfg.methods.empty()) throw UsageError("no methods given");
  std::vector<MethodSpec> out;
  for (const auto& name : cfg.methods) {
    try {
      out.push_back(parse_method(name));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  SimulationRun run;
  run.config = sequential_config(cfg);
  run.methods = method_specs(cfg);
  if (cfg.setting < 1 || cfg.setting > 3) throw UsageError("--setting must be 1, 2 or 3");
  if (cfg.trials < 1) throw UsageError("--trials must be at least 1");
  if (cfg.burn_in >= cfg.horizon) throw UsageError("--burn-in must be below --N");
  run.setting.id = cfg.setting;
  run.setting.horizon = cfg.horizon;
  run.trials = cfg.trials;
  run.seed = cfg.seed;
  run.threads = cfg.threads;
  run.window = cfg.window.value_or(10);
  if (run.window < 1 || run.window > cfg.horizon - cfg.burn_in) {
    throw UsageError("--window must lie between 1 and N - burn-in");
  }
  const ExperimentReport report = run_simulation(run);
  write_report(cfg.out_dir, report);
  write_summary_csv(out, report);
  return kExitOk;
}

std::filesystem::path elec2_path(const RunConfig& cfg) {
  if (!cfg.data.empty()) return cfg.data;
  if (const char* dir = std::getenv("NEXCP_DATA_DIR"); dir != nullptr && *dir != '\0') {
    return std::filesystem::path(dir) / "elec2.csv";
  }
  throw UsageError("no ELEC2 file: pass --data or set NEXCP_DATA_DIR");
}

int cmd_elec2(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const SequentialConfig sc = sequential_config(cfg);
  const std::vector<MethodSpec> methods = method_specs(cfg);
  const std::size_t window = cfg.window.value_or(300);
  if (window < 1) throw UsageError("--window must be at least 1");
  Elec2Config ec;
  ec.first_slot = cfg.first_slot;
  ec.last_slot = cfg.last_slot;
  ec.drop_constant_prefix = !cfg.keep_constant_prefix;
  ec.prefix_epsilon = cfg.prefix_eps;
  if (ec.first_slot < 1 || ec.last_slot > 48 || ec.first_slot > ec.last_slot) {
    throw UsageError("slot window must satisfy 1 <= first <= last <= 48");
  }
  if (!(ec.prefix_epsilon >= 0.0)) throw UsageError("--prefix-eps must be nonnegative");

  Elec2Data loaded = load_elec2(elec2_path(cfg), ec);
  for (const auto& w : loaded.warnings) fmt::print(err, "warning: {}\n", w);
  const RandomStream base(cfg.seed);
  TaggedDataset data = loaded.data;
  if (cfg.permute) {
    RandomStream perm = base.derive(stream_id::kPermutation);
    data = permute_dataset(data, perm);
  }
  const LabeledSeries series{data.x(), data.y()};
  if (sc.burn_in >= series.size()) throw UsageError("--burn-in must be below the number of ELEC2 rows");
  if (window > series.size() - sc.burn_in) throw UsageError("--window exceeds the evaluated time points");
  ExperimentReport report = run_sequential(series, methods, sc, base.derive(1), 1);
  summarize(report, window);
  write_report(cfg.out_dir, report);
  write_summary_csv(out, report);
  return kExitOk;
}

void print_gap(std::ostream& out, const GapBound& b) {
  fmt::print(out, "exact_sum,closed_form\n{},{}\n", format_real(b.exact_sum), format_real(b.closed_form));
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& out) {
  if (cfg.fuzz < 1) throw UsageError("--fuzz must be at least 1");
  PropertySuiteOptions opt;
  opt.fuzz = cfg.fuzz;
  opt.seed = cfg.seed;
  bool all = true;
  for (const auto& r : run_property_suite(opt)) {
    fmt::print(out, "{} {} (cases={}, violations={})\n", r.passed() ? "PASS" : "FAIL", r.name, r.cases, r.violations);
    if (!r.passed()) {
      all = false;
      fmt::print(out, "  first failure: {}\n", r.first_failure);
    }
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-exchangeable conformal prediction experiments", "nexcp"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* simulate = app.add_subcommand("simulate", "simulated Settings 1-3, sequential evaluation");
  simulate->add_option("--setting", cfg.setting, "1 (i.i.d.), 2 (changepoints) or 3 (drift)");
  simulate->add_option("--trials", cfg.trials, "independent trials");
  simulate->add_option("--N", cfg.horizon, "time points per trial");
  simulate->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  add_sequential_flags(*simulate, cfg);

  auto* elec2 = app.add_subcommand("elec2", "sequential evaluation on the ELEC2 series");
  elec2->add_option("--data", cfg.data, "ELEC2 csv (default $NEXCP_DATA_DIR/elec2.csv)");
  elec2->add_flag("--permute", cfg.permute, "evaluate a random permutation of the series");
  elec2->add_option("--first-slot", cfg.first_slot, "first half-hour slot kept (1-48)");
  elec2->add_option("--last-slot", cfg.last_slot, "last half-hour slot kept (1-48)");
  elec2->add_flag("--keep-constant-prefix", cfg.keep_constant_prefix, "keep the leading constant-transfer rows");
  elec2->add_option("--prefix-eps", cfg.prefix_eps, "tolerance for the constant-prefix rule");
  add_sequential_flags(*elec2, cfg);

  auto* bounds = app.add_subcommand("bounds", "coverage-gap bound calculators");
  bounds->require_subcommand(1);
  auto* drift = bounds->add_subcommand("drift", "Lipschitz drift with w_i = rho^(n+1-i)");
  drift->add_option("--eps", cfg.eps, "per-step TV drift")->required();
  drift->add_option("--rho", cfg.rho, "weight decay in (0,1)")->required();
  drift->add_option("--n", cfg.n, "training points")->required();
  auto* change = bounds->add_subcommand("changepoint", "changepoint k steps before the test point");
  change->add_option("--rho", cfg.rho, "weight decay in (0,1)")->required();
  change->add_option("--k", cfg.k, "steps since the changepoint")->required();
  change->add_option("--n", cfg.n, "training points")->required();
  auto* huber = bounds->add_subcommand("huber", "multiplicative bound under contamination");
  huber->add_option("--alpha", cfg.alpha, "target miscoverage level");
  huber->add_option("--eps", cfg.eps, "contamination level d_mix for every training point")->required();
  huber->add_option("--rho", cfg.huber_rho, "weight decay in (0,1] (default 1)");
  huber->add_option("--n", cfg.n, "training points");

  auto* diagnose = app.add_subcommand("diagnose", "randomized checks of the finite-sample identities");
  diagnose->add_option("--fuzz", cfg.fuzz, "random cases per property");
  diagnose->add_option("--seed", cfg.seed, "64-bit seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (elec2->parsed()) return cmd_elec2(cfg, out, err);
    if (diagnose->parsed()) return cmd_diagnose(cfg, out);
    if (drift->parsed()) {
      print_gap(out, drift_gap_bound(cfg.eps, cfg.rho, cfg.n));
    } else if (change->parsed()) {
      print_gap(out, changepoint_gap_bound(cfg.rho, cfg.k, cfg.n));
    } else if (huber->parsed()) {
      if (!(cfg.huber_rho > 0.0 && cfg.huber_rho <= 1.0)) throw UsageError("--rho must lie in (0,1]");
      const WeightProfile profile = exponential_weights(cfg.n, cfg.huber_rho);
      const std::vector<double> dmix(cfg.n, cfg.eps);
      fmt::print(out, "bound\n{}\n", format_real(huber_bound(cfg.alpha, profile, dmix, 1)));
    }
    return kExitOk;
  } catch (const UsageError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::domain_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitFailure;
  }
}

}  // namespace nexcp

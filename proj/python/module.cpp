#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nexcp/conformal.hpp"
#include "nexcp/diagnostics.hpp"
#include "nexcp/experiments.hpp"
#include "nexcp/regression.hpp"
#include "nexcp/weights.hpp"

namespace py = pybind11;
using namespace nexcp;

namespace {

double as_double(const ExtendedReal& v) { return v.to_double(); }

TaggedAlgorithm algorithm_named(const std::string& name) {
  if (name == "ls") return least_squares_algorithm();
  if (name == "wls") return weighted_least_squares_algorithm();
  if (name == "drift") return linear_drift_algorithm();
  throw py::value_error("algorithm must be 'ls', 'wls' or 'drift'");
}

WeightProfile profile_or_unit(const std::optional<std::vector<double>>& weights, std::size_t n) {
  if (!weights) return unit_weights(n);
  if (weights->size() != n) throw py::value_error("need one weight per training point");
  return normalize_weights(*weights);
}

TaggedDataset dataset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const std::optional<Eigen::VectorXd>& tags) {
  if (x.rows() != y.size()) throw py::value_error("x and y lengths differ");
  Eigen::VectorXd t = tags ? *tags : Eigen::VectorXd::LinSpaced(y.size(), 1.0, static_cast<double>(y.size()));
  if (t.size() != y.size()) throw py::value_error("tags and y lengths differ");
  return TaggedDataset(x, y, std::move(t));
}

}  // namespace

PYBIND11_MODULE(_nexcp, m) {
  m.doc() = "Weighted conformal prediction with tag swapping";

  py::class_<WeightProfile>(m, "WeightProfile")
      .def_property_readonly("raw", [](const WeightProfile& w) { return std::vector<double>(w.raw().begin(), w.raw().end()); })
      .def_property_readonly("normalized", [](const WeightProfile& w) {
        return std::vector<double>(w.normalized().begin(), w.normalized().end());
      })
      .def_property_readonly("test_mass", &WeightProfile::test_mass)
      .def("__len__", &WeightProfile::n);

  m.def("normalize_weights", [](const std::vector<double>& w) { return normalize_weights(w); }, py::arg("weights"));
  m.def("exponential_weights", &exponential_weights, py::arg("n"), py::arg("rho"));

  m.def(
      "weighted_quantile",
      [](const std::vector<double>& values, const std::vector<double>& masses, double tau) {
        if (values.size() != masses.size()) throw py::value_error("values and masses differ in length");
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < values.size(); ++i) atoms.push_back({ExtendedReal::from_double(values[i]), masses[i]});
        return as_double(weighted_quantile(DiscreteDistribution(std::move(atoms)), tau));
      },
      py::arg("values"), py::arg("masses"), py::arg("tau"));

  py::class_<PredictionRegion>(m, "PredictionRegion")
      .def("contains", &PredictionRegion::contains, py::arg("y"))
      .def_property_readonly("width", &PredictionRegion::width)
      .def_property_readonly("lower", [](const PredictionRegion& r) { return as_double(r.lower()); })
      .def_property_readonly("upper", [](const PredictionRegion& r) { return as_double(r.upper()); })
      .def_property_readonly("empty", &PredictionRegion::empty)
      .def("__contains__", &PredictionRegion::contains);

  m.def(
      "split_conformal",
      [](const std::vector<double>& residuals, double prediction, std::optional<std::vector<double>> weights,
         double alpha) {
        return split_conformal(residuals, prediction, profile_or_unit(weights, residuals.size()), alpha);
      },
      py::arg("residuals"), py::arg("prediction"), py::arg("weights") = py::none(), py::arg("alpha") = 0.1);

  m.def(
      "full_conformal",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& test_x,
         std::optional<Eigen::VectorXd> tags, double test_tag, std::optional<std::vector<double>> weights,
         double alpha, const std::string& algorithm, std::uint64_t seed, bool fast, std::size_t grid_size) {
        const TaggedDataset train = dataset(x, y, tags);
        const TaggedAlgorithm alg = algorithm_named(algorithm);
        const WeightProfile profile = profile_or_unit(weights, train.size());
        RandomStream rng(seed);
        FullConformalOptions opt;
        opt.fast_linear_path = fast;
        const Grid grid = Grid::around(y, grid_size, 0.5);
        return full_conformal(train, {test_x, test_tag}, alg, profile, alpha, grid, rng, opt);
      },
      py::arg("x"), py::arg("y"), py::arg("test_x"), py::arg("tags") = py::none(), py::arg("test_tag") = 1.0,
      py::arg("weights") = py::none(), py::arg("alpha") = 0.1, py::arg("algorithm") = "ls", py::arg("seed") = 0,
      py::arg("fast_linear_path") = true, py::arg("grid_size") = 1000);

  m.def(
      "jackknife_plus",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& test_x,
         std::optional<Eigen::VectorXd> tags, double test_tag, std::optional<std::vector<double>> weights,
         double alpha, const std::string& algorithm, std::uint64_t seed) {
        const TaggedDataset train = dataset(x, y, tags);
        RandomStream rng(seed);
        return jackknife_plus(train, {test_x, test_tag}, algorithm_named(algorithm),
                              profile_or_unit(weights, train.size()), alpha, rng);
      },
      py::arg("x"), py::arg("y"), py::arg("test_x"), py::arg("tags") = py::none(), py::arg("test_tag") = 1.0,
      py::arg("weights") = py::none(), py::arg("alpha") = 0.1, py::arg("algorithm") = "ls", py::arg("seed") = 0);

  m.def("tv_distance", [](const std::vector<double>& p, const std::vector<double>& q) { return tv_discrete(p, q); });
  m.def("dmix_distance", [](const std::vector<double>& p, const std::vector<double>& q) { return dmix_discrete(p, q); });
  m.def("drift_gap_bound", [](double eps, double rho, std::size_t n) {
    const GapBound b = drift_gap_bound(eps, rho, n);
    return py::make_tuple(b.exact_sum, b.closed_form);
  }, py::arg("eps"), py::arg("rho"), py::arg("n"));
  m.def("changepoint_gap_bound", [](double rho, std::size_t k, std::size_t n) {
    const GapBound b = changepoint_gap_bound(rho, k, n);
    return py::make_tuple(b.exact_sum, b.closed_form);
  }, py::arg("rho"), py::arg("k"), py::arg("n"));
  m.def("huber_bound", [](double alpha, double eps, std::size_t n, double rho) {
    const std::vector<double> dmix(n, eps);
    return huber_bound(alpha, exponential_weights(n, rho), dmix, 1);
  }, py::arg("alpha"), py::arg("eps"), py::arg("n") = 100, py::arg("rho") = 1.0);

  m.def(
      "simulate",
      [](int setting, std::size_t trials, std::uint64_t seed, std::size_t horizon, double alpha, double rho,
         std::vector<std::string> methods, bool fast, std::size_t threads) {
        SimulationRun run;
        run.setting.id = setting;
        run.setting.horizon = horizon;
        run.trials = trials;
        run.seed = seed;
        run.threads = threads;
        run.config.alpha = alpha;
        run.config.rho = rho;
        run.config.fast_linear_path = fast;
        run.methods.clear();
        for (const auto& name : methods) run.methods.push_back(parse_method(name));
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = run_simulation(run);
        }
        py::dict out;
        for (const auto& s : report.summary) out[py::str(s.method)] = py::make_tuple(s.mean_coverage, s.mean_width);
        return out;
      },
      py::arg("setting") = 1, py::arg("trials") = 1, py::arg("seed") = 0, py::arg("N") = 2000, py::arg("alpha") = 0.1,
      py::arg("rho") = 0.99, py::arg("methods") = std::vector<std::string>{"CP+LS", "nex-CP+LS", "nex-CP+WLS"},
      py::arg("fast_linear_path") = true, py::arg("threads") = 1);

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const std::domain_error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const std::invalid_argument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "deepcv/config.hpp"
#include "deepcv/errors.hpp"
#include "deepcv/evaluation.hpp"
#include "deepcv/experiments.hpp"
#include "deepcv/margrabe.hpp"
#include "deepcv/solvers.hpp"

namespace py = pybind11;
using namespace deepcv;

namespace {

// JSON crosses the boundary as text; the Python side wraps it with json.loads.
ExperimentConfig config_from(const std::string& text) { return parse_config(nlohmann::json::parse(text)); }

RunOptions options_for(const std::optional<std::string>& output, const std::optional<std::string>& model,
                       bool exact_margrabe, std::optional<double> lambda) {
  RunOptions o;
  if (output) o.output = *output;
  if (model) o.model = *model;
  o.exact_margrabe = exact_margrabe;
  o.lambda = lambda;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Martingale control variates for Monte-Carlo option pricing";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("version", &library_version);
  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return preset(name).to_json().dump(); }, py::arg("name"));
  m.def("canonical_config", [](const std::string& text) { return config_from(text).to_json().dump(); },
        py::arg("config_json"), "Parses strictly and returns the canonical form.");
  m.def("config_hash", [](const std::string& text) { return config_from(text).hash(); }, py::arg("config_json"));

  m.def("margrabe_price", &margrabe_price, py::arg("s1"), py::arg("s2"), py::arg("maturity"), py::arg("sigma_bar"));
  m.def("margrabe_delta", &margrabe_delta, py::arg("s1"), py::arg("s2"), py::arg("maturity"), py::arg("sigma_bar"));

  m.def(
      "simulate",
      [](std::size_t dim, double rate, double sigma, double maturity, std::size_t steps, std::size_t n_paths,
         const Eigen::VectorXd& s0, std::uint64_t seed) {
        const MarketModel model = MarketModel::uncorrelated(dim, rate, sigma);
        const PathBatch p = simulate_paths(model, TimeGrid::uniform(maturity, steps), n_paths, InitialSampler::fixed(s0),
                                           RandomStream(seed));
        std::vector<Eigen::MatrixXd> states(p.states.begin(), p.states.end());
        return states;
      },
      py::arg("dim"), py::arg("rate"), py::arg("sigma"), py::arg("maturity"), py::arg("steps"), py::arg("n_paths"),
      py::arg("s0"), py::arg("seed") = 0, "Asset states per grid time, each d x n_paths.");

  m.def(
      "variance_chi2_ci",
      [](const std::vector<double>& samples, double alpha) {
        const Interval ci = variance_chi2_ci(samples, alpha);
        return std::make_pair(ci.lower, ci.upper);
      },
      py::arg("samples"), py::arg("alpha") = 0.05);
  m.def(
      "stopping_criterion",
      [](const std::vector<double>& history, std::size_t window, double epsilon) {
        return stopping_criterion(std::span<const double>(history), window, epsilon);
      },
      py::arg("history"), py::arg("window"), py::arg("epsilon"));

  m.def(
      "train",
      [](const std::string& text, std::optional<std::string> output) {
        const TrainRun run = run_train(config_from(text), options_for(output, std::nullopt, false, std::nullopt));
        return run.summary.string();
      },
      py::arg("config_json"), py::arg("output") = py::none(), py::call_guard<py::gil_scoped_release>(),
      "Trains and writes the model; returns the summary path.");
  m.def(
      "evaluate",
      [](const std::string& text, std::optional<std::string> output, std::optional<std::string> model,
         bool exact_margrabe, std::optional<double> lambda) {
        const EvaluateRun run = run_evaluate(config_from(text), options_for(output, model, exact_margrabe, lambda));
        return run.report.to_json().dump();
      },
      py::arg("config_json"), py::arg("output") = py::none(), py::arg("model") = py::none(),
      py::arg("exact_margrabe") = false, py::arg("lambda_") = py::none(), py::call_guard<py::gil_scoped_release>(),
      "Evaluates a trained (or the exact) control variate; returns the report as JSON text.");
}

#include "deepcv/control_variate.hpp"

#include <cmath>
#include <fstream>

#include "deepcv/checkpoint.hpp"
#include "deepcv/errors.hpp"
#include "deepcv/margrabe.hpp"

namespace deepcv {

MargrabeGradientField::MargrabeGradientField(MarketModel model) : model_(std::move(model)) {
  if (model_.dim() != 2) throw ConfigError("margrabe gradient field needs a two-asset model");
}

Eigen::MatrixXd MargrabeGradientField::gradient(std::size_t step, const PathBatch& paths) const {
  if (paths.dim() != 2) throw ConfigError("margrabe gradient field needs two-asset paths");
  const double tau = paths.grid.maturity() - paths.grid.time(step);
  const Eigen::MatrixXd& x = paths.states.at(step);
  Eigen::MatrixXd out(2, x.cols());
  for (Eigen::Index p = 0; p < x.cols(); ++p) {
    const double sigma_bar = exchange_sigma_bar(model_, paths.sigma(0, p), paths.sigma(1, p));
    const auto delta = margrabe_delta(x(0, p), x(1, p), tau, sigma_bar);
    out(0, p) = delta[0];
    out(1, p) = delta[1];
  }
  return out;
}

nlohmann::json MargrabeGradientField::describe() const {
  const Eigen::MatrixXd& c = model_.correlation();
  return {{"kind", "margrabe"}, {"correlation", {{c(0, 0), c(0, 1)}, {c(1, 0), c(1, 1)}}}};
}

std::string to_string(GradientSource source) {
  switch (source) {
    case GradientSource::PerStep: return "per_step";
    case GradientSource::Joint: return "joint";
    case GradientSource::ValueDerivative: return "value_derivative";
    case GradientSource::Analytic: return "analytic";
  }
  return "unknown";
}

GradientSource gradient_source_from_string(const std::string& name) {
  if (name == "per_step") return GradientSource::PerStep;
  if (name == "joint") return GradientSource::Joint;
  if (name == "value_derivative") return GradientSource::ValueDerivative;
  if (name == "analytic") return GradientSource::Analytic;
  throw CorruptCheckpoint("unknown gradient source '" + name + "'");
}

Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& states, const PathBatch& paths, const ExtraInputs& extras) {
  const auto d = states.rows();
  const int extra = extras.width(static_cast<std::size_t>(d));
  if (extra == 0) return states;
  Eigen::MatrixXd in(d + extra, states.cols());
  in.topRows(d) = states;
  Eigen::Index row = d;
  if (extras.sigma) {
    in.middleRows(row, d) = paths.sigma;
    row += d;
  }
  if (extras.rate) in.row(row) = paths.rate;
  return in;
}

Eigen::MatrixXd assemble_time_input(double t, const Eigen::MatrixXd& states, const PathBatch& paths,
                                    const ExtraInputs& extras) {
  const Eigen::MatrixXd body = assemble_input(states, paths, extras);
  Eigen::MatrixXd in(body.rows() + 1, body.cols());
  in.row(0).setConstant(t);
  in.bottomRows(body.rows()) = body;
  return in;
}

namespace {

void check_paths(const ControlVariateModel& cv, std::size_t step, const PathBatch& paths) {
  if (paths.dim() != cv.dim)
    throw ConfigError("control variate expects d = " + std::to_string(cv.dim) + ", paths have d = " +
                      std::to_string(paths.dim()));
  if (!(paths.grid == cv.grid)) throw ConfigError("control variate grid does not match the path grid");
  if (step < paths.first_step || step > paths.last_step || paths.states[step].size() == 0)
    throw ConfigError("paths do not cover grid index " + std::to_string(step));
}

Eigen::MatrixXd network_input(const ControlVariateModel& cv, bool joint, std::size_t step, const PathBatch& paths) {
  return joint ? assemble_time_input(cv.grid.time(step), paths.states[step], paths, cv.extras)
               : assemble_input(paths.states[step], paths, cv.extras);
}

}  // namespace

Eigen::MatrixXd ControlVariateModel::gradient(std::size_t step, const PathBatch& paths) const {
  check_paths(*this, step, paths);
  if (step >= grid.steps()) throw ConfigError("no gradient at the terminal time");
  switch (source) {
    case GradientSource::PerStep:
      if (step >= gradient_nets.size()) throw ConfigError("missing gradient network for step " + std::to_string(step));
      return forward(gradient_nets[step], network_input(*this, false, step, paths));
    case GradientSource::Joint:
      return forward(gradient_nets.at(0), network_input(*this, true, step, paths));
    case GradientSource::ValueDerivative: {
      const Network& net = joint_value ? value_nets.at(0) : value_nets.at(step);
      ForwardCache cache;
      const Eigen::MatrixXd out = forward(net, network_input(*this, joint_value, step, paths), cache);
      const Gradients g = backward(net, cache, Eigen::MatrixXd::Ones(1, out.cols()));
      return g.input.middleRows(joint_value ? 1 : 0, static_cast<Eigen::Index>(dim));
    }
    case GradientSource::Analytic:
      if (!field) throw ConfigError("analytic control variate without a gradient field");
      return field->gradient(step, paths);
  }
  throw ConfigError("unknown gradient source");
}

Eigen::RowVectorXd ControlVariateModel::value(std::size_t step, const PathBatch& paths) const {
  check_paths(*this, step, paths);
  if (value_nets.empty()) throw ConfigError("control variate has no value networks");
  const Network& net = joint_value ? value_nets[0] : value_nets.at(step);
  return forward(net, network_input(*this, joint_value, step, paths)).row(0);
}

void ControlVariateModel::validate() const {
  if (!std::isfinite(lambda)) throw ConfigError("control variate lambda must be finite");
  if (dim == 0) throw ConfigError("control variate dimension must be positive");
  const int base = static_cast<int>(dim) + extras.width(dim);
  for (const Network& net : gradient_nets) {
    if (net.output_width() != static_cast<int>(dim))
      throw ConfigError("gradient network output width " + std::to_string(net.output_width()) + " differs from d = " +
                        std::to_string(dim));
    if (net.input_width() != base + (source == GradientSource::Joint ? 1 : 0))
      throw ConfigError("gradient network input width does not match d and the extra inputs");
  }
  for (const Network& net : value_nets) {
    if (net.output_width() != 1) throw ConfigError("value network output width must be 1");
    if (net.input_width() != base + (joint_value ? 1 : 0))
      throw ConfigError("value network input width does not match d and the extra inputs");
  }
  switch (source) {
    case GradientSource::PerStep:
      if (gradient_nets.size() != grid.steps()) throw ConfigError("need one gradient network per time step");
      break;
    case GradientSource::Joint:
      if (gradient_nets.size() != 1) throw ConfigError("joint control variate needs exactly one gradient network");
      break;
    case GradientSource::ValueDerivative:
      if (joint_value ? value_nets.size() != 1 : value_nets.size() < grid.steps())
        throw ConfigError("value-derivative control variate needs value networks for every step");
      break;
    case GradientSource::Analytic:
      if (!field) throw ConfigError("analytic control variate without a gradient field");
      break;
  }
}

ControlVariateModel margrabe_control_variate(const MarketModel& model, const TimeGrid& grid) {
  ControlVariateModel cv;
  cv.grid = grid;
  cv.dim = model.dim();
  cv.source = GradientSource::Analytic;
  cv.field = std::make_shared<MargrabeGradientField>(model);
  cv.lambda = 1.0;
  cv.metadata = {{"algorithm", "margrabe"}};
  return cv;
}

namespace {

constexpr const char* kModelFormat = "deepcv-model";

std::string net_file(const char* kind, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.ckpt", index);
  return std::string(kind) + "/" + buf;
}

}  // namespace

void save_model(const ControlVariateModel& cv, const std::filesystem::path& dir) {
  cv.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir / "gradient", ec);
  std::filesystem::create_directories(dir / "value", ec);
  if (ec) throw IoError("cannot create model directory " + dir.string() + ": " + ec.message());

  nlohmann::json manifest = {
      {"format", kModelFormat},
      {"version", 1},
      {"dim", cv.dim},
      {"grid", cv.grid.times()},
      {"gradient_source", to_string(cv.source)},
      {"joint_value", cv.joint_value},
      {"lambda", cv.lambda},
      {"extra_inputs", {{"sigma", cv.extras.sigma}, {"rate", cv.extras.rate}}},
      {"metadata", cv.metadata},
  };
  nlohmann::json gradient_files = nlohmann::json::array();
  nlohmann::json value_files = nlohmann::json::array();
  const nlohmann::json net_meta = {{"extra_inputs", {{"sigma", cv.extras.sigma}, {"rate", cv.extras.rate}}},
                                   {"training", cv.metadata}};
  for (std::size_t k = 0; k < cv.gradient_nets.size(); ++k) {
    const std::string rel = net_file("gradient", k);
    save_checkpoint(cv.gradient_nets[k], dir / rel, net_meta);
    gradient_files.push_back(rel);
  }
  for (std::size_t k = 0; k < cv.value_nets.size(); ++k) {
    const std::string rel = net_file("value", k);
    save_checkpoint(cv.value_nets[k], dir / rel, net_meta);
    value_files.push_back(rel);
  }
  manifest["gradient_networks"] = gradient_files;
  manifest["value_networks"] = value_files;
  if (cv.field) manifest["field"] = cv.field->describe();

  std::ofstream os(dir / "model.json");
  if (!os) throw IoError("cannot write " + (dir / "model.json").string());
  os << manifest.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + (dir / "model.json").string());
}

ControlVariateModel load_model(const std::filesystem::path& path) {
  const std::filesystem::path manifest_path = std::filesystem::is_directory(path) ? path / "model.json" : path;
  const std::filesystem::path dir = manifest_path.parent_path();
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open model manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("model manifest is not valid JSON: " + std::string(e.what()));
  }

  ControlVariateModel cv;
  try {
    if (manifest.at("format").get<std::string>() != kModelFormat) throw CorruptCheckpoint("not a deepcv model manifest");
    cv.dim = manifest.at("dim").get<std::size_t>();
    cv.grid = TimeGrid(manifest.at("grid").get<std::vector<double>>());
    cv.source = gradient_source_from_string(manifest.at("gradient_source").get<std::string>());
    cv.joint_value = manifest.at("joint_value").get<bool>();
    cv.lambda = manifest.at("lambda").get<double>();
    cv.extras.sigma = manifest.at("extra_inputs").at("sigma").get<bool>();
    cv.extras.rate = manifest.at("extra_inputs").at("rate").get<bool>();
    cv.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& rel : manifest.at("gradient_networks"))
      cv.gradient_nets.push_back(load_checkpoint(dir / rel.get<std::string>()).network);
    for (const auto& rel : manifest.at("value_networks"))
      cv.value_nets.push_back(load_checkpoint(dir / rel.get<std::string>()).network);
    if (cv.source == GradientSource::Analytic) {
      const nlohmann::json& field = manifest.at("field");
      if (field.at("kind").get<std::string>() != "margrabe") throw CorruptCheckpoint("unknown gradient field");
      const auto rows = field.at("correlation").get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd corr(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) corr(i, j) = rows.at(i).at(j);
      cv.field = std::make_shared<MargrabeGradientField>(MarketModel(0.0, Eigen::VectorXd::Ones(2), corr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint("model manifest incomplete: " + std::string(e.what()));
  }
  try {
    cv.validate();
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("model manifest inconsistent: ") + e.what());
  }
  return cv;
}

}  // namespace deepcv

#include "deepcv/experiments.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "deepcv/errors.hpp"
#include "deepcv/margrabe.hpp"
#include "deepcv/moments.hpp"
#include "deepcv/normal.hpp"

namespace deepcv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kEvaluationStream = 0x3001;
constexpr std::uint64_t kPriceStream = 0x3002;
constexpr std::uint64_t kDiagnosticsStream = 0x3003;

fs::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  const fs::path dir = options.output.value_or(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

void finish_output(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream os = open_output(path);
  os << doc.dump(2) << '\n';
  finish_output(os, path);
}

void say(const RunOptions& options, const std::string& line) {
  if (options.log) *options.log << line << '\n' << std::flush;
}

json interval_json(const Interval& i) { return json::array({i.lower, i.upper}); }

ControlVariateModel control_variate_for(const ExperimentConfig& config, const RunOptions& options, const fs::path& out) {
  ControlVariateModel cv;
  if (options.exact_margrabe) {
    if (config.dim != 2 || config.payoff != PayoffKind::Exchange)
      throw ConfigError("--exact-margrabe requires the two-asset exchange payoff (config has d = " +
                        std::to_string(config.dim) + ")");
    cv = margrabe_control_variate(config.market(), config.grid());
  } else {
    cv = load_model(options.model.value_or(out / "model"));
  }
  if (cv.dim != config.dim)
    throw ConfigError("model dimension mismatch: expected d = " + std::to_string(config.dim) +
                      " from the config, model has d = " + std::to_string(cv.dim));
  return cv;
}

EvaluationOptions evaluation_options(const ExperimentConfig& config, const ControlVariateModel& cv,
                                     const RunOptions& options) {
  EvaluationOptions eo;
  eo.n_mc = config.evaluation.n_mc;
  eo.n_in = config.evaluation.n_in;
  eo.lambda_override = options.lambda;
  eo.threads = config.threads;
  eo.training_steps = cv.metadata.value("training_steps", std::uint64_t{0});
  eo.training_paths = cv.metadata.value("training_paths", std::uint64_t{0});
  return eo;
}

bool analytic_exchange(const ExperimentConfig& config) {
  return config.payoff == PayoffKind::Exchange && config.dim == 2 &&
         config.evaluation.initial.kind == InitialSampler::Kind::Fixed;
}

}  // namespace

std::string library_version() { return DEEPCV_VERSION; }

Reproducibility Reproducibility::of(const ExperimentConfig& config) {
  return {config.seed, config.hash(), library_version()};
}

json Reproducibility::to_json() const {
  return {{"seed", seed}, {"config_hash", config_hash}, {"version", version}};
}

std::string Reproducibility::csv_comment() const {
  return "# seed=" + std::to_string(seed) + ",config_hash=" + config_hash + ",version=" + version;
}

Interval mean_interval(const std::vector<double>& values, double* mean) {
  SampleMoments m;
  for (double v : values) m.add(v);
  if (mean) *mean = m.mean();
  if (m.count() < 2) return {m.mean(), m.mean()};
  const double half = student_t_quantile(0.975, static_cast<double>(m.count() - 1)) * m.std_error();
  return {m.mean() - half, m.mean() + half};
}

TrainRun run_train(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path out = output_dir(config, options);
  const Reproducibility repro = Reproducibility::of(config);
  TrainConfig tc = config.training();
  if (options.log) tc.log = [&](const std::string& line) { say(options, line); };
  say(options, "training " + algorithm_name(config.algorithm) + " on " + config.name);

  TrainRun run;
  run.result = train(config.algorithm, tc, config.market(), config.grid(), config.make_payoff());
  run.result.model.metadata["reproducibility"] = repro.to_json();
  run.result.model.metadata["config"] = config.to_json();

  run.model_dir = out / "model";
  save_model(run.result.model, run.model_dir);

  run.loss_csv = out / "loss.csv";
  {
    std::ofstream os = open_output(run.loss_csv);
    run.result.history.write_csv(os);
    os << repro.csv_comment() << '\n';
    finish_output(os, run.loss_csv);
  }

  json segments = json::array();
  for (const LossSegment& s : run.result.history.segments)
    segments.push_back({{"label", s.label}, {"step", s.step}, {"begin", s.begin}, {"end", s.end}, {"converged", s.converged}});
  run.summary = out / "train_summary.json";
  write_json(run.summary, {{"experiment", config.name},
                           {"algorithm", config.algorithm},
                           {"algorithm_name", algorithm_name(config.algorithm)},
                           {"training_steps", run.result.history.optimizer_steps()},
                           {"training_paths", run.result.history.paths_consumed()},
                           {"batch_size", run.result.history.batch_size},
                           {"converged", run.result.converged},
                           {"lambda", run.result.model.lambda},
                           {"final_loss", run.result.history.loss.empty() ? 0.0 : run.result.history.loss.back()},
                           {"segments", segments},
                           {"warnings", run.result.warnings},
                           {"reproducibility", repro.to_json()}});
  say(options, "wrote " + run.model_dir.string());
  return run;
}

EvaluateRun run_evaluate(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path out = output_dir(config, options);
  const Reproducibility repro = Reproducibility::of(config);
  const ControlVariateModel cv = control_variate_for(config, options, out);
  const EvaluationOptions eo = evaluation_options(config, cv, options);
  const RandomStream stream(config.seed, kEvaluationStream);
  const MarketModel market = config.market();
  const Payoff payoff = config.make_payoff();

  EvaluateRun run;
  run.report = evaluate(cv, market, payoff, config.evaluation.initial, stream, eo);
  say(options, "reduction factor " + std::to_string(run.report.reduction_factor));

  run.report_json = out / "report.json";
  json doc = run.report.to_json();
  doc["reproducibility"] = repro.to_json();
  write_json(run.report_json, doc);

  run.report_csv = out / "report.csv";
  {
    std::ofstream os = open_output(run.report_csv);
    os << EvaluationReport::csv_header() << '\n' << run.report.csv_row() << '\n' << repro.csv_comment() << '\n';
    finish_output(os, run.report_csv);
  }

  if (!config.evaluation.sigma_sweep.empty()) {
    run.sweep = robustness_sweep(cv, market, payoff, config.evaluation.initial, config.evaluation.sigma_sweep, stream, eo);
    run.sweep_csv = out / "sweep.csv";
    std::ofstream os = open_output(*run.sweep_csv);
    write_sweep_csv(os, run.sweep);
    os << repro.csv_comment() << '\n';
    finish_output(os, *run.sweep_csv);
  }
  return run;
}

PriceRun run_price(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path out = output_dir(config, options);
  const Reproducibility repro = Reproducibility::of(config);
  const ControlVariateModel cv = control_variate_for(config, options, out);
  const MarketModel market = config.market();
  const Payoff payoff = config.make_payoff();
  const InitialSampler& init = config.evaluation.initial;
  const double lambda = options.lambda.value_or(cv.lambda);
  const std::size_t reps = config.evaluation.price_repetitions;
  if (reps < 2) throw ConfigError("evaluation.price_repetitions: need at least 2 for an L2 error");

  PriceRun run;
  if (analytic_exchange(config)) {
    run.reference = margrabe_price(init.s0(0), init.s0(1), cv.grid.maturity() - cv.grid.start(),
                                   exchange_sigma_bar(market));
    run.reference_kind = "analytic";
  } else {
    const EvaluationOptions eo = evaluation_options(config, cv, options);
    run.reference = evaluate(cv, market, payoff, init, RandomStream(config.seed, kEvaluationStream), eo).estimator_mean;
    run.reference_kind = "monte-carlo";
  }

  const RandomStream stream(config.seed, kPriceStream);
  const bool direct = cv.has_value();
  SampleMoments pooled;
  SampleMoments direct_values;
  std::uint64_t offset = 0;
  for (std::size_t n : config.evaluation.price_samples) {
    PriceRow row;
    row.samples = n;
    SampleMoments plain_est, cv_est;
    double plain_sq = 0.0, cv_sq = 0.0, direct_sq = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      SimulationOptions sim;
      sim.path_offset = offset;
      offset += n;
      const PathBatch paths = simulate_paths(market, cv.grid, n, init, stream, sim);
      const CvSample s = cv_estimate(cv, paths, payoff, market, lambda);
      for (Eigen::Index p = 0; p < s.values.size(); ++p) pooled.add(s.values(p));
      const double plain = s.xi.mean(), controlled = s.values.mean();
      if (!std::isfinite(controlled)) throw NumericError("price: non-finite control variate estimate");
      plain_est.add(plain);
      cv_est.add(controlled);
      plain_sq += (plain - run.reference) * (plain - run.reference);
      cv_sq += (controlled - run.reference) * (controlled - run.reference);
      if (direct) {
        const double readout = cv.value(0, paths).mean();
        direct_values.add(readout);
        direct_sq += (readout - run.reference) * (readout - run.reference);
      }
    }
    const double count = static_cast<double>(reps);
    row.plain_l2 = std::sqrt(plain_sq / count);
    row.cv_l2 = std::sqrt(cv_sq / count);
    if (direct) row.direct_l2 = std::sqrt(direct_sq / count);
    row.plain_variance = plain_est.variance();
    row.cv_variance = cv_est.variance();
    row.cv_mean = cv_est.mean();
    run.rows.push_back(row);
  }
  run.price = pooled.mean();
  const double half = normal_quantile(0.975) * pooled.std_error();
  run.price_ci = {run.price - half, run.price + half};
  if (direct) run.direct = direct_values.mean();

  run.table_csv = out / "price.csv";
  {
    std::ofstream os = open_output(run.table_csv);
    os << "samples,plain_l2,cv_l2,direct_l2,plain_variance,cv_variance,cv_mean\n";
    for (const PriceRow& r : run.rows) {
      os << r.samples << ',' << r.plain_l2 << ',' << r.cv_l2 << ',';
      if (r.direct_l2) os << *r.direct_l2;
      os << ',' << r.plain_variance << ',' << r.cv_variance << ',' << r.cv_mean << '\n';
    }
    os << repro.csv_comment() << '\n';
    finish_output(os, run.table_csv);
  }
  run.summary = out / "price.json";
  write_json(run.summary, {{"price", run.price},
                           {"price_ci", interval_json(run.price_ci)},
                           {"reference", run.reference},
                           {"reference_kind", run.reference_kind},
                           {"direct_readout", run.direct ? json(*run.direct) : json(nullptr)},
                           {"lambda", lambda},
                           {"repetitions", reps},
                           {"reproducibility", repro.to_json()}});
  return run;
}

const DiagnosticsCell& DiagnosticsRun::cell(int layers, int width) const {
  for (const DiagnosticsCell& c : cells)
    if (c.layers == layers && c.width == width) return c;
  throw ConfigError("no diagnostics cell for " + std::to_string(layers) + " layers, width " + std::to_string(width));
}

FitErrors margrabe_fit_errors(const ControlVariateModel& cv, const MarketModel& model, const InitialSampler& init,
                              std::size_t samples, const RandomStream& stream) {
  if (cv.dim != 2 || model.dim() != 2) throw ConfigError("fit errors need the two-asset exchange model");
  SimulationOptions sim;
  sim.steps = {0, 0};
  const PathBatch x = simulate_paths(model, cv.grid, samples, init, stream, sim);
  const double tau = cv.grid.maturity() - cv.grid.start();
  const Eigen::RowVectorXd value = cv.value(0, x);
  const Eigen::MatrixXd grad = cv.gradient(0, x);
  double value_sq = 0.0, grad_sq = 0.0;
  for (std::size_t p = 0; p < samples; ++p) {
    const auto i = static_cast<Eigen::Index>(p);
    const double s1 = x.states[0](0, i), s2 = x.states[0](1, i);
    const double sigma_bar = exchange_sigma_bar(model, x.sigma(0, i), x.sigma(1, i));
    const double v = margrabe_price(s1, s2, tau, sigma_bar);
    const auto delta = margrabe_delta(s1, s2, tau, sigma_bar);
    value_sq += (value(i) - v) * (value(i) - v);
    grad_sq += (grad(0, i) - delta[0]) * (grad(0, i) - delta[0]) + (grad(1, i) - delta[1]) * (grad(1, i) - delta[1]);
  }
  const double n = static_cast<double>(samples);
  return {std::sqrt(value_sq / n), std::sqrt(grad_sq / n)};
}

DiagnosticsRun run_diagnostics(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (config.payoff != PayoffKind::Exchange || config.dim != 2)
    throw ConfigError("diagnose: payoff '" + config.make_payoff().name() +
                      "' has no closed-form benchmark; only the two-asset exchange option is supported");
  const DiagnosticsGridSpec& spec = config.diagnostics;
  const fs::path out = output_dir(config, options);
  const Reproducibility repro = Reproducibility::of(config);
  const MarketModel market = config.market();
  const TimeGrid grid = TimeGrid::uniform(spec.horizon, config.steps);
  const Payoff payoff = config.make_payoff();

  DiagnosticsRun run;
  std::uint64_t index = 0;
  for (int layers : spec.hidden_layers) {
    for (int width : spec.widths) {
      std::vector<double> value_errors, gradient_errors;
      for (std::size_t rep = 0; rep < spec.repetitions; ++rep, ++index) {
        TrainConfig tc = config.training();
        tc.seed = config.seed + 7919 * (index + 1);
        tc.epsilon = spec.epsilon;
        tc.architecture.joint_hidden_layers = layers;
        tc.architecture.hidden_width = width;
        const TrainResult result = train_mrs_joint(tc, market, grid, payoff);
        const FitErrors e = margrabe_fit_errors(result.model, market, tc.initial, spec.error_samples,
                                                RandomStream(config.seed, kDiagnosticsStream).substream(index));
        run.rows.push_back({layers, width, rep, e.value, e.gradient});
        value_errors.push_back(e.value);
        gradient_errors.push_back(e.gradient);
        std::ostringstream line;
        line << "layers " << layers << " width " << width << " rep " << rep << ": value " << e.value << " gradient "
             << e.gradient << " (" << result.history.optimizer_steps() << " steps)";
        say(options, line.str());
      }
      DiagnosticsCell cell;
      cell.layers = layers;
      cell.width = width;
      cell.value_ci = mean_interval(value_errors, &cell.value_mean);
      cell.gradient_ci = mean_interval(gradient_errors, &cell.gradient_mean);
      run.cells.push_back(cell);
    }
  }

  run.table_csv = out / "diagnostics.csv";
  {
    std::ofstream os = open_output(run.table_csv);
    os << "layers,width,repetition,l2_error_value,l2_error_gradient\n";
    for (const DiagnosticsRow& r : run.rows)
      os << r.layers << ',' << r.width << ',' << r.repetition << ',' << r.l2_error_value << ',' << r.l2_error_gradient
         << '\n';
    os << repro.csv_comment() << '\n';
    finish_output(os, run.table_csv);
  }
  json cells = json::array();
  for (const DiagnosticsCell& c : run.cells)
    cells.push_back({{"layers", c.layers},
                     {"width", c.width},
                     {"value_mean", c.value_mean},
                     {"value_ci", interval_json(c.value_ci)},
                     {"gradient_mean", c.gradient_mean},
                     {"gradient_ci", interval_json(c.gradient_ci)}});
  run.summary = out / "diagnostics_summary.json";
  write_json(run.summary, {{"horizon", spec.horizon},
                           {"steps", config.steps},
                           {"repetitions", spec.repetitions},
                           {"epsilon", spec.epsilon},
                           {"cells", cells},
                           {"reproducibility", repro.to_json()}});
  return run;
}

}  // namespace deepcv

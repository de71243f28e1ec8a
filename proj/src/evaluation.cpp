#include "deepcv/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "deepcv/errors.hpp"
#include "deepcv/normal.hpp"
#include "deepcv/parallel.hpp"

namespace deepcv {

Eigen::RowVectorXd discounted_payoff(const PathBatch& paths, const Payoff& payoff) {
  const std::size_t last = paths.last_step;
  const double horizon = paths.grid.time(last) - paths.grid.time(paths.first_step);
  Eigen::RowVectorXd xi = payoff.evaluate(paths.states.at(last));
  xi.array() *= (-paths.rate.array() * horizon).exp();
  return xi;
}

std::vector<Eigen::MatrixXd> discounted_noise_terms(const PathBatch& paths, const MarketModel& model) {
  if (paths.dim() != model.dim())
    throw ConfigError("paths have d = " + std::to_string(paths.dim()) + ", model has d = " +
                      std::to_string(model.dim()));
  std::vector<Eigen::MatrixXd> terms(paths.grid.steps());
  const double t0 = paths.grid.time(paths.first_step);
  for (std::size_t k = paths.first_step; k < paths.last_step; ++k) {
    terms[k] = diffusion_increment(model, paths, k);
    const Eigen::RowVectorXd disc = (-paths.rate.array() * (paths.grid.time(k) - t0)).exp();
    terms[k].array().rowwise() *= disc.array();
  }
  return terms;
}

Eigen::RowVectorXd martingale_sum(const ControlVariateModel& cv, const PathBatch& paths, const MarketModel& model) {
  if (!(paths.grid == cv.grid)) throw ConfigError("martingale_sum: path grid does not match the control variate grid");
  if (paths.dim() != cv.dim)
    throw ConfigError("martingale_sum: control variate expects d = " + std::to_string(cv.dim) + ", paths have d = " +
                      std::to_string(paths.dim()));
  Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(paths.n_paths()));
  const std::vector<Eigen::MatrixXd> terms = discounted_noise_terms(paths, model);
  for (std::size_t k = paths.first_step; k < paths.last_step; ++k)
    m += cv.gradient(k, paths).cwiseProduct(terms[k]).colwise().sum();
  return m;
}

CvSample cv_estimate(const ControlVariateModel& cv, const PathBatch& paths, const Payoff& payoff,
                     const MarketModel& model, std::optional<double> lambda_override) {
  CvSample out;
  out.lambda = lambda_override.value_or(cv.lambda);
  if (!std::isfinite(out.lambda)) throw ConfigError("cv_estimate: lambda must be finite");
  out.xi = discounted_payoff(paths, payoff);
  out.m = martingale_sum(cv, paths, model);
  out.values = out.xi - out.lambda * out.m;
  out.moments.add(std::span<const double>(out.values.data(), static_cast<std::size_t>(out.values.size())));
  return out;
}

LambdaEstimate optimal_lambda(std::span<const double> xi, std::span<const double> m) {
  if (xi.size() != m.size()) throw ConfigError("optimal_lambda: sample sizes differ");
  BivariateMoments mom;
  for (std::size_t i = 0; i < xi.size(); ++i) mom.add(xi[i], m[i]);
  if (!(mom.variance_y() > 0.0)) return {0.0, true};
  return {mom.covariance() / mom.variance_y(), false};
}

Interval variance_chi2_ci(std::span<const double> estimator_samples, double alpha) {
  if (estimator_samples.size() < 2) throw ConfigError("variance_chi2_ci: need at least two replications");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("variance_chi2_ci: alpha must lie in (0, 1)");
  SampleMoments mom;
  mom.add(estimator_samples);
  const double dof = static_cast<double>(estimator_samples.size() - 1);
  const double scaled = dof * mom.variance();
  return {scaled / chi_squared_quantile(1.0 - alpha / 2.0, dof), scaled / chi_squared_quantile(alpha / 2.0, dof)};
}

double EvaluationReport::difference_std_error() const {
  const double n = static_cast<double>(n_mc * n_in);
  return std::sqrt((plain_variance + cv_variance) / n);
}

nlohmann::json EvaluationReport::to_json() const {
  auto pair = [](const Interval& i) { return nlohmann::json::array({i.lower, i.upper}); };
  return {
      {"plain_variance", plain_variance},
      {"cv_variance", cv_variance},
      {"reduction_factor", reduction_factor},
      {"estimator_mean", estimator_mean},
      {"estimator_ci", pair(estimator_ci)},
      {"variance_ci_mc", pair(variance_ci_mc)},
      {"variance_ci_cv", pair(variance_ci_cv)},
      {"lambda", lambda},
      {"n_mc", n_mc},
      {"n_in", n_in},
      {"seed", seed},
      {"training_steps", training_steps},
      {"training_paths", training_paths},
      {"plain_mean", plain_mean},
      {"plain_ci", pair(plain_ci)},
      {"lambda_star", lambda_star},
  };
}

std::string EvaluationReport::csv_header() {
  return "plain_variance,cv_variance,reduction_factor,estimator_mean,estimator_ci_low,estimator_ci_high,"
         "variance_ci_mc_low,variance_ci_mc_high,variance_ci_cv_low,variance_ci_cv_high,lambda,n_mc,n_in,seed,"
         "training_steps,training_paths";
}

std::string EvaluationReport::csv_row() const {
  std::ostringstream os;
  os << std::setprecision(17) << plain_variance << ',' << cv_variance << ',' << reduction_factor << ','
     << estimator_mean << ',' << estimator_ci.lower << ',' << estimator_ci.upper << ',' << variance_ci_mc.lower << ','
     << variance_ci_mc.upper << ',' << variance_ci_cv.lower << ',' << variance_ci_cv.upper << ',' << lambda << ','
     << n_mc << ',' << n_in << ',' << seed << ',' << training_steps << ',' << training_paths;
  return os.str();
}

namespace {

struct ChunkResult {
  SampleMoments plain;
  SampleMoments controlled;
  BivariateMoments joint;  // (xi, m)
};

std::size_t default_chunk(std::size_t dim, std::size_t steps) {
  const std::size_t budget = std::size_t{1} << 21;  // doubles per state/increment array set
  return std::clamp<std::size_t>(budget / std::max<std::size_t>(1, dim * (steps + 1)), 256, 16384);
}

Interval mean_ci(const SampleMoments& m) {
  const double half = normal_quantile(0.975) * m.std_error();
  return {m.mean() - half, m.mean() + half};
}

}  // namespace

EvaluationReport evaluate(const ControlVariateModel& cv, const MarketModel& model, const Payoff& payoff,
                          const InitialSampler& init, const RandomStream& stream, const EvaluationOptions& options) {
  if (options.n_mc < 2) throw ConfigError("evaluate: n_mc must be at least 2");
  if (options.n_in < 2) throw ConfigError("evaluate: n_in must be at least 2");
  if (cv.dim != model.dim())
    throw ConfigError("model dimension mismatch: control variate expects d = " + std::to_string(cv.dim) +
                      ", market has d = " + std::to_string(model.dim()));
  payoff.validate(model.dim());
  const double lambda = options.lambda_override.value_or(cv.lambda);
  if (!std::isfinite(lambda)) throw ConfigError("evaluate: lambda must be finite");

  const std::size_t chunk = options.chunk > 0 ? options.chunk : default_chunk(model.dim(), cv.grid.steps());
  const std::size_t per_rep = (options.n_in + chunk - 1) / chunk;
  const std::size_t total = per_rep * options.n_mc;
  std::vector<ChunkResult> results(total);

  parallel_for(total, options.threads, [&](std::size_t job) {
    const std::size_t rep = job / per_rep;
    const std::size_t start = (job % per_rep) * chunk;
    const std::size_t count = std::min(chunk, options.n_in - start);
    SimulationOptions sim;
    sim.path_offset = static_cast<std::uint64_t>(rep) * options.n_in + start;
    sim.parameters = options.parameters;
    const PathBatch paths = simulate_paths(model, cv.grid, count, init, stream, sim);
    const Eigen::RowVectorXd xi = discounted_payoff(paths, payoff);
    const Eigen::RowVectorXd m = martingale_sum(cv, paths, model);
    ChunkResult& r = results[job];
    for (Eigen::Index p = 0; p < xi.size(); ++p) {
      const double v = xi(p) - lambda * m(p);
      if (!std::isfinite(v)) throw NumericError("evaluate: non-finite control variate sample");
      r.plain.add(xi(p));
      r.controlled.add(v);
      r.joint.add(xi(p), m(p));
    }
  });

  EvaluationReport report;
  report.n_mc = options.n_mc;
  report.n_in = options.n_in;
  report.seed = stream.seed();
  report.lambda = lambda;
  report.training_steps = options.training_steps;
  report.training_paths = options.training_paths;

  SampleMoments plain, controlled;
  BivariateMoments joint;
  for (std::size_t rep = 0; rep < options.n_mc; ++rep) {
    SampleMoments rep_plain, rep_cv;
    for (std::size_t c = 0; c < per_rep; ++c) {
      const ChunkResult& r = results[rep * per_rep + c];
      rep_plain.merge(r.plain);
      rep_cv.merge(r.controlled);
      joint.merge(r.joint);
    }
    report.plain_replicates.push_back(rep_plain.mean());
    report.cv_replicates.push_back(rep_cv.mean());
    plain.merge(rep_plain);
    controlled.merge(rep_cv);
  }

  report.plain_variance = plain.variance();
  report.cv_variance = controlled.variance();
  report.reduction_factor = report.cv_variance > 0.0 ? report.plain_variance / report.cv_variance
                                                     : std::numeric_limits<double>::infinity();
  report.estimator_mean = controlled.mean();
  report.estimator_ci = mean_ci(controlled);
  report.plain_mean = plain.mean();
  report.plain_ci = mean_ci(plain);
  report.variance_ci_mc = variance_chi2_ci(report.plain_replicates);
  report.variance_ci_cv = variance_chi2_ci(report.cv_replicates);
  report.lambda_star = joint.variance_y() > 0.0 ? joint.covariance() / joint.variance_y() : 0.0;
  return report;
}

std::vector<SweepRow> robustness_sweep(const ControlVariateModel& cv, const MarketModel& base_model,
                                       const Payoff& payoff, const InitialSampler& init,
                                       const std::vector<double>& sigma_values, const RandomStream& stream,
                                       const EvaluationOptions& options) {
  std::vector<SweepRow> rows;
  for (double sigma : sigma_values) {
    if (!(sigma > 0.0)) throw ConfigError("robustness_sweep: volatilities must be positive");
    const MarketModel model =
        base_model.with_sigma(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(base_model.dim()), sigma));
    rows.push_back({sigma, evaluate(cv, model, payoff, init, stream, options)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "sigma,factor,mean,ci_low,ci_high\n" << std::setprecision(17);
  for (const SweepRow& row : rows)
    os << row.sigma << ',' << row.report.reduction_factor << ',' << row.report.estimator_mean << ','
       << row.report.estimator_ci.lower << ',' << row.report.estimator_ci.upper << '\n';
}

}  // namespace deepcv

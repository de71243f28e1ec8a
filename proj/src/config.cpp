#include "deepcv/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "deepcv/checkpoint.hpp"
#include "deepcv/errors.hpp"

namespace deepcv {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

std::uint64_t unsigned_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

// A number broadcast to `dim` entries or an array of exactly `dim` numbers.
Eigen::VectorXd vector_or_scalar(const json& j, const std::string& path, std::size_t dim) {
  if (j.is_number()) return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), number(j, path));
  if (!j.is_array()) fail(path, "expected a number or an array of numbers");
  if (j.size() != dim)
    fail(path, "expected " + std::to_string(dim) + " entries, got " + std::to_string(j.size()));
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::optional<std::pair<double, double>> range(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) fail(path, "expected [low, high] or null");
  const double lo = number(j[0], path + "[0]"), hi = number(j[1], path + "[1]");
  if (!(lo <= hi)) fail(path, "low must not exceed high");
  return std::make_pair(lo, hi);
}

json range_json(const std::optional<std::pair<double, double>>& r) {
  return r ? json::array({r->first, r->second}) : json(nullptr);
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

PayoffKind payoff_kind(const std::string& name, const std::string& path) {
  if (name == "exchange") return PayoffKind::Exchange;
  if (name == "basket") return PayoffKind::Basket;
  if (name == "exchange_vs_average") return PayoffKind::ExchangeVsAverage;
  fail(path, "unknown payoff '" + name + "' (expected exchange, basket or exchange_vs_average)");
}

std::string payoff_name(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::Exchange: return "exchange";
    case PayoffKind::Basket: return "basket";
    case PayoffKind::ExchangeVsAverage: return "exchange_vs_average";
  }
  return "exchange";
}

json sampler_json(const InitialSampler& s) {
  if (s.kind == InitialSampler::Kind::Fixed) return {{"kind", "fixed"}, {"s0", vector_json(s.s0)}};
  return {{"kind", "lognormal"}, {"mu", s.mu}, {"tau", s.tau}, {"s0", vector_json(s.s0)}};
}

void read_sampler(const json& j, const std::string& path, std::size_t dim, InitialSampler& s) {
  check_keys(j, path, {"kind", "mu", "tau", "s0"});
  if (j.contains("kind")) {
    const std::string kind = string(j["kind"], join(path, "kind"));
    if (kind == "fixed")
      s.kind = InitialSampler::Kind::Fixed;
    else if (kind == "lognormal")
      s.kind = InitialSampler::Kind::LogNormal;
    else
      fail(join(path, "kind"), "expected fixed or lognormal");
  }
  if (j.contains("mu")) s.mu = number(j["mu"], join(path, "mu"));
  if (j.contains("tau")) s.tau = number(j["tau"], join(path, "tau"));
  if (j.contains("s0")) s.s0 = vector_or_scalar(j["s0"], join(path, "s0"), dim);
  if (s.kind == InitialSampler::Kind::Fixed && (j.contains("mu") || j.contains("tau")))
    fail(path, "mu and tau only apply to the lognormal sampler");
  if (s.tau < 0.0) fail(join(path, "tau"), "must be non-negative");
  for (Eigen::Index i = 0; i < s.s0.size(); ++i)
    if (!(s.s0(i) > 0.0)) fail(join(path, "s0"), "initial values must be positive");
}

void resize_sampler(InitialSampler& s, std::size_t dim) {
  if (static_cast<std::size_t>(s.s0.size()) != dim)
    s.s0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), s.s0.size() > 0 ? s.s0(0) : 1.0);
}

template <class T>
std::vector<T> list(const json& j, const std::string& path, T (*item)(const json&, const std::string&)) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::size_t size_value(const json& j, const std::string& path) {
  return static_cast<std::size_t>(unsigned_integer(j, path));
}

void apply(ExperimentConfig& c, const json& doc) {
  check_keys(doc, "", {"preset", "name", "seed", "threads", "output", "algorithm", "market", "payoff", "grid",
                       "training", "evaluation", "diagnostics"});
  if (doc.contains("name")) c.name = string(doc["name"], "name");
  if (doc.contains("seed")) c.seed = unsigned_integer(doc["seed"], "seed");
  if (doc.contains("threads")) c.threads = size_value(doc["threads"], "threads");
  if (doc.contains("output")) c.output = string(doc["output"], "output");
  if (doc.contains("algorithm")) c.algorithm = integer(doc["algorithm"], "algorithm");

  if (doc.contains("market")) {
    const json& m = doc["market"];
    check_keys(m, "market", {"dim", "rate", "sigma", "correlation"});
    if (m.contains("dim")) {
      const std::size_t dim = size_value(m["dim"], "market.dim");
      if (dim < 1) fail("market.dim", "must be at least 1");
      if (dim != c.dim) {
        c.dim = dim;
        c.sigma = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), c.sigma.size() ? c.sigma(0) : 0.3);
        c.correlation = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        resize_sampler(c.train.initial, dim);
        resize_sampler(c.evaluation.initial, dim);
      }
    }
    if (m.contains("rate")) c.rate = number(m["rate"], "market.rate");
    if (m.contains("sigma")) c.sigma = vector_or_scalar(m["sigma"], "market.sigma", c.dim);
    if (m.contains("correlation") && !m["correlation"].is_null()) {
      const json& rows = m["correlation"];
      if (!rows.is_array() || rows.size() != c.dim) fail("market.correlation", "expected a d x d array");
      Eigen::MatrixXd corr(static_cast<Eigen::Index>(c.dim), static_cast<Eigen::Index>(c.dim));
      for (std::size_t i = 0; i < c.dim; ++i)
        corr.row(static_cast<Eigen::Index>(i)) =
            vector_or_scalar(rows[i], "market.correlation[" + std::to_string(i) + "]", c.dim).transpose();
      c.correlation = corr;
    }
  }
  if (doc.contains("payoff")) {
    const json& p = doc["payoff"];
    check_keys(p, "payoff", {"kind", "strike"});
    if (p.contains("kind")) c.payoff = payoff_kind(string(p["kind"], "payoff.kind"), "payoff.kind");
    if (p.contains("strike")) c.strike = number(p["strike"], "payoff.strike");
  }
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    check_keys(g, "grid", {"maturity", "steps"});
    if (g.contains("maturity")) c.maturity = number(g["maturity"], "grid.maturity");
    if (g.contains("steps")) c.steps = size_value(g["steps"], "grid.steps");
  }
  if (doc.contains("training")) {
    const json& t = doc["training"];
    const std::string p = "training";
    check_keys(t, p, {"batch_size", "epsilon", "window", "max_iterations", "learning_rate", "architecture",
                      "warm_start", "estimate_lambda", "initial", "parameters"});
    TrainConfig& tc = c.train;
    if (t.contains("batch_size")) tc.batch_size = size_value(t["batch_size"], "training.batch_size");
    if (t.contains("epsilon")) tc.epsilon = number(t["epsilon"], "training.epsilon");
    if (t.contains("window")) tc.window = size_value(t["window"], "training.window");
    if (t.contains("max_iterations")) tc.max_iterations = size_value(t["max_iterations"], "training.max_iterations");
    if (t.contains("warm_start")) tc.warm_start = boolean(t["warm_start"], "training.warm_start");
    if (t.contains("estimate_lambda")) tc.estimate_lambda = boolean(t["estimate_lambda"], "training.estimate_lambda");
    if (t.contains("learning_rate")) {
      const json& lr = t["learning_rate"];
      check_keys(lr, "training.learning_rate", {"initial", "decayed", "boundary"});
      if (lr.contains("initial")) tc.schedule.initial = number(lr["initial"], "training.learning_rate.initial");
      if (lr.contains("decayed")) tc.schedule.decayed = number(lr["decayed"], "training.learning_rate.decayed");
      if (lr.contains("boundary"))
        tc.schedule.boundary = unsigned_integer(lr["boundary"], "training.learning_rate.boundary");
    }
    if (t.contains("architecture")) {
      const json& a = t["architecture"];
      const std::string ap = "training.architecture";
      check_keys(a, ap, {"hidden_layers", "width_offset", "hidden_width", "batchnorm", "output_bn_affine",
                         "joint_hidden_layers"});
      ArchitectureSpec& arch = tc.architecture;
      if (a.contains("hidden_layers")) arch.hidden_layers = integer(a["hidden_layers"], ap + ".hidden_layers");
      if (a.contains("width_offset")) arch.width_offset = integer(a["width_offset"], ap + ".width_offset");
      if (a.contains("hidden_width"))
        arch.hidden_width = a["hidden_width"].is_null() ? std::nullopt
                                                        : std::optional<int>(integer(a["hidden_width"], ap + ".hidden_width"));
      if (a.contains("batchnorm")) arch.batchnorm = boolean(a["batchnorm"], ap + ".batchnorm");
      if (a.contains("output_bn_affine"))
        arch.output_bn_affine = boolean(a["output_bn_affine"], ap + ".output_bn_affine");
      if (a.contains("joint_hidden_layers"))
        arch.joint_hidden_layers = a["joint_hidden_layers"].is_null()
                                       ? std::nullopt
                                       : std::optional<int>(integer(a["joint_hidden_layers"], ap + ".joint_hidden_layers"));
    }
    if (t.contains("initial")) read_sampler(t["initial"], "training.initial", c.dim, tc.initial);
    if (t.contains("parameters")) {
      const json& pr = t["parameters"];
      if (pr.is_null()) {
        tc.parameters.reset();
      } else {
        check_keys(pr, "training.parameters", {"sigma", "rate"});
        ParameterRanges ranges = tc.parameters.value_or(ParameterRanges{});
        if (pr.contains("sigma")) ranges.sigma = range(pr["sigma"], "training.parameters.sigma");
        if (pr.contains("rate")) ranges.rate = range(pr["rate"], "training.parameters.rate");
        if (ranges.sigma && !(ranges.sigma->first > 0.0))
          fail("training.parameters.sigma", "volatilities must be positive");
        tc.parameters = ranges.any() ? std::optional<ParameterRanges>(ranges) : std::nullopt;
      }
    }
  }
  if (doc.contains("evaluation")) {
    const json& e = doc["evaluation"];
    check_keys(e, "evaluation", {"n_mc", "n_in", "initial", "sigma_sweep", "price_samples", "price_repetitions"});
    EvaluationSpec& es = c.evaluation;
    if (e.contains("n_mc")) es.n_mc = size_value(e["n_mc"], "evaluation.n_mc");
    if (e.contains("n_in")) es.n_in = size_value(e["n_in"], "evaluation.n_in");
    if (e.contains("initial")) read_sampler(e["initial"], "evaluation.initial", c.dim, es.initial);
    if (e.contains("sigma_sweep")) es.sigma_sweep = list<double>(e["sigma_sweep"], "evaluation.sigma_sweep", &number);
    if (e.contains("price_samples"))
      es.price_samples = list<std::size_t>(e["price_samples"], "evaluation.price_samples", &size_value);
    if (e.contains("price_repetitions"))
      es.price_repetitions = size_value(e["price_repetitions"], "evaluation.price_repetitions");
  }
  if (doc.contains("diagnostics")) {
    const json& d = doc["diagnostics"];
    check_keys(d, "diagnostics", {"hidden_layers", "widths", "repetitions", "epsilon", "horizon", "error_samples"});
    DiagnosticsGridSpec& ds = c.diagnostics;
    if (d.contains("hidden_layers")) ds.hidden_layers = list<int>(d["hidden_layers"], "diagnostics.hidden_layers", &integer);
    if (d.contains("widths")) ds.widths = list<int>(d["widths"], "diagnostics.widths", &integer);
    if (d.contains("repetitions")) ds.repetitions = size_value(d["repetitions"], "diagnostics.repetitions");
    if (d.contains("epsilon")) ds.epsilon = number(d["epsilon"], "diagnostics.epsilon");
    if (d.contains("horizon")) ds.horizon = number(d["horizon"], "diagnostics.horizon");
    if (d.contains("error_samples")) ds.error_samples = size_value(d["error_samples"], "diagnostics.error_samples");
  }
}

ExperimentConfig base_exchange2d() {
  ExperimentConfig c;
  c.name = "exchange2d";
  c.dim = 2;
  c.rate = 0.05;
  c.sigma = Eigen::VectorXd::Constant(2, 0.3);
  c.correlation = Eigen::MatrixXd::Identity(2, 2);
  c.payoff = PayoffKind::Exchange;
  c.maturity = 0.5;
  c.steps = 50;
  c.algorithm = 4;
  c.train.initial = InitialSampler::lognormal(0.08, 0.1, Eigen::VectorXd::Ones(2));
  c.evaluation.n_in = 1000000;
  c.evaluation.initial = InitialSampler::fixed(Eigen::VectorXd::Ones(2));
  c.evaluation.sigma_sweep = {0.2, 0.25, 0.3, 0.35, 0.4};
  c.output = "out/exchange2d";
  return c;
}

ExperimentConfig with_dim(ExperimentConfig c, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  c.dim = dim;
  c.sigma = Eigen::VectorXd::Constant(d, c.sigma(0));
  c.correlation = Eigen::MatrixXd::Identity(d, d);
  resize_sampler(c.train.initial, dim);
  resize_sampler(c.evaluation.initial, dim);
  return c;
}

ExperimentConfig basket(std::size_t dim) {
  ExperimentConfig c = with_dim(base_exchange2d(), dim);
  c.name = "basket" + std::to_string(dim) + "d";
  c.rate = 0.5;
  c.sigma.setConstant(1.0);
  c.payoff = PayoffKind::Basket;
  c.strike = 0.7 * static_cast<double>(dim);
  c.train.initial = InitialSampler::fixed(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), 0.7));
  c.evaluation.initial = c.train.initial;
  c.evaluation.sigma_sweep = {0.8, 0.9, 1.0, 1.1, 1.2};
  c.output = "out/" + c.name;
  return c;
}

ExperimentConfig desk(ExperimentConfig c) {
  c.name += "-desk";
  c.train.batch_size /= 10;
  c.train.epsilon = 1e-4;
  c.evaluation.n_in /= 10;
  c.output = c.output.string() + "-desk";
  return c;
}

ExperimentConfig make_preset(const std::string& name) {
  if (name == "exchange2d") return base_exchange2d();
  if (name == "exchange2d-random-sigma") {
    ExperimentConfig c = base_exchange2d();
    c.name = name;
    c.train.parameters = ParameterRanges{std::make_pair(0.2, 0.4), std::nullopt};
    c.output = "out/" + name;
    return c;
  }
  if (name == "exchange100d") {
    ExperimentConfig c = with_dim(base_exchange2d(), 100);
    c.name = name;
    c.payoff = PayoffKind::ExchangeVsAverage;
    c.output = "out/exchange100d";
    return c;
  }
  if (name == "basket2d") return basket(2);
  if (name == "basket100d") return basket(100);
  if (name == "diagnostics") {
    ExperimentConfig c = base_exchange2d();
    c.name = name;
    c.algorithm = 5;
    c.maturity = 1.0 / 365.0;
    c.steps = 10;
    c.output = "out/diagnostics";
    return c;
  }
  const std::string suffix = "-desk";
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    ExperimentConfig c = desk(make_preset(name.substr(0, name.size() - suffix.size())));
    if (c.name == "diagnostics-desk") {
      c.diagnostics.hidden_layers = {1, 2};
      c.diagnostics.widths = {4, 8, 16};
      c.diagnostics.repetitions = 2;
    }
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace

void DiagnosticsGridSpec::validate() const {
  if (hidden_layers.empty() || widths.empty()) throw ConfigError("diagnostics: grid must not be empty");
  if (repetitions < 1) throw ConfigError("diagnostics.repetitions: must be at least 1");
  for (int l : hidden_layers)
    if (l < 1) throw ConfigError("diagnostics.hidden_layers: entries must be at least 1");
  for (int w : widths)
    if (w < 1) throw ConfigError("diagnostics.widths: entries must be at least 1");
  if (!(epsilon > 0.0)) throw ConfigError("diagnostics.epsilon: must be positive");
  if (!(horizon > 0.0)) throw ConfigError("diagnostics.horizon: must be positive");
  if (error_samples < 2) throw ConfigError("diagnostics.error_samples: must be at least 2");
}

MarketModel ExperimentConfig::market() const { return MarketModel(rate, sigma, correlation); }

Payoff ExperimentConfig::make_payoff() const {
  switch (payoff) {
    case PayoffKind::Exchange: return Payoff::exchange();
    case PayoffKind::Basket: return Payoff::basket(strike);
    case PayoffKind::ExchangeVsAverage: return Payoff::exchange_vs_average();
  }
  return Payoff::exchange();
}

TimeGrid ExperimentConfig::grid() const { return TimeGrid::uniform(maturity, steps); }

TrainConfig ExperimentConfig::training() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw ConfigError("market.dim: must be at least 1");
  if (static_cast<std::size_t>(sigma.size()) != dim) throw ConfigError("market.sigma: expected d entries");
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (!(sigma(i) >= 0.0)) throw ConfigError("market.sigma: volatilities must be non-negative");
  try {
    (void)market();
  } catch (const Error& e) {
    throw ConfigError(std::string("market.correlation: ") + e.what());
  }
  make_payoff().validate(dim);
  if (!(maturity > 0.0)) throw ConfigError("grid.maturity: must be positive");
  if (steps < 1) throw ConfigError("grid.steps: must be at least 1");
  if (algorithm < 1 || algorithm > 7)
    throw ConfigError("algorithm: " + std::to_string(algorithm) + " is not one of 1..7");
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("training: ") + e.what());
  }
  if (static_cast<std::size_t>(train.initial.s0.size()) != dim) throw ConfigError("training.initial.s0: expected d entries");
  if (static_cast<std::size_t>(evaluation.initial.s0.size()) != dim)
    throw ConfigError("evaluation.initial.s0: expected d entries");
  if (evaluation.n_mc < 2) throw ConfigError("evaluation.n_mc: must be at least 2");
  if (evaluation.n_in < 2) throw ConfigError("evaluation.n_in: must be at least 2");
  for (double s : evaluation.sigma_sweep)
    if (!(s > 0.0)) throw ConfigError("evaluation.sigma_sweep: volatilities must be positive");
  for (std::size_t n : evaluation.price_samples)
    if (n < 1) throw ConfigError("evaluation.price_samples: counts must be positive");
  diagnostics.validate();
}

json ExperimentConfig::to_json() const {
  json corr = json::array();
  for (Eigen::Index i = 0; i < correlation.rows(); ++i) corr.push_back(vector_json(correlation.row(i).transpose()));
  const ArchitectureSpec& a = train.architecture;
  json params = nullptr;
  if (train.parameters) params = {{"sigma", range_json(train.parameters->sigma)}, {"rate", range_json(train.parameters->rate)}};
  return {
      {"name", name},
      {"seed", seed},
      {"threads", threads},
      {"output", output.string()},
      {"algorithm", algorithm},
      {"market", {{"dim", dim}, {"rate", rate}, {"sigma", vector_json(sigma)}, {"correlation", corr}}},
      {"payoff", {{"kind", payoff_name(payoff)}, {"strike", strike}}},
      {"grid", {{"maturity", maturity}, {"steps", steps}}},
      {"training",
       {{"batch_size", train.batch_size},
        {"epsilon", train.epsilon},
        {"window", train.window},
        {"max_iterations", train.max_iterations},
        {"learning_rate",
         {{"initial", train.schedule.initial}, {"decayed", train.schedule.decayed}, {"boundary", train.schedule.boundary}}},
        {"architecture",
         {{"hidden_layers", a.hidden_layers},
          {"width_offset", a.width_offset},
          {"hidden_width", a.hidden_width ? json(*a.hidden_width) : json(nullptr)},
          {"batchnorm", a.batchnorm},
          {"output_bn_affine", a.output_bn_affine},
          {"joint_hidden_layers", a.joint_hidden_layers ? json(*a.joint_hidden_layers) : json(nullptr)}}},
        {"warm_start", train.warm_start},
        {"estimate_lambda", train.estimate_lambda},
        {"initial", sampler_json(train.initial)},
        {"parameters", params}}},
      {"evaluation",
       {{"n_mc", evaluation.n_mc},
        {"n_in", evaluation.n_in},
        {"initial", sampler_json(evaluation.initial)},
        {"sigma_sweep", evaluation.sigma_sweep},
        {"price_samples", evaluation.price_samples},
        {"price_repetitions", evaluation.price_repetitions}}},
      {"diagnostics",
       {{"hidden_layers", diagnostics.hidden_layers},
        {"widths", diagnostics.widths},
        {"repetitions", diagnostics.repetitions},
        {"epsilon", diagnostics.epsilon},
        {"horizon", diagnostics.horizon},
        {"error_samples", diagnostics.error_samples}}},
  };
}

std::string ExperimentConfig::hash() const {
  // where results go and how many threads compute them do not change the results
  json doc = to_json();
  doc.erase("output");
  doc.erase("threads");
  const std::string text = doc.dump();
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a64(text.data(), text.size());
  return os.str();
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c = doc.contains("preset") ? make_preset(string(doc["preset"], "preset")) : ExperimentConfig{};
  if (!doc.contains("preset")) {
    c.train.initial = InitialSampler::fixed(Eigen::VectorXd::Ones(2));
    c.evaluation.initial = InitialSampler::fixed(Eigen::VectorXd::Ones(2));
  }
  apply(c, doc);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::vector<std::string> preset_names() {
  return {"exchange2d", "exchange2d-desk", "exchange2d-random-sigma", "exchange2d-random-sigma-desk",
          "exchange100d", "exchange100d-desk", "basket2d", "basket2d-desk", "basket100d", "basket100d-desk",
          "diagnostics", "diagnostics-desk"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c = make_preset(name);
  c.validate();
  return c;
}

}  // namespace deepcv

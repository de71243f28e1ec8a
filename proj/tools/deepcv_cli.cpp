#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "deepcv/config.hpp"
#include "deepcv/errors.hpp"
#include "deepcv/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3, kIo = 4 };

struct Flags {
  std::string config;
  std::string preset;
  std::optional<int> algo;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::string model;
  bool exact_margrabe = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment JSON file");
  cmd->add_option("--preset", f.preset, "named experiment (see `deepcv presets`)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads (1 = bit-exact)");
  cmd->add_flag("--quiet,-q", f.quiet, "no progress output");
}

void add_model(CLI::App* cmd, Flags& f) {
  cmd->add_option("--model", f.model, "model directory or manifest (default <out>/model)");
  cmd->add_flag("--exact-margrabe", f.exact_margrabe, "use the closed-form exchange delta");
  cmd->add_option("--lambda", f.lambda, "override the control variate coefficient");
}

std::string algorithm_list() {
  std::string s;
  for (int a = 1; a <= 7; ++a) s += "  " + std::to_string(a) + "  " + deepcv::algorithm_name(a) + "\n";
  return s;
}

deepcv::ExperimentConfig resolve(const Flags& f) {
  if (!f.config.empty() && !f.preset.empty()) throw deepcv::ConfigError("give either --config or --preset, not both");
  if (f.config.empty() && f.preset.empty()) throw deepcv::ConfigError("one of --config or --preset is required");
  deepcv::ExperimentConfig c = f.config.empty() ? deepcv::preset(f.preset) : deepcv::load_config(f.config);
  if (f.algo) {
    if (*f.algo < 1 || *f.algo > 7)
      throw deepcv::ConfigError("--algo " + std::to_string(*f.algo) + " is not an algorithm; choose one of\n" +
                                algorithm_list());
    c.algorithm = *f.algo;
  }
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.epsilon) c.train.epsilon = *f.epsilon;
  if (!f.out.empty()) c.output = f.out;
  c.validate();
  return c;
}

deepcv::RunOptions run_options(const Flags& f) {
  deepcv::RunOptions o;
  if (!f.model.empty()) o.model = f.model;
  o.exact_margrabe = f.exact_margrabe;
  o.lambda = f.lambda;
  if (!f.quiet) o.log = &std::cerr;
  return o;
}

void print_presets() {
  for (const std::string& name : deepcv::preset_names()) {
    const deepcv::ExperimentConfig c = deepcv::preset(name);
    std::cout << std::left << std::setw(30) << name << " d=" << c.dim << " " << c.make_payoff().name()
              << " T=" << c.maturity << " steps=" << c.steps << " algo=" << c.algorithm
              << " batch=" << c.train.batch_size << '\n';
  }
}

int dispatch(const CLI::App& app, const Flags& f) {
  if (app.got_subcommand("presets")) {
    print_presets();
    return kOk;
  }
  const deepcv::ExperimentConfig config = resolve(f);
  const deepcv::RunOptions options = run_options(f);
  std::cout << std::setprecision(8);
  if (app.got_subcommand("train")) {
    const deepcv::TrainRun run = deepcv::run_train(config, options);
    std::cout << "model " << run.model_dir.string() << "\nsteps " << run.result.history.optimizer_steps()
              << "\nconverged " << (run.result.converged ? "yes" : "no") << '\n';
  } else if (app.got_subcommand("evaluate")) {
    const deepcv::EvaluateRun run = deepcv::run_evaluate(config, options);
    std::cout << run.report.to_json().dump(2) << '\n';
    if (run.sweep_csv) std::cout << "sweep " << run.sweep_csv->string() << '\n';
  } else if (app.got_subcommand("price")) {
    const deepcv::PriceRun run = deepcv::run_price(config, options);
    std::cout << "price " << run.price << " [" << run.price_ci.lower << ", " << run.price_ci.upper << "]\n"
              << run.reference_kind << " reference " << run.reference << '\n'
              << "samples plain_l2 cv_l2 direct_l2\n";
    for (const deepcv::PriceRow& r : run.rows)
      std::cout << r.samples << ' ' << r.plain_l2 << ' ' << r.cv_l2 << ' '
                << (r.direct_l2 ? std::to_string(*r.direct_l2) : "-") << '\n';
  } else if (app.got_subcommand("diagnose")) {
    const deepcv::DiagnosticsRun run = deepcv::run_diagnostics(config, options);
    std::cout << "layers width value_mean gradient_mean\n";
    for (const deepcv::DiagnosticsCell& c : run.cells)
      std::cout << c.layers << ' ' << c.width << ' ' << c.value_mean << ' ' << c.gradient_mean << '\n';
    std::cout << "table " << run.table_csv.string() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep martingale control variates for Monte-Carlo option pricing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", deepcv::library_version());
  Flags f;

  CLI::App* train = app.add_subcommand("train", "train a control variate");
  add_common(train, f);
  train->add_option("--algo", f.algo, "algorithm 1..7:\n" + algorithm_list());
  train->add_option("--epsilon", f.epsilon, "stopping tolerance");

  CLI::App* evaluate = app.add_subcommand("evaluate", "variance reduction report");
  add_common(evaluate, f);
  add_model(evaluate, f);

  CLI::App* price = app.add_subcommand("price", "price with error table against the reference");
  add_common(price, f);
  add_model(price, f);

  CLI::App* diagnose = app.add_subcommand("diagnose", "network size diagnostics grid");
  add_common(diagnose, f);
  diagnose->add_option("--epsilon", f.epsilon, "stopping tolerance");

  app.add_subcommand("presets", "list the built-in experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }

  try {
    if (diagnose->parsed() && f.epsilon) {
      // the grid has its own tolerance
      Flags g = f;
      g.epsilon.reset();
      deepcv::ExperimentConfig config = resolve(g);
      config.diagnostics.epsilon = *f.epsilon;
      config.validate();
      const deepcv::DiagnosticsRun run = deepcv::run_diagnostics(config, run_options(f));
      std::cout << "table " << run.table_csv.string() << '\n';
      return kOk;
    }
    return dispatch(app, f);
  } catch (const deepcv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const deepcv::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const deepcv::Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

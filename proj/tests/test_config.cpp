#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "deepcv/config.hpp"
#include "deepcv/errors.hpp"

using namespace deepcv;
using nlohmann::json;

namespace {

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ConfigParse, EmptyDocumentGivesDefaults) {
  const ExperimentConfig c = parse_config(json::object());
  EXPECT_EQ(c.dim, 2u);
  EXPECT_EQ(c.algorithm, 4);
  EXPECT_EQ(c.steps, 50u);
  EXPECT_EQ(c.train.batch_size, 5000u);
  EXPECT_DOUBLE_EQ(c.train.epsilon, 5e-6);
  EXPECT_EQ(c.train.window, 100u);
  EXPECT_DOUBLE_EQ(c.train.schedule.initial, 1e-3);
  EXPECT_DOUBLE_EQ(c.train.schedule.decayed, 1e-4);
  EXPECT_EQ(c.train.schedule.boundary, 10000u);
  EXPECT_EQ(c.train.initial.s0, Eigen::VectorXd::Ones(2));
}

TEST(ConfigParse, UnknownKeysAreNamed) {
  EXPECT_NE(config_error({{"bogus", 1}}).find("bogus: unknown key"), std::string::npos);
  EXPECT_NE(config_error({{"training", {{"batchsize", 10}}}}).find("training.batchsize: unknown key"), std::string::npos);
  EXPECT_NE(config_error({{"training", {{"architecture", {{"depth", 3}}}}}}).find("training.architecture.depth"),
            std::string::npos);
}

TEST(ConfigParse, WrongTypesAreNamed) {
  EXPECT_NE(config_error({{"market", {{"rate", "high"}}}}).find("market.rate: expected a number"), std::string::npos);
  EXPECT_NE(config_error({{"training", {{"batch_size", -5}}}}).find("training.batch_size"), std::string::npos);
  EXPECT_NE(config_error({{"training", {{"warm_start", 1}}}}).find("training.warm_start"), std::string::npos);
  EXPECT_NE(config_error({{"market", {{"sigma", {0.3, 0.2, 0.1}}}}}).find("market.sigma: expected 2 entries, got 3"),
            std::string::npos);
  EXPECT_NE(config_error(json::array()).find("expected a JSON object"), std::string::npos);
}

TEST(ConfigParse, CrossFieldChecks) {
  EXPECT_NE(config_error({{"algorithm", 9}}).find("algorithm: 9 is not one of 1..7"), std::string::npos);
  EXPECT_NE(config_error({{"grid", {{"steps", 0}}}}).find("grid.steps"), std::string::npos);
  EXPECT_NE(config_error({{"training", {{"epsilon", 0.0}}}}).find("training"), std::string::npos);
  EXPECT_NE(config_error({{"market", {{"correlation", {{1.0, 2.0}, {2.0, 1.0}}}}}}).find("market.correlation"),
            std::string::npos);
  EXPECT_FALSE(config_error({{"market", {{"dim", 3}}}, {"payoff", {{"kind", "exchange"}}}}).empty());
  EXPECT_NE(config_error({{"evaluation", {{"n_mc", 1}}}}).find("evaluation.n_mc"), std::string::npos);
}

TEST(ConfigParse, DimensionChangeResizesDependentFields) {
  const ExperimentConfig c = parse_config({{"market", {{"dim", 3}, {"sigma", 0.25}}}, {"payoff", {{"kind", "basket"}, {"strike", 2.0}}}});
  EXPECT_EQ(c.dim, 3u);
  EXPECT_EQ(c.sigma, Eigen::VectorXd::Constant(3, 0.25));
  EXPECT_EQ(c.correlation, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(c.train.initial.s0.size(), 3);
  EXPECT_EQ(c.evaluation.initial.s0.size(), 3);
  EXPECT_EQ(c.market().dim(), 3u);
}

TEST(ConfigParse, PresetThenOverrides) {
  const ExperimentConfig c = parse_config({{"preset", "exchange2d"}, {"seed", 9}, {"training", {{"batch_size", 64}}}});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.steps, 50u);
  EXPECT_EQ(c.training().seed, 9u);
  EXPECT_NE(config_error({{"preset", "nope"}}).find("unknown preset 'nope'"), std::string::npos);
}

TEST(ConfigParse, ParameterRangesAndSamplers) {
  const ExperimentConfig c = parse_config({{"training",
                                            {{"parameters", {{"sigma", {0.2, 0.4}}, {"rate", nullptr}}},
                                             {"initial", {{"kind", "lognormal"}, {"mu", 0.08}, {"tau", 0.1}, {"s0", 1.0}}}}}});
  ASSERT_TRUE(c.train.parameters.has_value());
  EXPECT_EQ(c.train.parameters->sigma, std::make_pair(0.2, 0.4));
  EXPECT_FALSE(c.train.parameters->rate.has_value());
  EXPECT_EQ(c.train.initial.kind, InitialSampler::Kind::LogNormal);
  EXPECT_DOUBLE_EQ(c.train.initial.mu, 0.08);
  EXPECT_NE(config_error({{"training", {{"parameters", {{"sigma", {0.4, 0.2}}}}}}}).find("low must not exceed high"),
            std::string::npos);
  EXPECT_NE(config_error({{"training", {{"initial", {{"kind", "uniform"}}}}}}).find("training.initial.kind"),
            std::string::npos);
}

TEST(ConfigJson, RoundTripPreservesEverything) {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    const ExperimentConfig back = parse_config(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json()) << name;
    EXPECT_EQ(back.hash(), c.hash()) << name;
  }
}

TEST(ConfigJson, HashIsStableHexAndSensitive) {
  const ExperimentConfig a = preset("exchange2d");
  ExperimentConfig b = a;
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_EQ(a.hash().find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(a.hash(), b.hash());
  b.output = "elsewhere";
  b.threads = 4;
  EXPECT_EQ(a.hash(), b.hash());
  b.train.epsilon = 1e-5;
  EXPECT_NE(a.hash(), b.hash());
}

TEST(Presets, AllValidateAndAreDistinct) {
  const auto names = preset_names();
  EXPECT_EQ(names.size(), 12u);
  for (const auto& n : names) EXPECT_NO_THROW(preset(n)) << n;
  EXPECT_THROW(preset("unknown"), ConfigError);
}

TEST(Presets, ExchangeTwoAssets) {
  const ExperimentConfig c = preset("exchange2d");
  EXPECT_EQ(c.dim, 2u);
  EXPECT_DOUBLE_EQ(c.rate, 0.05);
  EXPECT_EQ(c.sigma, Eigen::VectorXd::Constant(2, 0.3));
  EXPECT_DOUBLE_EQ(c.maturity, 0.5);
  EXPECT_EQ(c.steps, 50u);
  EXPECT_EQ(c.payoff, PayoffKind::Exchange);
  EXPECT_EQ(c.train.initial.kind, InitialSampler::Kind::LogNormal);
  EXPECT_DOUBLE_EQ(c.train.initial.mu, 0.08);
  EXPECT_DOUBLE_EQ(c.train.initial.tau, 0.1);
  EXPECT_EQ(c.evaluation.initial.kind, InitialSampler::Kind::Fixed);
  EXPECT_EQ(c.evaluation.n_in, 1000000u);
  EXPECT_EQ(c.evaluation.sigma_sweep, (std::vector<double>{0.2, 0.25, 0.3, 0.35, 0.4}));
  EXPECT_EQ(c.train.architecture.width(2), 22);
}

TEST(Presets, DeskVariantsScaleDown) {
  const ExperimentConfig full = preset("exchange2d"), desk = preset("exchange2d-desk");
  EXPECT_EQ(desk.train.batch_size * 10, full.train.batch_size);
  EXPECT_DOUBLE_EQ(desk.train.epsilon, 1e-4);
  EXPECT_EQ(desk.evaluation.n_in * 10, full.evaluation.n_in);
  const ExperimentConfig diag = preset("diagnostics-desk");
  EXPECT_EQ(diag.diagnostics.widths, (std::vector<int>{4, 8, 16}));
  EXPECT_EQ(diag.diagnostics.hidden_layers, (std::vector<int>{1, 2}));
  EXPECT_EQ(diag.diagnostics.repetitions, 2u);
}

TEST(Presets, HighDimensionAndBasket) {
  const ExperimentConfig ex = preset("exchange100d");
  EXPECT_EQ(ex.dim, 100u);
  EXPECT_EQ(ex.payoff, PayoffKind::ExchangeVsAverage);
  EXPECT_EQ(ex.train.architecture.width(100), 120);
  const ExperimentConfig b = preset("basket100d");
  EXPECT_EQ(b.payoff, PayoffKind::Basket);
  EXPECT_DOUBLE_EQ(b.strike, 70.0);
  EXPECT_DOUBLE_EQ(b.rate, 0.5);
  EXPECT_EQ(b.sigma, Eigen::VectorXd::Constant(100, 1.0));
  EXPECT_DOUBLE_EQ(preset("basket2d").strike, 1.4);
  const ExperimentConfig rs = preset("exchange2d-random-sigma");
  ASSERT_TRUE(rs.train.parameters.has_value());
  EXPECT_EQ(rs.train.parameters->sigma, std::make_pair(0.2, 0.4));
  const ExperimentConfig d = preset("diagnostics");
  EXPECT_EQ(d.algorithm, 5);
  EXPECT_EQ(d.steps, 10u);
  EXPECT_NEAR(d.diagnostics.horizon, 1.0 / 365.0, 1e-15);
}

TEST(ConfigFile, LoadAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "deepcv_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << R"({"preset": "basket2d", "seed": 3})";
    std::ofstream(dir / "broken.json") << R"({"preset": )";
  }
  EXPECT_EQ(load_config(dir / "ok.json").seed, 3u);
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

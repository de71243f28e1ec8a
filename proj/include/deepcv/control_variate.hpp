#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "deepcv/market.hpp"
#include "deepcv/network.hpp"

namespace deepcv {

/// Parametric inputs appended to every network input after the state.
struct ExtraInputs {
  bool sigma = false;  // d rows: the path's volatilities
  bool rate = false;   // 1 row: the path's short rate

  int width(std::size_t dim) const noexcept {
    return (sigma ? static_cast<int>(dim) : 0) + (rate ? 1 : 0);
  }
  bool operator==(const ExtraInputs&) const = default;
};

/// A gradient approximation that is not a trained network (e.g. a closed-form delta).
class GradientField {
 public:
  virtual ~GradientField() = default;
  virtual std::string name() const = 0;
  /// d x n gradient of the value function at grid time index `step` for every path of `paths`.
  virtual Eigen::MatrixXd gradient(std::size_t step, const PathBatch& paths) const = 0;
  virtual nlohmann::json describe() const = 0;
};

/// Closed-form exchange-option delta, using each path's own volatilities.
class MargrabeGradientField final : public GradientField {
 public:
  /// Only the correlation of `model` is used; volatilities come from each path.
  explicit MargrabeGradientField(MarketModel model);
  std::string name() const override { return "margrabe"; }
  Eigen::MatrixXd gradient(std::size_t step, const PathBatch& paths) const override;
  nlohmann::json describe() const override;

 private:
  MarketModel model_;
};

/// How gradient values are produced.
enum class GradientSource {
  PerStep,          // gradient_nets[k] applied to [x; extras]
  Joint,            // gradient_nets[0] applied to [t; x; extras]
  ValueDerivative,  // input derivative of value_nets[k] with respect to x
  Analytic,         // a GradientField
};

std::string to_string(GradientSource source);
GradientSource gradient_source_from_string(const std::string& name);

/// The deployable output of every training algorithm.
struct ControlVariateModel {
  TimeGrid grid;
  std::size_t dim = 0;
  GradientSource source = GradientSource::PerStep;
  std::vector<Network> gradient_nets;
  /// Per-step value networks (one per grid time that was trained) or a single joint one.
  std::vector<Network> value_nets;
  bool joint_value = false;
  double lambda = 1.0;
  ExtraInputs extras;
  std::shared_ptr<const GradientField> field;
  /// Algorithm, training cost and anything else worth keeping with the artifact.
  nlohmann::json metadata = nlohmann::json::object();

  /// d x n gradient at grid index `step`. Throws ConfigError on a grid/dimension mismatch.
  Eigen::MatrixXd gradient(std::size_t step, const PathBatch& paths) const;
  bool has_value() const noexcept { return !value_nets.empty(); }
  /// 1 x n value readout at grid index `step`; requires value networks covering it.
  Eigen::RowVectorXd value(std::size_t step, const PathBatch& paths) const;
  /// Checks the invariants (net widths, finite lambda); throws ConfigError.
  void validate() const;
};

/// Network input for per-step nets: [x; extras] (features x paths).
Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& states, const PathBatch& paths, const ExtraInputs& extras);
/// Network input for time-input nets: [t; x; extras].
Eigen::MatrixXd assemble_time_input(double t, const Eigen::MatrixXd& states, const PathBatch& paths,
                                    const ExtraInputs& extras);

/// Margrabe-exact control variate on `grid` for a two-asset model.
ControlVariateModel margrabe_control_variate(const MarketModel& model, const TimeGrid& grid);

/// Writes `dir/model.json` plus one checkpoint per network under `dir/gradient` and `dir/value`.
void save_model(const ControlVariateModel& cv, const std::filesystem::path& dir);
/// Accepts the directory or the manifest path. Throws IoError / CorruptCheckpoint.
ControlVariateModel load_model(const std::filesystem::path& path);

}  // namespace deepcv

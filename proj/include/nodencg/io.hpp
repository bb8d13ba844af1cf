#pragma once

// Plain-text file formats: dataset CSV, NODECKPT/1 checkpoints, key=value run
// configs, metrics CSV and the decision-boundary / trajectory / parameter exports.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nodencg/baseline.hpp"
#include "nodencg/cost.hpp"
#include "nodencg/datasets.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ncg.hpp"
#include "nodencg/ode.hpp"

namespace nodencg::io {

/// Shortest-roundtrip-safe decimal form (17 significant digits).
std::string format_double(double v);

// ---- datasets: header `x,y[,z],class`, class in {0, 1} ----
void write_dataset_csv(std::ostream& out, const LabeledSet& set);
LabeledSet read_dataset_csv(std::istream& in);
LabeledSet load_dataset(const std::string& path);

// ---- checkpoints ----
inline constexpr std::string_view kCheckpointTag = "NODECKPT/1";

struct Checkpoint {
  ParamTrajectory params;
  CostWeights weights;
  std::uint64_t seed = 0;
  int epoch = 0;
  int batch = 0;
  long iteration = 0;
  DescentSpace descent = DescentSpace::l2;
  /// Solver used for inference: fixed_euler for nets trained by the discrete baseline.
  StepMode inference = StepMode::fixed_rk4;

  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws std::runtime_error with the offending line on malformed input.
Checkpoint parse_checkpoint(std::string_view text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string to_string(StepMode mode);
StepMode parse_step_mode(const std::string& name);

// ---- run configuration ----
struct RunConfig {
  std::string optimizer = "ncg";  ///< ncg | sgd
  DatasetKind dataset = DatasetKind::moons;
  std::uint64_t dataset_seed = 0;
  bool augment = false;
  TrainConfig train;
  SgdConfig sgd;
};

/// Parses `key = value` lines ('#' starts a comment).
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Applies settings to `cfg`; every problem (unknown key, bad value, violated
/// constraint) is collected into one ConfigError.
void apply_settings(const std::map<std::string, std::string>& settings, RunConfig& cfg);

// ---- exports ----
inline constexpr std::string_view kMetricsHeader =
    "epoch,batch,iteration,cost,train_acc,clean_acc,noisy_acc,l2_norm,w12_norm,beta,gamma";

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_sgd_metrics_csv(std::ostream& out, const std::vector<SgdEpochMetrics>& rows);

struct Extent {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};
/// Bounding box of the inputs, padded by `margin` on each side.
Extent padded_bounds(const LabeledSet& set, double margin = 0.5);

/// Grid rows (x, y, score) with score = x_2(T) - x_1(T); `resolution` points per
/// unit length, cell-centred, inputs zero-padded up to the model dimension.
void write_boundary_csv(std::ostream& out, const ParamTrajectory& params, const SolverOptions& opts,
                        const Extent& extent, double resolution, Exec exec = Exec::parallel);

/// Rows (sample_id, class, t, x1, ..., xN) at `times` uniform instants on [0, T]
/// for the first `per_class` samples of each class.
void write_trajectories_csv(std::ostream& out, const ParamTrajectory& params, const SolverOptions& opts,
                            const LabeledSet& set, std::size_t per_class = 25, std::size_t times = 101);

/// Rows (t, W11, W21, ..., WNN, b1, ..., bN) at the mesh nodes.
void write_params_csv(std::ostream& out, const ParamTrajectory& params);

}  // namespace nodencg::io

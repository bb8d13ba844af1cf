#pragma once

// Nonlinear conjugate gradient training of the NODE parameters.
//
// Each epoch partitions the training set into balanced batches; every batch is
// used for a fixed number of NCG iterations: forward solve, adjoint solve,
// L2 (optionally W^{1,2}) gradient, Fletcher-Reeves direction update (reset to
// steepest descent at the start of each batch), sensitivity solve, exact line
// search, parameter update. The parameters carry over from batch to batch.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nodencg/cost.hpp"
#include "nodencg/exec.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/line_search.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ode.hpp"

namespace nodencg {

enum class DescentSpace { l2, w12 };

std::string to_string(DescentSpace space);
DescentSpace parse_descent_space(const std::string& name);

struct TrainConfig {
  int epochs = 5;
  int batches_per_epoch = 10;
  int batch_size = 100;
  int iterations_per_batch = 15;
  DescentSpace descent = DescentSpace::l2;
  CostWeights weights = CostWeights::squared_distance();
  std::uint64_t seed = 0;
  SolverOptions solver{.mode = StepMode::fixed_rk4};
  LineSearchOptions line_search;
  TimeMesh mesh;
  double init_scale = 0.1;
  Exec exec = Exec::parallel;

  /// Every violated constraint; `train` adds the batch-composition checks.
  std::vector<std::string> violations(const LabeledSet* train = nullptr) const;
};

inline constexpr double kNotEvaluated = std::numeric_limits<double>::quiet_NaN();

/// One NCG iteration. Test accuracies are filled on the last iteration of a batch.
struct MetricRow {
  int epoch = 0;
  int batch = 0;
  int iteration = 0;
  double cost = 0.0;       ///< batch cost before the update
  double train_acc = 0.0;  ///< batch accuracy before the update
  double clean_acc = kNotEvaluated;
  double noisy_acc = kNotEvaluated;
  double l2_norm = 0.0;    ///< |theta|_{L2} after the update
  double w12_norm = 0.0;   ///< |theta|_{W^{1,2}} after the update
  double beta = 0.0;
  double gamma = 0.0;
};

struct BestAccuracy {
  double accuracy = -1.0;
  /// Fractional epoch count (epoch + finished batches / batches_per_epoch)
  /// at which `accuracy` was first reached.
  double epoch = 0.0;

  void update(double acc, double epoch_count) {
    if (acc > accuracy) {
      accuracy = acc;
      epoch = epoch_count;
    }
  }
};

struct TrainState {
  ParamTrajectory params;
  GradientField prev_gradient;
  double prev_norm_sq = 0.0;
  GradientField direction;
  int epoch = 0;       ///< epoch of the next batch to run
  int batch = 0;       ///< next batch within `epoch`
  long iteration = 0;  ///< total iterations done
  std::vector<MetricRow> metrics;
  BestAccuracy best_clean;
  BestAccuracy best_noisy;
};

struct EvalSets {
  LabeledSet clean;
  LabeledSet noisy;
};

/// Raised when a solve fails mid-training; carries the state before the failing iteration.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, TrainState snapshot)
      : std::runtime_error(what), snapshot_(std::move(snapshot)) {}
  const TrainState& snapshot() const noexcept { return snapshot_; }

 private:
  TrainState snapshot_;
};

using BatchObserver = std::function<void(const TrainState&)>;

/// Balanced batches of one epoch: each holds batch_size/2 samples per class.
std::vector<std::vector<std::size_t>> partition_batches(const LabeledSet& train, const TrainConfig& config, int epoch);

/// Initial state: constant-in-t uniform parameters drawn from config.seed.
TrainState initial_state(const TrainConfig& config, std::size_t state_dim);

/// Runs (or resumes) training up to config.epochs. Throws ConfigError on an
/// invalid configuration and TrainingAborted on solver failure.
TrainState ncg_train(const TrainConfig& config, const LabeledSet& train, const EvalSets& eval = {},
                     std::optional<TrainState> resume = std::nullopt, const BatchObserver& observer = {});

}  // namespace nodencg

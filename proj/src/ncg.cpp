#include "nodencg/ncg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nodencg/datasets.hpp"
#include "nodencg/gradient.hpp"
#include "nodencg/model.hpp"

namespace nodencg {

std::string to_string(DescentSpace space) { return space == DescentSpace::l2 ? "L2" : "W12"; }

DescentSpace parse_descent_space(const std::string& name) {
  if (name == "L2" || name == "l2") return DescentSpace::l2;
  if (name == "W12" || name == "w12") return DescentSpace::w12;
  throw ConfigError({"unknown descent space '" + name + "' (expected L2 or W12)"});
}

std::vector<std::string> TrainConfig::violations(const LabeledSet* train) const {
  std::vector<std::string> out = weights.violations();
  if (epochs < 0) out.emplace_back("train.epochs must be nonnegative");
  if (batches_per_epoch < 1) out.emplace_back("train.batches must be positive");
  if (batch_size < 2 || batch_size % 2 != 0) out.emplace_back("train.batch_size must be a positive even number");
  if (iterations_per_batch < 1) out.emplace_back("train.iterations must be positive");
  if (weights.mu5 > 0.0 && descent == DescentSpace::l2) {
    out.emplace_back("cost.mu5 > 0 requires train.descent = W12 (the cost is not differentiable in L2)");
  }
  if (solver.mode == StepMode::adaptive_rk45 && !(solver.abs_tol > 0.0 && solver.rel_tol > 0.0)) {
    out.emplace_back("solver tolerances must be positive");
  }
  if (!(line_search.beta_max > 0.0)) out.emplace_back("line search beta_max must be positive");
  if (train != nullptr) {
    if (train->dim() < 2) out.emplace_back("training data must have at least 2 dimensions");
    std::size_t per_class[2] = {0, 0};
    for (int label : train->labels()) {
      if (label == 0 || label == 1) ++per_class[label];
    }
    const auto needed = static_cast<std::size_t>(batches_per_epoch) * static_cast<std::size_t>(batch_size / 2);
    if (per_class[0] < needed || per_class[1] < needed) {
      out.emplace_back("training data holds " + std::to_string(per_class[0]) + " + " + std::to_string(per_class[1]) +
                       " samples; balanced batches need " + std::to_string(needed) + " per class");
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> partition_batches(const LabeledSet& train, const TrainConfig& config,
                                                        int epoch) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t k = 0; k < train.size(); ++k) by_class[train.label(k) == 0 ? 0 : 1].push_back(k);
  std::seed_seq seq{static_cast<std::uint64_t>(config.seed), static_cast<std::uint64_t>(epoch),
                    std::uint64_t{0xba7c4}};
  std::mt19937_64 rng(seq);
  std::shuffle(by_class[0].begin(), by_class[0].end(), rng);
  std::shuffle(by_class[1].begin(), by_class[1].end(), rng);
  const std::size_t half = static_cast<std::size_t>(config.batch_size / 2);
  std::vector<std::vector<std::size_t>> batches(static_cast<std::size_t>(config.batches_per_epoch));
  for (std::size_t b = 0; b < batches.size(); ++b) {
    for (int c = 0; c < 2; ++c) {
      const auto first = by_class[c].begin() + static_cast<std::ptrdiff_t>(b * half);
      batches[b].insert(batches[b].end(), first, first + static_cast<std::ptrdiff_t>(half));
    }
  }
  return batches;
}

TrainState initial_state(const TrainConfig& config, std::size_t state_dim) {
  TrainState s;
  s.params = init_params(config.seed, state_dim, config.mesh, config.init_scale);
  s.prev_gradient = GradientField(config.mesh, state_dim);
  s.direction = GradientField(config.mesh, state_dim);
  return s;
}

namespace {

struct StepOutcome {
  double beta = 0.0;
  double gamma = 0.0;
};

// One NCG iteration on `batch`; updates params, direction and gradient memory.
StepOutcome ncg_iteration(const TrainConfig& cfg, const LabeledSet& batch, TrainState& s, bool first_in_batch,
                          MetricRow& row) {
  const auto forward = solve_forward(s.params, batch, cfg.solver, cfg.exec);
  row.cost = cost_eval(s.params, batch, cfg.weights, forward);
  {
    std::vector<double> outputs;
    outputs.reserve(batch.size() * batch.dim());
    for (const auto& sol : forward) outputs.insert(outputs.end(), sol.terminal().begin(), sol.terminal().end());
    row.train_acc = accuracy_from_outputs(outputs, batch);
  }
  const auto costates = solve_adjoint(s.params, batch, cfg.weights, forward, cfg.solver, cfg.exec);
  GradientField grad = l2_gradient(s.params, batch, cfg.weights, forward, costates, cfg.exec);
  double norm_sq = 0.0;
  if (cfg.descent == DescentSpace::w12) {
    grad = w12_gradient(grad, s.params, cfg.weights.mu5);
    norm_sq = w12_norm_sq(grad);
  } else {
    norm_sq = l2_norm_sq(grad);
  }

  StepOutcome out;
  std::optional<double> gamma;
  if (!first_in_batch) gamma = fletcher_reeves_gamma(norm_sq, s.prev_norm_sq);
  if (gamma) {
    s.direction = axpy(*gamma, s.direction, scaled(-1.0, grad));
    out.gamma = *gamma;
  } else {
    s.direction = scaled(-1.0, grad);
  }

  auto search = [&]() {
    const auto sens = solve_sensitivity(s.params, batch, s.direction, forward, cfg.solver, cfg.exec);
    const LineSearchFunctional ls(s.params, batch, cfg.weights, forward, sens, s.direction);
    return optimal_beta(ls, cfg.line_search);
  };
  BetaResult beta = search();
  if (beta.status == BetaStatus::not_descent && gamma) {
    s.direction = scaled(-1.0, grad);
    out.gamma = 0.0;
    beta = search();
  }
  if (beta.status == BetaStatus::ok || beta.status == BetaStatus::capped) {
    out.beta = beta.beta;
    s.params = axpy(beta.beta, s.direction, s.params);
  }
  s.prev_gradient = std::move(grad);
  s.prev_norm_sq = norm_sq;
  return out;
}

}  // namespace

TrainState ncg_train(const TrainConfig& config, const LabeledSet& train, const EvalSets& eval,
                     std::optional<TrainState> resume, const BatchObserver& observer) {
  if (auto v = config.violations(&train); !v.empty()) throw ConfigError(std::move(v));
  TrainState state = resume ? std::move(*resume) : initial_state(config, train.dim());
  if (state.params.state_dim() != train.dim() || !(state.params.mesh() == config.mesh)) {
    throw ConfigError({"resumed parameters do not match the data dimension or mesh"});
  }
  if (!state.direction.same_shape(state.params)) state.direction = GradientField(config.mesh, train.dim());

  while (state.epoch < config.epochs) {
    const auto batches = partition_batches(train, config, state.epoch);
    while (state.batch < config.batches_per_epoch) {
      const LabeledSet batch = train.subset(batches[static_cast<std::size_t>(state.batch)]);
      const TrainState snapshot = state;
      try {
        for (int j = 0; j < config.iterations_per_batch; ++j) {
          MetricRow row;
          row.epoch = state.epoch;
          row.batch = state.batch;
          row.iteration = j;
          const StepOutcome step = ncg_iteration(config, batch, state, j == 0, row);
          row.beta = step.beta;
          row.gamma = step.gamma;
          row.l2_norm = std::sqrt(l2_norm_sq(state.params));
          row.w12_norm = std::sqrt(w12_norm_sq(state.params));
          ++state.iteration;
          state.metrics.push_back(row);
        }
      } catch (const std::exception& e) {
        throw TrainingAborted(std::string("training aborted: ") + e.what(), snapshot);
      }

      const double epoch_count =
          state.epoch + static_cast<double>(state.batch + 1) / static_cast<double>(config.batches_per_epoch);
      MetricRow& last = state.metrics.back();
      if (!eval.clean.empty()) {
        last.clean_acc = accuracy(state.params, eval.clean, config.solver, config.exec);
        state.best_clean.update(last.clean_acc, epoch_count);
      }
      if (!eval.noisy.empty()) {
        last.noisy_acc = accuracy(state.params, eval.noisy, config.solver, config.exec);
        state.best_noisy.update(last.noisy_acc, epoch_count);
      }
      ++state.batch;
      if (observer) observer(state);
    }
    state.batch = 0;
    ++state.epoch;
  }
  return state;
}

}  // namespace nodencg

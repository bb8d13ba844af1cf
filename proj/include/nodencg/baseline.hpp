#pragma once

// Discrete residual network x_{n+1} = x_n + h tanh(W_n x_n + b_n), the
// forward-Euler copy of the NODE, trained by mini-batch RMSProp.

#include <cstdint>
#include <span>
#include <vector>

#include "nodencg/cost.hpp"
#include "nodencg/exec.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"

namespace nodencg {

struct DiscreteNet {
  std::size_t state_dim = 2;
  std::size_t layers = 250;
  double step = 1.0 / 50.0;
  /// Layer n occupies [n * M, (n + 1) * M) with the theta layout of ParamTrajectory.
  std::vector<double> params;

  DiscreteNet() = default;
  DiscreteNet(std::size_t state_dim, std::size_t layers, double step);

  std::size_t param_dim() const noexcept { return param_count(state_dim); }
  std::span<double> layer(std::size_t n) noexcept { return {params.data() + n * param_dim(), param_dim()}; }
  std::span<const double> layer(std::size_t n) const noexcept {
    return {params.data() + n * param_dim(), param_dim()};
  }
};

/// Layer n takes theta(t_n) at the left node of mesh interval n; step = T / n.
DiscreteNet net_from_trajectory(const ParamTrajectory& params);
/// Inverse of net_from_trajectory; the last node repeats the last layer.
ParamTrajectory trajectory_from_net(const DiscreteNet& net);

struct ForwardCache {
  std::vector<double> states;  ///< (layers + 1) x N, states[0] = input
};

ForwardCache forward_discrete(const DiscreteNet& net, std::span<const double> x0);

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> grad;  ///< same layout as DiscreteNet::params
};

/// Batch loss 1/K sum_k L(x_k, y_k) (terminal terms of CostWeights only) and its
/// exact gradient by reverse-mode differentiation.
BatchGradient backprop_discrete(const DiscreteNet& net, const LabeledSet& batch, const CostWeights& w,
                                Exec exec = Exec::parallel);

struct RmsPropState {
  double learning_rate = 0.1;
  double decay = 0.9;
  double epsilon = 1e-7;
  std::vector<double> mean_square;
};

/// r <- rho r + (1 - rho) g^2;  w <- w - lr g / (sqrt(r) + eps).
void rmsprop_step(RmsPropState& state, std::span<double> params, std::span<const double> grads);

struct SgdConfig {
  int epochs = 15;
  int batch_size = 100;
  CostWeights weights = CostWeights::squared_distance();
  std::uint64_t seed = 0;
  double learning_rate = 0.1;
  double decay = 0.9;
  double epsilon = 1e-7;
  TimeMesh mesh;  ///< layers = intervals, step = T / intervals
  double init_scale = 0.1;
  Exec exec = Exec::parallel;
};

struct SgdEpochMetrics {
  int epoch = 0;
  double loss = 0.0;  ///< mean batch loss over the epoch
  double train_acc = 0.0;
  double clean_acc = -1.0;
  double noisy_acc = -1.0;
};

struct SgdResult {
  DiscreteNet net;
  std::vector<SgdEpochMetrics> metrics;
};

std::vector<double> discrete_outputs(const DiscreteNet& net, const LabeledSet& set, Exec exec = Exec::parallel);

SgdResult sgd_train(const SgdConfig& config, const LabeledSet& train, const LabeledSet* clean = nullptr,
                    const LabeledSet* noisy = nullptr);

}  // namespace nodencg

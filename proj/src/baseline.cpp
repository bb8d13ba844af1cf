#include "nodencg/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nodencg/datasets.hpp"
#include "nodencg/model.hpp"

namespace nodencg {

DiscreteNet::DiscreteNet(std::size_t dim, std::size_t layer_count, double h)
    : state_dim(dim), layers(layer_count), step(h), params(layer_count * param_count(dim), 0.0) {}

DiscreteNet net_from_trajectory(const ParamTrajectory& p) {
  const TimeMesh& mesh = p.mesh();
  DiscreteNet net(p.state_dim(), static_cast<std::size_t>(mesh.intervals()), mesh.step());
  for (std::size_t n = 0; n < net.layers; ++n) {
    const auto theta = p.node(n);
    std::copy(theta.begin(), theta.end(), net.layer(n).begin());
  }
  return net;
}

ParamTrajectory trajectory_from_net(const DiscreteNet& net) {
  ParamTrajectory p(TimeMesh(net.step * static_cast<double>(net.layers), static_cast<int>(net.layers)), net.state_dim);
  for (std::size_t n = 0; n <= net.layers; ++n) {
    const auto theta = net.layer(std::min(n, net.layers - 1));
    std::copy(theta.begin(), theta.end(), p.node(n).begin());
  }
  return p;
}

ForwardCache forward_discrete(const DiscreteNet& net, std::span<const double> x0) {
  const std::size_t n = net.state_dim;
  if (x0.size() != n) throw DomainError("forward_discrete: input has wrong dimension");
  const Activation act = tanh_activation();
  ForwardCache cache;
  cache.states.resize((net.layers + 1) * n);
  std::copy(x0.begin(), x0.end(), cache.states.begin());
  for (std::size_t l = 0; l < net.layers; ++l) {
    const std::span<const double> x(cache.states.data() + l * n, n);
    const std::span<double> next(cache.states.data() + (l + 1) * n, n);
    euler_layer(net.layer(l), net.step, x, next, act);
  }
  return cache;
}

BatchGradient backprop_discrete(const DiscreteNet& net, const LabeledSet& batch, const CostWeights& w, Exec exec) {
  const std::size_t n = net.state_dim;
  const std::size_t m = net.param_dim();
  const std::size_t total = net.params.size();
  if (batch.dim() != n) throw DomainError("backprop_discrete: data and net dimensions differ");
  const double inv_k = 1.0 / static_cast<double>(batch.size());

  // Per-sample gradients, reduced in sample order afterwards.
  std::vector<double> per_sample(batch.size() * total, 0.0);
  std::vector<double> losses(batch.size(), 0.0);
  for_each_index(exec, batch.size(), [&](std::size_t k) {
    const ForwardCache cache = forward_discrete(net, batch.input(k));
    const std::span<const double> out(cache.states.data() + net.layers * n, n);
    losses[k] = terminal_loss(out, batch.target(k), w);
    std::vector<double> adj(n), z(n), g(n), prev(n);
    terminal_loss_gradient(out, batch.target(k), w, adj);
    for (double& a : adj) a *= inv_k;
    double* grad = per_sample.data() + k * total;
    for (std::size_t l = net.layers; l-- > 0;) {
      const std::span<const double> theta = net.layer(l);
      const std::span<const double> x(cache.states.data() + l * n, n);
      affine(theta, x, z);
      for (std::size_t i = 0; i < n; ++i) {
        const double th = std::tanh(z[i]);
        g[i] = net.step * (1.0 - th * th) * adj[i];
      }
      double* gl = grad + l * m;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) gl[j * n + i] = g[i] * x[j];
      }
      for (std::size_t i = 0; i < n; ++i) gl[n * n + i] = g[i];
      // adj_l = adj_{l+1} + W^T g
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += theta[j * n + i] * g[i];
        prev[j] = adj[j] + acc;
      }
      adj.swap(prev);
    }
  });

  BatchGradient out;
  out.grad.assign(total, 0.0);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    out.loss += losses[k];
    const double* gk = per_sample.data() + k * total;
    for (std::size_t i = 0; i < total; ++i) out.grad[i] += gk[i];
  }
  out.loss *= inv_k;
  return out;
}

void rmsprop_step(RmsPropState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) throw DomainError("rmsprop_step: shape mismatch");
  if (state.mean_square.size() != params.size()) state.mean_square.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& r = state.mean_square[i];
    r = state.decay * r + (1.0 - state.decay) * grads[i] * grads[i];
    params[i] -= state.learning_rate * grads[i] / (std::sqrt(r) + state.epsilon);
  }
}

std::vector<double> discrete_outputs(const DiscreteNet& net, const LabeledSet& set, Exec exec) {
  const std::size_t n = net.state_dim;
  std::vector<double> out(set.size() * n);
  for_each_index(exec, set.size(), [&](std::size_t k) {
    const ForwardCache cache = forward_discrete(net, set.input(k));
    std::copy_n(cache.states.begin() + static_cast<std::ptrdiff_t>(net.layers * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(k * n));
  });
  return out;
}

SgdResult sgd_train(const SgdConfig& config, const LabeledSet& train, const LabeledSet* clean,
                    const LabeledSet* noisy) {
  std::vector<std::string> problems = config.weights.violations();
  if (config.batch_size < 2 || config.batch_size % 2 != 0) problems.emplace_back("batch size must be positive and even");
  if (config.epochs < 0) problems.emplace_back("epochs must be nonnegative");
  if (!problems.empty()) throw ConfigError(problems);

  SgdResult result;
  result.net = net_from_trajectory(init_params(config.seed, train.dim(), config.mesh, config.init_scale));
  RmsPropState opt{config.learning_rate, config.decay, config.epsilon, {}};

  std::vector<std::size_t> by_class[2];
  for (std::size_t k = 0; k < train.size(); ++k) by_class[train.label(k) == 0 ? 0 : 1].push_back(k);
  const std::size_t half = static_cast<std::size_t>(config.batch_size / 2);
  const std::size_t batches = std::min(by_class[0].size(), by_class[1].size()) / half;
  if (batches == 0) throw ConfigError({"training data too small for one balanced batch"});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::seed_seq seq{static_cast<std::uint64_t>(config.seed), static_cast<std::uint64_t>(epoch),
                      std::uint64_t{0x59d}};
    std::mt19937_64 rng(seq);
    std::shuffle(by_class[0].begin(), by_class[0].end(), rng);
    std::shuffle(by_class[1].begin(), by_class[1].end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<std::size_t> idx;
      for (int c = 0; c < 2; ++c) {
        idx.insert(idx.end(), by_class[c].begin() + static_cast<std::ptrdiff_t>(b * half),
                   by_class[c].begin() + static_cast<std::ptrdiff_t>((b + 1) * half));
      }
      const BatchGradient g = backprop_discrete(result.net, train.subset(idx), config.weights, config.exec);
      if (!std::isfinite(g.loss)) throw NumericError("sgd_train: loss diverged in epoch " + std::to_string(epoch));
      loss_sum += g.loss;
      rmsprop_step(opt, result.net.params, g.grad);
    }
    SgdEpochMetrics row;
    row.epoch = epoch;
    row.loss = loss_sum / static_cast<double>(batches);
    row.train_acc = accuracy_from_outputs(discrete_outputs(result.net, train, config.exec), train);
    if (clean != nullptr) row.clean_acc = accuracy_from_outputs(discrete_outputs(result.net, *clean, config.exec), *clean);
    if (noisy != nullptr) row.noisy_acc = accuracy_from_outputs(discrete_outputs(result.net, *noisy, config.exec), *noisy);
    result.metrics.push_back(row);
  }
  return result;
}

}  // namespace nodencg

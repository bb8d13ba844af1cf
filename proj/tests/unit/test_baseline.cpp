#include <cmath>
#include <random>

#include "doctest.h"
#include "nodencg/baseline.hpp"
#include "nodencg/model.hpp"
#include "test_support.hpp"

using namespace nodencg;

namespace {

DiscreteNet random_net(std::uint64_t seed, std::size_t layers, std::size_t dim = 2, double scale = 0.8) {
  DiscreteNet net(dim, layers, 0.1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : net.params) v = u(rng);
  return net;
}

double batch_loss(const DiscreteNet& net, const LabeledSet& batch, const CostWeights& w) {
  return backprop_discrete(net, batch, w, Exec::serial).loss;
}

}  // namespace

TEST_CASE("single layer forward") {
  DiscreteNet net(2, 1, 0.02);
  net.layer(0)[bias_index(2, 0)] = 1.0;
  const auto cache = forward_discrete(net, std::vector<double>{0.4, -0.3});
  CHECK(cache.states[2] == doctest::Approx(0.4 + 0.0152319).epsilon(1e-7));
  CHECK(cache.states[3] == -0.3);
  CHECK(0.02 * std::tanh(1.0) == doctest::Approx(0.0152319).epsilon(1e-6));
}

TEST_CASE("zero network is the identity") {
  const DiscreteNet net(2, 250, 0.02);
  const auto cache = forward_discrete(net, std::vector<double>{0.3, -0.8});
  CHECK(cache.states.size() == 251 * 2);
  CHECK(cache.states[500] == 0.3);
  CHECK(cache.states[501] == -0.8);
}

TEST_CASE("the residual network is fixed-step Euler on the mesh") {
  const auto p = testing::smooth_field<ParamTag>(5, 2, 1.0);
  const auto net = net_from_trajectory(p);
  CHECK(net.layers == 250);
  CHECK(net.step == p.mesh().step());
  const auto batch = testing::small_batch(6, 20);
  const auto node = network_outputs(p, batch, SolverOptions{.mode = StepMode::fixed_euler});
  const auto disc = discrete_outputs(net, batch);
  CHECK(node == disc);  // bitwise

  // Round trip through the trajectory form keeps every layer.
  const auto back = trajectory_from_net(net);
  for (std::size_t i = 0; i < 250; ++i) {
    for (std::size_t j = 0; j < 6; ++j) CHECK(back.node(i)[j] == p.node(i)[j]);
  }
  CHECK(net_from_trajectory(back).params == net.params);
}

TEST_CASE("backprop hand case") {
  DiscreteNet net(2, 1, 0.02);
  LabeledSet batch(2);
  batch.add(std::vector<double>{0.0, 0.0}, 0);
  const auto g = backprop_discrete(net, batch, CostWeights::squared_distance());
  CHECK(g.loss == doctest::Approx(0.5));
  CHECK(g.grad == std::vector<double>{0, 0, 0, 0, -0.02, 0});
}

TEST_CASE("backprop matches finite differences") {
  const std::vector<CostWeights> weights{CostWeights::squared_distance(), CostWeights::cross_entropy(),
                                         CostWeights{.mu1 = 0.4, .mu2 = 0.7, .mu3 = 0.2}};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto net = random_net(seed, 1 + seed % 5);
    const auto batch = testing::small_batch(10 + seed, 6);
    const auto& w = weights[seed % weights.size()];
    const auto g = backprop_discrete(net, batch, w);
    for (std::size_t i = 0; i < net.params.size(); ++i) {
      auto plus = net, minus = net;
      const double h = 1e-6;
      plus.params[i] += h;
      minus.params[i] -= h;
      const double fd = (batch_loss(plus, batch, w) - batch_loss(minus, batch, w)) / (2 * h);
      CHECK(std::abs(fd - g.grad[i]) <= 1e-6 * std::max(1.0, std::abs(g.grad[i])));
    }
  }
}

TEST_CASE("zero loss has zero gradient") {
  // Targets already reached: inputs sit on the one-hot targets and the net is the identity.
  const DiscreteNet net(2, 3, 0.1);
  LabeledSet batch(2);
  batch.add(std::vector<double>{1.0, 0.0}, 0);
  batch.add(std::vector<double>{0.0, 1.0}, 1);
  const auto g = backprop_discrete(net, batch, CostWeights::squared_distance());
  CHECK(g.loss == 0.0);
  for (double v : g.grad) CHECK(v == 0.0);
}

TEST_CASE("rmsprop") {
  SUBCASE("first step moves by lr / sqrt(1 - rho)") {
    RmsPropState s;
    std::vector<double> w{1.0, -2.0, 0.5}, g{3.0, -0.01, 0.0};
    rmsprop_step(s, w, g);
    CHECK(w[0] == doctest::Approx(1.0 - 0.316228).epsilon(1e-6));
    CHECK(w[1] == doctest::Approx(-2.0 + 0.316228).epsilon(1e-5));
    CHECK(w[2] == 0.5);
  }
  SUBCASE("update is nearly invariant to gradient scale") {
    RmsPropState a, b;
    std::vector<double> wa{0.0}, wb{0.0};
    for (int i = 0; i < 10; ++i) {
      const double g = std::sin(1.0 + i);
      rmsprop_step(a, wa, std::vector<double>{g});
      rmsprop_step(b, wb, std::vector<double>{1000.0 * g});
    }
    CHECK(wa[0] == doctest::Approx(wb[0]).epsilon(1e-5));
  }
  SUBCASE("accumulator stays between 0 and the largest squared gradient") {
    RmsPropState s;
    std::vector<double> w{0.0};
    double largest = 0.0;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 100; ++i) {
      const double g = n01(rng);
      largest = std::max(largest, g * g);
      rmsprop_step(s, w, std::vector<double>{g});
      CHECK(s.mean_square[0] >= 0.0);
      CHECK(s.mean_square[0] <= largest);
    }
  }
  SUBCASE("shape mismatch") {
    RmsPropState s;
    std::vector<double> w{0.0, 1.0};
    CHECK_THROWS_AS(rmsprop_step(s, w, std::vector<double>{1.0}), DomainError);
  }
}

TEST_CASE("sgd training") {
  SgdConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 20;
  cfg.seed = 4;
  const auto train = gen_moons(100, 0.07, 20);
  const auto clean = gen_moons(40, 0.0, 21);
  const auto a = sgd_train(cfg, train, &clean);
  REQUIRE(a.metrics.size() == 3);
  CHECK(a.metrics.back().loss < a.metrics.front().loss);
  CHECK(a.metrics.back().clean_acc >= 0.0);
  CHECK(a.metrics.back().noisy_acc == -1.0);
  CHECK(all_finite(a.net.params));
  const auto b = sgd_train(cfg, train, &clean);
  CHECK(a.net.params == b.net.params);
  cfg.seed = 5;
  CHECK_FALSE(sgd_train(cfg, train).net.params == a.net.params);
}

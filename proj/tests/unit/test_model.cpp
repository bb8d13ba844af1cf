#include <cmath>
#include <random>

#include "doctest.h"
#include "nodencg/model.hpp"
#include "test_support.hpp"

using namespace nodencg;
using testing::smooth_field;

namespace {

// Constant-in-t parameters from W (column-major) and b.
ParamTrajectory constant_params(std::vector<double> theta, std::size_t dim = 2) {
  ParamTrajectory p(TimeMesh{}, dim);
  for (std::size_t i = 0; i < p.node_count(); ++i) std::copy(theta.begin(), theta.end(), p.node(i).begin());
  return p;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("rhs examples") {
  const auto zero = constant_params({0, 0, 0, 0, 0, 0});
  const auto identity = constant_params({1, 0, 0, 1, 0, 0});
  CHECK(NodeModel(zero).rhs(1.3, std::vector<double>{0.4, -2.0}) == std::vector<double>{0.0, 0.0});
  CHECK(NodeModel(identity).rhs(0.0, std::vector<double>{0.0, 0.0}) == std::vector<double>{0.0, 0.0});
  const auto out = NodeModel(identity).rhs(2.0, std::vector<double>{1.0, 0.0});
  CHECK(out[0] == doctest::Approx(0.761594).epsilon(1e-6));
  CHECK(out[1] == 0.0);
}

TEST_CASE("rhs uses the vectorization (W11, W21, W12, W22, b1, b2)") {
  // W = [[1, 2], [3, 4]], b = (0.5, -0.5)
  const auto p = constant_params({1, 3, 2, 4, 0.5, -0.5});
  const auto out = NodeModel(p).rhs(0.0, std::vector<double>{0.1, 0.2});
  CHECK(out[0] == doctest::Approx(std::tanh(0.1 + 0.4 + 0.5)));
  CHECK(out[1] == doctest::Approx(std::tanh(0.3 + 0.8 - 0.5)));
}

TEST_CASE("state Jacobian") {
  SUBCASE("identity weights at the origin pass v through") {
    const auto p = constant_params({1, 0, 0, 1, 0, 0});
    const NodeModel m(p);
    std::vector<double> out(2);
    m.jac_state_apply(0.5, std::vector<double>{0, 0}, std::vector<double>{0.3, -0.7}, out);
    CHECK(out[0] == doctest::Approx(0.3));
    CHECK(out[1] == doctest::Approx(-0.7));
    m.jac_state_apply(0.5, std::vector<double>{0, 0}, std::vector<double>{0, 0}, out);
    CHECK(out == std::vector<double>{0, 0});
  }
  SUBCASE("matches central differences and its transpose") {
    std::mt19937_64 rng(11);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      const auto p = smooth_field<ParamTag>(trial, 2, 1.0);
      const NodeModel m(p);
      const double t = 5.0 * std::uniform_real_distribution<double>(0, 1)(rng);
      const auto x = random_vec(rng, 2), v = random_vec(rng, 2), w = random_vec(rng, 2);
      std::vector<double> jv(2), jtw(2);
      m.jac_state_apply(t, x, v, jv);
      m.jac_state_transpose_apply(t, x, w, jtw);
      const double h = 1e-6;
      std::vector<double> xp(2), xm(2);
      for (int i = 0; i < 2; ++i) {
        xp[i] = x[i] + h * v[i];
        xm[i] = x[i] - h * v[i];
      }
      const auto fp = m.rhs(t, xp), fm = m.rhs(t, xm);
      for (int i = 0; i < 2; ++i) {
        const double fd = (fp[i] - fm[i]) / (2 * h);
        CHECK(std::abs(fd - jv[i]) <= 1e-6 * std::max(1.0, std::abs(jv[i])));
      }
      CHECK(dot(jv, w) == doctest::Approx(dot(v, jtw)).epsilon(1e-12));
    }
  }
}

TEST_CASE("parameter Jacobian") {
  SUBCASE("zero costate") {
    const auto p = constant_params({0.2, 0.1, -0.3, 0.4, 0.1, 0.0});
    const NodeModel m(p);
    std::vector<double> acc(6, 0.0);
    m.jac_params_accumulate(1.0, std::vector<double>{0.5, 0.5}, std::vector<double>{0, 0}, acc);
    for (double v : acc) CHECK(v == 0.0);
  }
  SUBCASE("zero parameters at the origin") {
    const auto p = constant_params({0, 0, 0, 0, 0, 0});
    const NodeModel m(p);
    std::vector<double> acc(6, 0.0);
    m.jac_params_accumulate(1.0, std::vector<double>{0, 0}, std::vector<double>{-1, 0}, acc);
    CHECK(acc == std::vector<double>{0, 0, 0, 0, -1, 0});
  }
  SUBCASE("accumulate is the adjoint of apply and apply matches differences") {
    std::mt19937_64 rng(5);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      const auto p = smooth_field<ParamTag>(100 + trial, 2, 1.0);
      const NodeModel m(p);
      const double t = 5.0 * std::uniform_real_distribution<double>(0, 1)(rng);
      const auto x = random_vec(rng, 2), lambda = random_vec(rng, 2), eta = random_vec(rng, 6);
      std::vector<double> acc(6, 0.0), applied(2);
      m.jac_params_accumulate(t, x, lambda, acc);
      m.jac_params_apply(t, x, eta, applied);
      CHECK(dot(acc, eta) == doctest::Approx(dot(lambda, applied)).epsilon(1e-12));

      // D_theta F eta by central differences in theta(t).
      const auto theta = interpolate(p, t);
      const double h = 1e-6;
      std::vector<double> tp(6), tm(6), zp(2), zm(2);
      for (int j = 0; j < 6; ++j) {
        tp[j] = theta[j] + h * eta[j];
        tm[j] = theta[j] - h * eta[j];
      }
      affine(tp, x, zp);
      affine(tm, x, zm);
      for (int i = 0; i < 2; ++i) {
        const double fd = (std::tanh(zp[i]) - std::tanh(zm[i])) / (2 * h);
        CHECK(std::abs(fd - applied[i]) <= 1e-6 * std::max(1.0, std::abs(applied[i])));
      }
    }
  }
}

TEST_CASE("forward solutions") {
  const auto batch = testing::small_batch(3, 20);
  const auto p = smooth_field<ParamTag>(9, 2, 1.5);

  SUBCASE("bounded speed: |x(t) - x0| <= t sqrt(N)") {
    const auto sols = solve_forward(p, batch, SolverOptions{});
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto x0 = batch.input(k);
      for (std::size_t i = 0; i < sols[k].size(); ++i) {
        const auto x = sols[k].state(i);
        const double d = std::hypot(x[0] - x0[0], x[1] - x0[1]);
        CHECK(d <= sols[k].times()[i] * std::sqrt(2.0) + 1e-12);
      }
    }
  }

  SUBCASE("fixed RK4 on the mesh agrees with adaptive RK45") {
    const auto a = network_outputs(p, batch, SolverOptions{});
    const auto f = network_outputs(p, batch, SolverOptions{.mode = StepMode::fixed_rk4});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - f[i]) <= 1e-4 * std::max(1.0, std::abs(a[i])));
  }

  SUBCASE("distinct inputs never collide") {
    const auto sols = solve_forward(p, batch, SolverOptions{.mode = StepMode::fixed_rk4});
    for (std::size_t k = 0; k < batch.size(); ++k) {
      for (std::size_t l = k + 1; l < batch.size(); ++l) {
        const auto a = batch.input(k), b = batch.input(l);
        if (std::hypot(a[0] - b[0], a[1] - b[1]) < 1e-2) continue;
        for (std::size_t i = 0; i < sols[k].size(); ++i) {
          const auto xa = sols[k].state(i), xb = sols[l].state(i);
          CHECK(std::hypot(xa[0] - xb[0], xa[1] - xb[1]) > 1e-6);
        }
      }
    }
  }
}

TEST_CASE("unsupported dimension") {
  const ParamTrajectory big(TimeMesh{}, kMaxStateDim + 1);
  CHECK_THROWS_AS(NodeModel{big}, DomainError);
}

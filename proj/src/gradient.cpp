#include "nodencg/gradient.hpp"

#include <array>
#include <cmath>

#include "nodencg/model.hpp"

namespace nodencg {

CostateTrajectory solve_adjoint(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                                std::span<const DenseSolution> forward, const SolverOptions& opts, Exec exec) {
  if (forward.size() != batch.size()) throw DomainError("solve_adjoint: one forward solution per sample required");
  const NodeModel model(params);
  const std::size_t n = batch.dim();
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  const double final_time = params.mesh().final_time();
  const auto nodes = params.mesh().nodes();

  CostateTrajectory out(batch.size());
  for_each_index(exec, batch.size(), [&](std::size_t k) {
    const DenseSolution& fwd = forward[k];
    const auto y = batch.target(k);
    IvpProblem p;
    p.dim = n;
    p.t_start = final_time;
    p.t_end = 0.0;
    p.x_init.resize(n);
    terminal_loss_gradient(fwd.terminal(), y, w, p.x_init);
    for (double& v : p.x_init) v *= inv_k;
    const double run = w.mu_run * inv_k;
    p.rhs = [&, run](double t, std::span<const double> lambda, std::span<double> dl) {
      std::array<double, kMaxStateDim> xbuf;
      const std::span<double> x(xbuf.data(), n);
      fwd.eval(t, x);
      model.jac_state_transpose_apply(t, x, lambda, dl);
      for (std::size_t i = 0; i < n; ++i) dl[i] = -dl[i];
      if (run != 0.0) {
        for (std::size_t i = 0; i < n; ++i) dl[i] -= run * (x[i] - y[i]);
      }
    };
    p.breakpoints = nodes;
    p.options = opts;
    p.options.fixed_steps = params.mesh().intervals();
    out[k] = solve_ivp(p);
  });
  return out;
}

GradientField l2_gradient(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                          std::span<const DenseSolution> forward, const CostateTrajectory& costates, Exec exec) {
  if (forward.size() != batch.size() || costates.size() != batch.size()) {
    throw DomainError("l2_gradient: one forward and one costate solution per sample required");
  }
  const TimeMesh& mesh = params.mesh();
  const std::size_t n = batch.dim();
  const Activation act = tanh_activation();
  const double reg = w.mu4 - w.mu5;
  GradientField grad(mesh, n);
  for_each_index(exec, mesh.node_count(), [&](std::size_t i) {
    const double t = mesh.node(i);
    const auto theta = params.node(i);
    auto acc = grad.node(i);
    std::array<double, kMaxStateDim> xbuf, lbuf;
    const std::span<double> x(xbuf.data(), n), lambda(lbuf.data(), n);
    for (std::size_t k = 0; k < batch.size(); ++k) {
      forward[k].eval(t, x);
      costates[k].eval(t, lambda);
      NodeModel::jac_params_accumulate_at(theta, x, lambda, acc, act);
    }
    if (reg != 0.0) {
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += reg * theta[j];
    }
  });
  return grad;
}

namespace {

// cosh(a) / cosh(b) for a, b >= 0 without forming cosh.
double cosh_ratio(double a, double b) {
  return std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / (1.0 + std::exp(-2.0 * b));
}

// Scaled cumulative integrals:
//   a_hat(t) = int_0^t u cosh(s) ds / cosh(t),  b_hat(t) = int_t^T u cosh(T-s) ds / cosh(T-t).
void scaled_integrals(std::span<const double> u, const TimeMesh& mesh, std::vector<double>& a_hat,
                      std::vector<double>& b_hat) {
  const std::size_t m = mesh.node_count();
  const double final_time = mesh.final_time();
  a_hat.assign(m, 0.0);
  b_hat.assign(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    const double t0 = mesh.node(i - 1), t1 = mesh.node(i);
    const double r = cosh_ratio(t0, t1);
    a_hat[i] = a_hat[i - 1] * r + 0.5 * (t1 - t0) * (u[i - 1] * r + u[i]);
  }
  for (std::size_t i = m - 1; i-- > 0;) {
    const double t0 = mesh.node(i), t1 = mesh.node(i + 1);
    const double q = cosh_ratio(final_time - t1, final_time - t0);
    b_hat[i] = b_hat[i + 1] * q + 0.5 * (t1 - t0) * (u[i] + u[i + 1] * q);
  }
}

}  // namespace

SobolevValues sobolev_representative_with_slope(std::span<const double> u, const TimeMesh& mesh) {
  if (u.size() != mesh.node_count()) throw DomainError("sobolev_representative: expected one value per node");
  std::vector<double> a_hat, b_hat;
  scaled_integrals(u, mesh, a_hat, b_hat);
  const double final_time = mesh.final_time();
  const double e2T = std::exp(-2.0 * final_time);
  const double denom = 2.0 * (1.0 - e2T);
  SobolevValues out{std::vector<double>(u.size()), std::vector<double>(u.size())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = mesh.node(i);
    const double el = std::exp(-2.0 * t);                  // e^{-2t}
    const double er = std::exp(-2.0 * (final_time - t));  // e^{-2(T-t)}
    // cosh t cosh(T-t) / sinh T, sinh(T-t) cosh t / sinh T, sinh t cosh(T-t) / sinh T
    const double g = ((1.0 + e2T) + (el + er)) / denom;
    const double gl = ((1.0 - e2T) + (el - er)) / denom;
    const double gr = ((1.0 - e2T) + (er - el)) / denom;
    out.value[i] = g * (a_hat[i] + b_hat[i]);
    out.slope[i] = -gl * a_hat[i] + gr * b_hat[i];
  }
  return out;
}

std::vector<double> sobolev_representative(std::span<const double> u, const TimeMesh& mesh) {
  return sobolev_representative_with_slope(u, mesh).value;
}

DerivativePairing sobolev_representative_of_derivative_pairing(std::span<const double> u, const TimeMesh& mesh) {
  if (u.size() != mesh.node_count()) throw DomainError("sobolev pairing: expected one value per node");
  std::vector<double> primitive(u.size(), 0.0);
  for (std::size_t i = 1; i < u.size(); ++i) {
    primitive[i] = primitive[i - 1] + 0.5 * (mesh.node(i) - mesh.node(i - 1)) * (u[i - 1] + u[i]);
  }
  const SobolevValues v = sobolev_representative_with_slope(primitive, mesh);
  DerivativePairing out{std::vector<double>(u.size()), std::vector<double>(u.size())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.value[i] = primitive[i] - v.value[i];
    out.slope[i] = u[i] - v.slope[i];
  }
  return out;
}

GradientField w12_gradient(const GradientField& l2grad, const ParamTrajectory& params, double mu5) {
  if (!l2grad.same_shape(params)) throw DomainError("w12_gradient: mesh or dimension mismatch");
  GradientField out(l2grad.mesh(), l2grad.state_dim());
  for (std::size_t j = 0; j < l2grad.param_dim(); ++j) {
    auto v = sobolev_representative(l2grad.component(j), l2grad.mesh());
    if (mu5 != 0.0) {
      const auto theta = params.component(j);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += mu5 * theta[i];
    }
    out.set_component(j, v);
  }
  return out;
}

}  // namespace nodencg

#include "nodencg/line_search.hpp"

#include <array>
#include <cmath>

#include "nodencg/model.hpp"

namespace nodencg {

std::vector<DenseSolution> solve_sensitivity(const ParamTrajectory& params, const LabeledSet& batch,
                                             const GradientField& direction, std::span<const DenseSolution> forward,
                                             const SolverOptions& opts, Exec exec) {
  if (!direction.same_shape(params)) throw DomainError("solve_sensitivity: direction shape mismatch");
  if (forward.size() != batch.size()) throw DomainError("solve_sensitivity: one forward solution per sample required");
  const NodeModel model(params);
  const std::size_t n = batch.dim();
  const std::size_t m = params.param_dim();
  const auto nodes = params.mesh().nodes();

  std::vector<DenseSolution> out(batch.size());
  for_each_index(exec, batch.size(), [&](std::size_t k) {
    const DenseSolution& fwd = forward[k];
    IvpProblem p;
    p.dim = n;
    p.t_start = 0.0;
    p.t_end = params.mesh().final_time();
    p.x_init.assign(n, 0.0);
    p.rhs = [&](double t, std::span<const double> xi, std::span<double> dxi) {
      std::array<double, kMaxStateDim> xbuf, wxi, vxa;
      std::array<double, param_count(kMaxStateDim)> eta;
      const std::span<double> x(xbuf.data(), n);
      fwd.eval(t, x);
      interpolate(direction, t, std::span(eta.data(), m));
      // sigma' o (W xi) + sigma' o (V x + a)
      model.jac_state_apply(t, x, xi, std::span(wxi.data(), n));
      model.jac_params_apply(t, x, std::span<const double>(eta.data(), m), std::span(vxa.data(), n));
      for (std::size_t i = 0; i < n; ++i) dxi[i] = wxi[i] + vxa[i];
    };
    p.breakpoints = nodes;
    p.options = opts;
    p.options.fixed_steps = params.mesh().intervals();
    out[k] = solve_ivp(p);
  });
  return out;
}

LineSearchFunctional::LineSearchFunctional(const ParamTrajectory& params, const LabeledSet& batch,
                                           const CostWeights& w, std::span<const DenseSolution> forward,
                                           std::span<const DenseSolution> sensitivities,
                                           const GradientField& direction)
    : weights_(w), dim_(batch.dim()), count_(batch.size()) {
  if (forward.size() != count_ || sensitivities.size() != count_) {
    throw DomainError("LineSearchFunctional: one forward and one sensitivity solution per sample required");
  }
  if (!direction.same_shape(params)) throw DomainError("LineSearchFunctional: direction shape mismatch");
  outputs_.reserve(count_ * dim_);
  sensitivity_.reserve(count_ * dim_);
  targets_.reserve(count_ * dim_);
  for (std::size_t k = 0; k < count_; ++k) {
    const auto x = forward[k].terminal();
    const auto xi = sensitivities[k].terminal();
    const auto y = batch.target(k);
    outputs_.insert(outputs_.end(), x.begin(), x.end());
    sensitivity_.insert(sensitivity_.end(), xi.begin(), xi.end());
    targets_.insert(targets_.end(), y.begin(), y.end());
  }
  theta_eta_ = l2_inner(params, direction);
  eta_eta_ = l2_norm_sq(direction);
  dtheta_deta_ = derivative_inner(params, direction);
  deta_deta_ = derivative_inner(direction, direction);
  penalty_base_ = penalty(params, w);

  if (w.mu_run != 0.0) {
    const TimeMesh& mesh = params.mesh();
    std::vector<double> base(mesh.node_count()), cross(mesh.node_count()), quad(mesh.node_count());
    std::vector<double> x(dim_), xi(dim_);
    for (std::size_t k = 0; k < count_; ++k) {
      const auto y = batch.target(k);
      for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        forward[k].eval(mesh.node(i), x);
        sensitivities[k].eval(mesh.node(i), xi);
        double b = 0.0, c = 0.0, q = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
          b += 0.5 * (x[j] - y[j]) * (x[j] - y[j]);
          c += (x[j] - y[j]) * xi[j];
          q += xi[j] * xi[j];
        }
        base[i] = b;
        cross[i] = c;
        quad[i] = q;
      }
      run_base_ += trapezoid(mesh, base);
      run_cross_ += trapezoid(mesh, cross);
      run_quad_ += trapezoid(mesh, quad);
    }
  }
}

double LineSearchFunctional::value(double beta) const {
  std::vector<double> z(dim_);
  double data = 0.0;
  for (std::size_t k = 0; k < count_; ++k) {
    for (std::size_t j = 0; j < dim_; ++j) z[j] = outputs_[k * dim_ + j] + beta * sensitivity_[k * dim_ + j];
    data += terminal_loss(z, std::span(targets_).subspan(k * dim_, dim_), weights_);
  }
  const double inv_k = 1.0 / static_cast<double>(count_);
  const double run = run_base_ + beta * run_cross_ + 0.5 * beta * beta * run_quad_;
  const double pen4 = 0.5 * weights_.mu4 * (2.0 * beta * theta_eta_ + beta * beta * eta_eta_);
  const double pen5 = 0.5 * weights_.mu5 * (2.0 * beta * dtheta_deta_ + beta * beta * deta_deta_);
  return inv_k * (data + weights_.mu_run * run) + penalty_base_ + pen4 + pen5;
}

double LineSearchFunctional::derivative(double beta) const {
  std::vector<double> z(dim_), g(dim_);
  double data = 0.0;
  for (std::size_t k = 0; k < count_; ++k) {
    for (std::size_t j = 0; j < dim_; ++j) z[j] = outputs_[k * dim_ + j] + beta * sensitivity_[k * dim_ + j];
    terminal_loss_gradient(z, std::span(targets_).subspan(k * dim_, dim_), weights_, g);
    for (std::size_t j = 0; j < dim_; ++j) data += g[j] * sensitivity_[k * dim_ + j];
  }
  const double inv_k = 1.0 / static_cast<double>(count_);
  return inv_k * (data + weights_.mu_run * (run_cross_ + beta * run_quad_)) +
         weights_.mu4 * (theta_eta_ + beta * eta_eta_) + weights_.mu5 * (dtheta_deta_ + beta * deta_deta_);
}

double etilde_prime(double beta, const LineSearchFunctional& ls) { return ls.derivative(beta); }

BetaResult optimal_beta(const LineSearchFunctional& ls, const LineSearchOptions& opts) {
  const double d0 = ls.derivative(0.0);
  if (d0 == 0.0) return {0.0, BetaStatus::stationary};
  if (!(d0 < 0.0)) return {0.0, BetaStatus::not_descent};

  if (ls.is_affine()) {
    const double slope = ls.derivative(1.0) - d0;
    if (!(slope > 0.0)) return {opts.beta_max, BetaStatus::capped};
    return {-d0 / slope, BetaStatus::ok};
  }

  double lo = 0.0, hi = opts.beta_max;
  if (ls.derivative(hi) < 0.0) return {opts.beta_max, BetaStatus::capped};
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < opts.max_iterations; ++it) {
    mid = 0.5 * (lo + hi);
    const double d = ls.derivative(mid);
    if (std::abs(d) <= opts.tolerance) break;
    if (d < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {mid, BetaStatus::ok};
}

std::optional<double> fletcher_reeves_gamma(double curr_norm_sq, double prev_norm_sq) {
  if (!(prev_norm_sq > 0.0) || !std::isfinite(prev_norm_sq)) return std::nullopt;
  return curr_norm_sq / prev_norm_sq;
}

}  // namespace nodencg

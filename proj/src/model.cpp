#include "nodencg/model.hpp"

#include <array>
#include <cmath>

#include "nodencg/exec.hpp"

namespace nodencg {

namespace {

double tanh_value(double z) { return std::tanh(z); }
double tanh_slope(double /*z*/, double value) { return 1.0 - value * value; }

using ThetaBuf = std::array<double, param_count(kMaxStateDim)>;
using StateBuf = std::array<double, kMaxStateDim>;

}  // namespace

Activation tanh_activation() { return {&tanh_value, &tanh_slope}; }

void affine(std::span<const double> theta, std::span<const double> x, std::span<double> z) {
  const std::size_t n = x.size();
  const double* b = theta.data() + n * n;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += theta[j * n + i] * x[j];
    z[i] = acc + b[i];
  }
}

void euler_layer(std::span<const double> theta, double h, std::span<const double> x, std::span<double> out,
                 const Activation& act) {
  const std::size_t n = x.size();
  StateBuf z;
  affine(theta, x, std::span(z.data(), n));
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h * act.value(z[i]);
}

NodeModel::NodeModel(const ParamTrajectory& params, Activation act)
    : params_(&params), act_(act), dim_(params.state_dim()) {
  if (dim_ == 0 || dim_ > kMaxStateDim) throw DomainError("NodeModel: unsupported state dimension");
}

void NodeModel::rhs(double t, std::span<const double> x, std::span<double> out) const {
  ThetaBuf theta;
  const std::span<double> th(theta.data(), params_->param_dim());
  interpolate(*params_, t, th);
  affine(th, x, out);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = act_.value(out[i]);
}

std::vector<double> NodeModel::rhs(double t, std::span<const double> x) const {
  std::vector<double> out(dim_);
  rhs(t, x, out);
  return out;
}

void NodeModel::slope_at(double t, std::span<const double> x, std::span<double> theta,
                         std::span<double> slope) const {
  interpolate(*params_, t, theta);
  affine(theta, x, slope);
  for (std::size_t i = 0; i < dim_; ++i) slope[i] = act_.slope(slope[i], act_.value(slope[i]));
}

void NodeModel::jac_state_apply(double t, std::span<const double> x, std::span<const double> v,
                                std::span<double> out) const {
  ThetaBuf theta;
  StateBuf slope;
  const std::span<double> th(theta.data(), params_->param_dim());
  slope_at(t, x, th, std::span(slope.data(), dim_));
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) acc += th[j * dim_ + i] * v[j];
    out[i] = slope[i] * acc;
  }
}

void NodeModel::jac_state_transpose_apply(double t, std::span<const double> x, std::span<const double> w,
                                          std::span<double> out) const {
  ThetaBuf theta;
  StateBuf slope;
  const std::span<double> th(theta.data(), params_->param_dim());
  slope_at(t, x, th, std::span(slope.data(), dim_));
  for (std::size_t j = 0; j < dim_; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) acc += th[j * dim_ + i] * slope[i] * w[i];
    out[j] = acc;
  }
}

void NodeModel::jac_params_apply(double t, std::span<const double> x, std::span<const double> eta,
                                 std::span<double> out) const {
  ThetaBuf theta;
  StateBuf slope;
  const std::span<double> th(theta.data(), params_->param_dim());
  slope_at(t, x, th, std::span(slope.data(), dim_));
  affine(eta, x, out);
  for (std::size_t i = 0; i < dim_; ++i) out[i] *= slope[i];
}

void NodeModel::jac_params_accumulate(double t, std::span<const double> x, std::span<const double> lambda,
                                      std::span<double> acc) const {
  ThetaBuf theta;
  const std::span<double> th(theta.data(), params_->param_dim());
  interpolate(*params_, t, th);
  jac_params_accumulate_at(th, x, lambda, acc, act_);
}

void NodeModel::jac_params_accumulate_at(std::span<const double> theta, std::span<const double> x,
                                         std::span<const double> lambda, std::span<double> acc,
                                         const Activation& act) {
  const std::size_t n = x.size();
  StateBuf z;
  affine(theta, x, std::span(z.data(), n));
  StateBuf g;
  for (std::size_t i = 0; i < n; ++i) g[i] = lambda[i] * act.slope(z[i], act.value(z[i]));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) acc[j * n + i] += g[i] * x[j];
  }
  for (std::size_t i = 0; i < n; ++i) acc[n * n + i] += g[i];
}

IvpProblem forward_problem(const NodeModel& model, std::span<const double> x0, const SolverOptions& opts) {
  IvpProblem p;
  p.dim = model.state_dim();
  p.rhs = [&model](double t, std::span<const double> x, std::span<double> dx) { model.rhs(t, x, dx); };
  p.t_start = 0.0;
  p.t_end = model.params().mesh().final_time();
  p.x_init.assign(x0.begin(), x0.end());
  p.breakpoints = model.params().mesh().nodes();
  p.options = opts;
  p.options.fixed_steps = model.params().mesh().intervals();
  return p;
}

std::vector<DenseSolution> solve_forward(const ParamTrajectory& params, const LabeledSet& set,
                                         const SolverOptions& opts, Exec exec) {
  if (set.dim() != params.state_dim()) throw DomainError("solve_forward: data and model dimensions differ");
  const NodeModel model(params);
  std::vector<DenseSolution> out(set.size());
  for_each_index(exec, set.size(), [&](std::size_t k) { out[k] = solve_ivp(forward_problem(model, set.input(k), opts)); });
  return out;
}

std::vector<double> network_outputs(const ParamTrajectory& params, const LabeledSet& set, const SolverOptions& opts,
                                    Exec exec) {
  const NodeModel model(params);
  const std::size_t n = set.dim();
  std::vector<double> out(set.size() * n);
  for_each_index(exec, set.size(), [&](std::size_t k) {
    const DenseSolution sol = solve_ivp(forward_problem(model, set.input(k), opts));
    const auto xt = sol.terminal();
    std::copy(xt.begin(), xt.end(), out.begin() + static_cast<std::ptrdiff_t>(k * n));
  });
  return out;
}

}  // namespace nodencg

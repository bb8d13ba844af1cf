#pragma once

// The tanh-affine NODE  x'(t) = sigma(W(t) x + b(t))  and its Jacobians.

#include <cstddef>
#include <span>
#include <vector>

#include "nodencg/exec.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ode.hpp"

namespace nodencg {

/// Largest supported state dimension; keeps per-call scratch on the stack.
inline constexpr std::size_t kMaxStateDim = 8;

/// A C^1 activation. `slope` receives both the pre-activation z and sigma(z)
/// so that tanh can reuse its value: sech^2(z) = 1 - tanh^2(z).
struct Activation {
  double (*value)(double z);
  double (*slope)(double z, double value);
};

Activation tanh_activation();

/// z = W x + b for a parameter vector theta = (vec(W), b).
void affine(std::span<const double> theta, std::span<const double> x, std::span<double> z);

/// One explicit Euler layer x + h * sigma(W x + b). Shared with the discrete
/// baseline so both paths run the same arithmetic.
void euler_layer(std::span<const double> theta, double h, std::span<const double> x, std::span<double> out,
                 const Activation& act);

class NodeModel {
 public:
  /// Keeps a reference to `params`, which must outlive the model.
  explicit NodeModel(const ParamTrajectory& params, Activation act = tanh_activation());
  explicit NodeModel(ParamTrajectory&&, Activation = tanh_activation()) = delete;

  std::size_t state_dim() const noexcept { return dim_; }
  const ParamTrajectory& params() const noexcept { return *params_; }
  const Activation& activation() const noexcept { return act_; }

  /// sigma(W(t) x + b(t)).
  void rhs(double t, std::span<const double> x, std::span<double> out) const;
  std::vector<double> rhs(double t, std::span<const double> x) const;

  /// D_x F v = sigma'(Wx+b) o (W v).
  void jac_state_apply(double t, std::span<const double> x, std::span<const double> v,
                       std::span<double> out) const;
  /// D_x F^T w = W^T (sigma'(Wx+b) o w).
  void jac_state_transpose_apply(double t, std::span<const double> x, std::span<const double> w,
                                 std::span<double> out) const;
  /// D_theta F eta = sigma'(Wx+b) o (V x + a) with eta = (vec(V), a).
  void jac_params_apply(double t, std::span<const double> x, std::span<const double> eta,
                        std::span<double> out) const;
  /// Adds D_theta F^T lambda, i.e. (lambda o sigma') x^T into the vec(W) block
  /// and lambda o sigma' into the b block of `acc`.
  void jac_params_accumulate(double t, std::span<const double> x, std::span<const double> lambda,
                             std::span<double> acc) const;

  /// Same operations with theta given directly (used at mesh nodes).
  static void jac_params_accumulate_at(std::span<const double> theta, std::span<const double> x,
                                       std::span<const double> lambda, std::span<double> acc,
                                       const Activation& act);

 private:
  /// theta(t) and sigma'(W x + b) into caller-provided buffers.
  void slope_at(double t, std::span<const double> x, std::span<double> theta, std::span<double> slope) const;

  const ParamTrajectory* params_;
  Activation act_;
  std::size_t dim_;
};

/// The IVP x' = F(t, x), x(0) = x0 on [0, T] for one input.
IvpProblem forward_problem(const NodeModel& model, std::span<const double> x0, const SolverOptions& opts);

/// Forward solves for every input of `set`, one dense solution per sample.
std::vector<DenseSolution> solve_forward(const ParamTrajectory& params, const LabeledSet& set,
                                         const SolverOptions& opts, Exec exec = Exec::parallel);

/// Terminal states x_k(T), flattened sample-major.
std::vector<double> network_outputs(const ParamTrajectory& params, const LabeledSet& set, const SolverOptions& opts,
                                    Exec exec = Exec::parallel);

}  // namespace nodencg

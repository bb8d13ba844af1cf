#pragma once

// Sensitivity solve and exact line search along a descent direction eta = (V, a).
//
// With xi_k the sensitivity of x_k along eta, the surrogate
//   E~(beta) = 1/K sum_k [L(x_k(T) + beta xi_k(T), y_k) + mu_run int l(x_k + beta xi_k, y_k)]
//              + int Phi(theta + beta eta, theta' + beta eta') dt
// agrees with E(theta + beta eta) to first order in beta. The learning rate is
// the root of E~'(beta).

#include <optional>
#include <span>
#include <vector>

#include "nodencg/cost.hpp"
#include "nodencg/exec.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ode.hpp"

namespace nodencg {

/// xi_k' = sigma'(W x_k + b) o (W xi_k + V x_k + a), xi_k(0) = 0.
std::vector<DenseSolution> solve_sensitivity(const ParamTrajectory& params, const LabeledSet& batch,
                                             const GradientField& direction, std::span<const DenseSolution> forward,
                                             const SolverOptions& opts, Exec exec = Exec::parallel);

/// E~ and E~' reduced to per-sample terminal data plus a handful of mesh
/// integrals; evaluating at a new beta costs O(K N).
class LineSearchFunctional {
 public:
  LineSearchFunctional(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                       std::span<const DenseSolution> forward, std::span<const DenseSolution> sensitivities,
                       const GradientField& direction);

  double value(double beta) const;
  double derivative(double beta) const;
  /// E~' is affine in beta when the cross-entropy term is off.
  bool is_affine() const noexcept { return weights_.mu2 == 0.0; }

 private:
  CostWeights weights_;
  std::size_t dim_;
  std::size_t count_;
  std::vector<double> outputs_;       // x_k(T)
  std::vector<double> sensitivity_;   // xi_k(T)
  std::vector<double> targets_;       // y_k
  // Mesh integrals: <theta, eta>, |eta|^2 in L2 and for the derivatives.
  double theta_eta_ = 0.0, eta_eta_ = 0.0, dtheta_deta_ = 0.0, deta_deta_ = 0.0;
  double penalty_base_ = 0.0;
  // Running loss: sum_k int 1/2|x-y|^2, int <x-y, xi>, int |xi|^2.
  double run_base_ = 0.0, run_cross_ = 0.0, run_quad_ = 0.0;
};

double etilde_prime(double beta, const LineSearchFunctional& ls);

enum class BetaStatus {
  ok,
  not_descent,  ///< E~'(0) > 0; caller restarts with steepest descent
  stationary,   ///< E~'(0) == 0; step skipped
  capped,       ///< no root in [0, beta_max]; beta_max returned
};

struct BetaResult {
  double beta = 0.0;
  BetaStatus status = BetaStatus::ok;
};

struct LineSearchOptions {
  double beta_max = 10.0;
  double tolerance = 1e-10;
  int max_iterations = 100;
};

/// Root of E~'. Closed form when affine, bisection on [0, beta_max] otherwise
/// (E~ is convex in beta for the losses used here).
BetaResult optimal_beta(const LineSearchFunctional& ls, const LineSearchOptions& opts = {});

/// Fletcher-Reeves coefficient |g_j|^2 / |g_{j-1}|^2; nullopt asks for a restart.
std::optional<double> fletcher_reeves_gamma(double curr_norm_sq, double prev_norm_sq);

}  // namespace nodencg

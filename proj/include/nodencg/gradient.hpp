#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nodencg/cost.hpp"
#include "nodencg/exec.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ode.hpp"

namespace nodencg {

/// Costates lambda_k(t), one dense backward solution per sample.
using CostateTrajectory = std::vector<DenseSolution>;

/// Backward solve of
///   lambda' = -W^T (sigma'(W x_k + b) o lambda) - mu_run/K (x_k - y_k),
///   lambda(T) = 1/K D_x L(x_k(T), y_k)^T.
CostateTrajectory solve_adjoint(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                                std::span<const DenseSolution> forward, const SolverOptions& opts,
                                Exec exec = Exec::parallel);

/// L2 steepest-ascent direction at the mesh nodes:
///   dtheta(t_i) = sum_k D_theta F(t_i, x_k, theta)^T lambda_k + (mu4 - mu5) theta(t_i).
GradientField l2_gradient(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                          std::span<const DenseSolution> forward, const CostateTrajectory& costates,
                          Exec exec = Exec::parallel);

/// Riesz representative in W^{1,2}(0, T) of the L2 functional phi -> int u phi:
///   v(t) = cosh(T-t)/sinh T int_0^t u cosh + cosh t/sinh T int_t^T u cosh(T-s) ds,
/// the solution of v'' - v = -u with v'(0) = v'(T) = 0. Cumulative integrals
/// are trapezoidal; the cosh factors are evaluated in exp-scaled form so large
/// T does not overflow.
std::vector<double> sobolev_representative(std::span<const double> u, const TimeMesh& mesh);

/// v and v' at the nodes (v' from the differentiated kernel).
struct SobolevValues {
  std::vector<double> value;
  std::vector<double> slope;
};
SobolevValues sobolev_representative_with_slope(std::span<const double> u, const TimeMesh& mesh);

/// Representative r of phi -> int u phi': with U = int_0^t u and v = S[U],
/// r = U - v and r' = u - v', so that int u phi' = int (r phi + r' phi').
struct DerivativePairing {
  std::vector<double> value;   ///< U - v
  std::vector<double> slope;   ///< u - v'
};
DerivativePairing sobolev_representative_of_derivative_pairing(std::span<const double> u, const TimeMesh& mesh);

/// W^{1,2} steepest-ascent direction from the L2 one: S[dtheta] + mu5 theta,
/// with S applied to every component.
GradientField w12_gradient(const GradientField& l2grad, const ParamTrajectory& params, double mu5);

}  // namespace nodencg

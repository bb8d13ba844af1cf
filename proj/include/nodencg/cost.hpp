#pragma once

// Cost functional of the classification NODE:
//
//   E = 1/K sum_k [ mu1/2 |x_k(T) - y_k|^2 + mu2 H(y_k, softmax(x_k(T))) + mu3/2 |x_k(T)|^2
//                   + mu_run * int 1/2 |x_k(t) - y_k|^2 dt ]
//       + int mu4/2 (|W|_F^2 + |b|^2) + mu5/2 (|W'|_F^2 + |b'|^2) dt

#include <span>
#include <string>
#include <vector>

#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ode.hpp"

namespace nodencg {

struct CostWeights {
  double mu1 = 0.0;     ///< squared distance to the target
  double mu2 = 0.0;     ///< softmax cross-entropy
  double mu3 = 0.0;     ///< output magnitude
  double mu4 = 0.0;     ///< L2 penalty on W, b
  double mu5 = 0.0;     ///< L2 penalty on W', b'
  double mu_run = 0.0;  ///< running squared distance along the trajectory

  /// Squared-distance matching (two moons).
  static CostWeights squared_distance() { return {.mu1 = 1.0}; }
  /// Cross-entropy matching with output-magnitude control (two circles).
  static CostWeights cross_entropy() { return {.mu2 = 1.0, .mu3 = 0.1}; }

  /// Empty when all weights are valid.
  std::vector<std::string> violations() const;

  bool operator==(const CostWeights&) const = default;
};

/// Numerically stable softmax; invariant under z + c(1, ..., 1).
void softmax(std::span<const double> z, std::span<double> out);
std::vector<double> softmax(std::span<const double> z);

/// -sum p_i log q_i with q_i clamped to >= kCrossEntropyFloor.
double cross_entropy(std::span<const double> p, std::span<const double> q);
inline constexpr double kCrossEntropyFloor = 1e-12;

/// Terminal loss L(x, y) without the 1/K factor.
double terminal_loss(std::span<const double> x, std::span<const double> y, const CostWeights& w);

/// D_x L(x, y)^T = mu1 (x - y) + mu2 (softmax(x) - y) + mu3 x  (y a probability vector).
void terminal_loss_gradient(std::span<const double> x, std::span<const double> y, const CostWeights& w,
                            std::span<double> out);

/// Penalty integral int mu4/2 |theta|^2 + mu5/2 |theta'|^2 dt.
double penalty(const ParamTrajectory& params, const CostWeights& w);

/// Full cost from precomputed forward solutions (one per sample of `batch`).
double cost_eval(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                 std::span<const DenseSolution> solutions);

}  // namespace nodencg

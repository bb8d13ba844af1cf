#include "nodencg/cost.hpp"

#include <algorithm>
#include <cmath>

namespace nodencg {

std::vector<std::string> CostWeights::violations() const {
  std::vector<std::string> out;
  auto check = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be a finite nonnegative number");
  };
  check(mu1, "cost.mu1");
  check(mu2, "cost.mu2");
  check(mu3, "cost.mu3");
  check(mu4, "cost.mu4");
  check(mu5, "cost.mu5");
  check(mu_run, "cost.mu_run");
  return out;
}

void softmax(std::span<const double> z, std::span<double> out) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= sum;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size());
  softmax(z, out);
  return out;
}

double cross_entropy(std::span<const double> p, std::span<const double> q) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0.0) h -= p[i] * std::log(std::max(q[i], kCrossEntropyFloor));
  }
  return h;
}

double terminal_loss(std::span<const double> x, std::span<const double> y, const CostWeights& w) {
  double dist = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dist += (x[i] - y[i]) * (x[i] - y[i]);
    mag += x[i] * x[i];
  }
  double loss = 0.5 * w.mu1 * dist + 0.5 * w.mu3 * mag;
  if (w.mu2 != 0.0) loss += w.mu2 * cross_entropy(y, softmax(x));
  return loss;
}

void terminal_loss_gradient(std::span<const double> x, std::span<const double> y, const CostWeights& w,
                            std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = w.mu1 * (x[i] - y[i]) + w.mu3 * x[i];
  if (w.mu2 != 0.0) {
    const auto s = softmax(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += w.mu2 * (s[i] - y[i]);
  }
}

double penalty(const ParamTrajectory& params, const CostWeights& w) {
  double out = 0.0;
  if (w.mu4 != 0.0) out += 0.5 * w.mu4 * l2_norm_sq(params);
  if (w.mu5 != 0.0) out += 0.5 * w.mu5 * derivative_inner(params, params);
  return out;
}

double cost_eval(const ParamTrajectory& params, const LabeledSet& batch, const CostWeights& w,
                 std::span<const DenseSolution> solutions) {
  if (solutions.size() != batch.size()) throw DomainError("cost_eval: one solution per sample required");
  if (batch.empty()) throw DomainError("cost_eval: empty batch");
  const TimeMesh& mesh = params.mesh();
  const double final_time = mesh.final_time();
  std::vector<double> running(mesh.node_count()), x(batch.dim());
  double data = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const DenseSolution& sol = solutions[k];
    if (sol.dim() != batch.dim() || sol.t_start() != 0.0 || sol.t_end() != final_time) {
      throw DomainError("cost_eval: solution does not match the mesh span");
    }
    data += terminal_loss(sol.terminal(), batch.target(k), w);
    if (w.mu_run != 0.0) {
      const auto y = batch.target(k);
      for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        sol.eval(mesh.node(i), x);
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - y[j]) * (x[j] - y[j]);
        running[i] = 0.5 * d;
      }
      data += w.mu_run * trapezoid(mesh, running);
    }
  }
  return data / static_cast<double>(batch.size()) + penalty(params, w);
}

}  // namespace nodencg

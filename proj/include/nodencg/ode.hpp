#pragma once

// Explicit one-step integrators with cubic-Hermite dense output.
//
// Integration runs from t_start to t_end in either direction. The adaptive
// mode is the Dormand-Prince 5(4) pair with a PI step-size controller; the
// fixed modes take `fixed_steps` uniform steps of classical RK4 or forward
// Euler, with step times t_start + n*h so that they coincide bitwise with a
// TimeMesh of the same span and interval count.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nodencg {

using RhsFn = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

enum class StepMode { adaptive_rk45, fixed_rk4, fixed_euler };

struct SolverOptions {
  StepMode mode = StepMode::adaptive_rk45;
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  /// Step count of the fixed modes.
  int fixed_steps = 250;
  /// Adaptive mode gives up after this many attempted steps.
  std::size_t max_steps = 1'000'000;
};

struct IvpProblem {
  std::size_t dim = 0;
  RhsFn rhs;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> x_init;
  /// Times the adaptive integrator must land on (e.g. kinks of the rhs).
  std::vector<double> breakpoints;
  SolverOptions options;
};

class DenseSolution {
 public:
  DenseSolution() = default;
  DenseSolution(std::size_t dim, double t_start, double t_end);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return times_.size(); }
  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  std::span<const double> times() const noexcept { return times_; }

  std::span<const double> state(std::size_t i) const noexcept { return {states_.data() + i * dim_, dim_}; }
  std::span<const double> derivative(std::size_t i) const noexcept {
    return {derivs_.data() + i * dim_, dim_};
  }
  std::span<const double> terminal() const noexcept { return state(size() - 1); }

  /// Cubic Hermite evaluation; exact at stored step times.
  void eval(double t, std::span<double> out) const;
  std::vector<double> eval(double t) const;

  void push(double t, std::span<const double> x, std::span<const double> dxdt);

 private:
  std::size_t locate(double t) const;

  std::size_t dim_ = 0;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  std::vector<double> times_;
  std::vector<double> states_;
  std::vector<double> derivs_;
};

DenseSolution solve_ivp(const IvpProblem& problem);

}  // namespace nodencg

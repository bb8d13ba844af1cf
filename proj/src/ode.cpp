#include "nodencg/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "nodencg/errors.hpp"

namespace nodencg {

DenseSolution::DenseSolution(std::size_t dim, double t_start, double t_end)
    : dim_(dim), t_start_(t_start), t_end_(t_end) {}

void DenseSolution::push(double t, std::span<const double> x, std::span<const double> dxdt) {
  times_.push_back(t);
  states_.insert(states_.end(), x.begin(), x.end());
  derivs_.insert(derivs_.end(), dxdt.begin(), dxdt.end());
}

std::size_t DenseSolution::locate(double t) const {
  // Index i of the step [times_[i], times_[i+1]] containing t.
  const bool forward = t_end_ >= t_start_;
  std::size_t i = 0;
  if (forward) {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - times_.begin() - 1, 0));
  } else {
    auto it = std::upper_bound(times_.begin(), times_.end(), t, std::greater<>());
    i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - times_.begin() - 1, 0));
  }
  return std::min(i, times_.size() - 2);
}

void DenseSolution::eval(double t, std::span<double> out) const {
  const double lo = std::min(t_start_, t_end_);
  const double hi = std::max(t_start_, t_end_);
  if (!(t >= lo && t <= hi)) {
    throw DomainError("dense_eval: t = " + std::to_string(t) + " outside the integration span");
  }
  if (times_.size() == 1) {
    std::copy_n(states_.begin(), dim_, out.begin());
    return;
  }
  const std::size_t i = locate(t);
  const double ta = times_[i];
  const double tb = times_[i + 1];
  if (t == ta) {
    const auto x = state(i);
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  if (t == tb) {
    const auto x = state(i + 1);
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  const double h = tb - ta;
  const double s = (t - ta) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  const auto xa = state(i);
  const auto xb = state(i + 1);
  const auto fa = derivative(i);
  const auto fb = derivative(i + 1);
  for (std::size_t j = 0; j < dim_; ++j) {
    out[j] = h00 * xa[j] + h10 * h * fa[j] + h01 * xb[j] + h11 * h * fb[j];
  }
}

std::vector<double> DenseSolution::eval(double t) const {
  std::vector<double> out(dim_);
  eval(t, out);
  return out;
}

namespace {

void check_finite(std::span<const double> v, double t) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("non-finite right-hand side at t = " + std::to_string(t));
  }
}

void validate(const IvpProblem& p) {
  if (p.dim == 0) throw DomainError("solve_ivp: dimension must be positive");
  if (p.x_init.size() != p.dim) throw DomainError("solve_ivp: initial state has wrong size");
  if (!p.rhs) throw DomainError("solve_ivp: missing right-hand side");
  if (!std::isfinite(p.t_start) || !std::isfinite(p.t_end)) throw DomainError("solve_ivp: non-finite span");
  for (double v : p.x_init) {
    if (!std::isfinite(v)) throw DomainError("solve_ivp: non-finite initial state");
  }
  if (p.options.mode == StepMode::adaptive_rk45 && !(p.options.abs_tol > 0.0 && p.options.rel_tol > 0.0)) {
    throw DomainError("solve_ivp: tolerances must be positive");
  }
  if (p.options.mode != StepMode::adaptive_rk45 && p.options.fixed_steps < 1) {
    throw DomainError("solve_ivp: fixed_steps must be positive");
  }
}

DenseSolution solve_fixed(const IvpProblem& p) {
  const std::size_t n = p.dim;
  const int steps = p.options.fixed_steps;
  const bool forward = p.t_end >= p.t_start;
  const double lo = std::min(p.t_start, p.t_end);
  const double hi = std::max(p.t_start, p.t_end);
  const double grid_step = (hi - lo) / static_cast<double>(steps);
  const double h = forward ? grid_step : -grid_step;
  // Grid point j is lo + j * grid_step, pinned to hi at j = steps.
  auto grid = [&](int j) { return j == steps ? hi : lo + static_cast<double>(j) * grid_step; };
  auto time_at = [&](int s) { return forward ? grid(s) : grid(steps - s); };

  DenseSolution sol(n, p.t_start, p.t_end);
  std::vector<double> x = p.x_init, k1(n), k2(n), k3(n), k4(n), tmp(n);
  double t = time_at(0);
  p.rhs(t, x, k1);
  check_finite(k1, t);
  sol.push(t, x, k1);

  for (int s = 0; s < steps; ++s) {
    const double t_next = time_at(s + 1);
    if (p.options.mode == StepMode::fixed_euler) {
      for (std::size_t i = 0; i < n; ++i) x[i] = x[i] + h * k1[i];
    } else {
      const double t_mid = t + 0.5 * h;
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
      p.rhs(t_mid, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
      p.rhs(t_mid, tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
      p.rhs(t_next, tmp, k4);
      for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    t = t_next;
    p.rhs(t, x, k1);
    check_finite(k1, t);
    sol.push(t, x, k1);
  }
  return sol;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double initial_step(const IvpProblem& p, std::span<const double> f0, double direction, double span) {
  const auto& o = p.options;
  const std::size_t n = p.dim;
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::abs(p.x_init[i]);
    d0 += (p.x_init[i] / sc) * (p.x_init[i] / sc);
    d1 += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / static_cast<double>(n));
  d1 = std::sqrt(d1 / static_cast<double>(n));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  std::vector<double> x1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) x1[i] = p.x_init[i] + direction * h0 * f0[i];
  p.rhs(p.t_start + direction * h0, x1, f1);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sc = o.abs_tol + o.rel_tol * std::abs(p.x_init[i]);
    d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
  }
  d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

DenseSolution solve_adaptive(const IvpProblem& p) {
  const std::size_t n = p.dim;
  const auto& o = p.options;
  const double direction = p.t_end >= p.t_start ? 1.0 : -1.0;
  const double span = std::abs(p.t_end - p.t_start);

  // Stops strictly inside the span, in integration order, followed by t_end.
  std::vector<double> stops;
  for (double b : p.breakpoints) {
    if (direction * (b - p.t_start) > 0.0 && direction * (p.t_end - b) > 0.0) stops.push_back(b);
  }
  std::sort(stops.begin(), stops.end(), [&](double a, double b) { return direction * (a - b) < 0.0; });
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.push_back(p.t_end);

  DenseSolution sol(n, p.t_start, p.t_end);
  std::vector<double> x = p.x_init, x_new(n), tmp(n);
  std::array<std::vector<double>, 7> k;
  for (auto& v : k) v.resize(n);

  double t = p.t_start;
  p.rhs(t, x, k[0]);
  check_finite(k[0], t);
  sol.push(t, x, k[0]);
  if (span == 0.0) return sol;

  double h = initial_step(p, k[0], direction, span);
  double err_old = 1e-4;
  std::size_t next_stop = 0;
  constexpr double safety = 0.9, beta = 0.04, expo = 0.2 - 0.75 * beta;
  constexpr double fac_min = 0.2, fac_max = 10.0;

  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt >= o.max_steps) throw SolverError("solve_ivp: step budget exhausted", t);
    const double stop = stops[next_stop];
    const double remaining = std::abs(stop - t);
    bool lands = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      lands = true;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw SolverError("solve_ivp: step size underflow at t = " + std::to_string(t), t);
    }
    const double hs = direction * h;
    auto stage = [&](double c, std::initializer_list<std::pair<std::size_t, double>> terms, std::size_t out) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = x[i];
        for (const auto& [j, a] : terms) acc += hs * a * k[j][i];
        tmp[i] = acc;
      }
      p.rhs(t + c * hs, tmp, k[out]);
      check_finite(k[out], t + c * hs);
    };
    stage(c2, {{0, a21}}, 1);
    stage(c3, {{0, a31}, {1, a32}}, 2);
    stage(c4, {{0, a41}, {1, a42}, {2, a43}}, 3);
    stage(c5, {{0, a51}, {1, a52}, {2, a53}, {3, a54}}, 4);
    stage(1.0, {{0, a61}, {1, a62}, {2, a63}, {3, a64}, {4, a65}}, 5);
    for (std::size_t i = 0; i < n; ++i) {
      x_new[i] = x[i] + hs * (a71 * k[0][i] + a73 * k[2][i] + a74 * k[3][i] + a75 * k[4][i] + a76 * k[5][i]);
    }
    const double t_new = lands ? stop : t + hs;
    p.rhs(t_new, x_new, k[6]);
    check_finite(k[6], t_new);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = hs * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] +
                             e7 * k[6][i]);
      const double sc = o.abs_tol + o.rel_tol * std::max(std::abs(x[i]), std::abs(x_new[i]));
      err = std::max(err, std::abs(e) / sc);
    }

    const double fac11 = std::pow(std::max(err, 1e-16), expo);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(err_old, beta) / safety;
      fac = std::clamp(fac, 1.0 / fac_max, 1.0 / fac_min);
      err_old = std::max(err, 1e-4);
      t = t_new;
      x.swap(x_new);
      std::swap(k[0], k[6]);
      sol.push(t, x, k[0]);
      if (lands) {
        if (++next_stop == stops.size()) break;
      }
      h = std::min(h / fac, span);
    } else {
      h = h / std::min(1.0 / fac_min, fac11 / safety);
    }
  }
  return sol;
}

}  // namespace

DenseSolution solve_ivp(const IvpProblem& problem) {
  validate(problem);
  if (problem.options.mode == StepMode::adaptive_rk45) return solve_adaptive(problem);
  return solve_fixed(problem);
}

}  // namespace nodencg

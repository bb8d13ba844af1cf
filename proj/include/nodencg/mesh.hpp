#pragma once

// Time mesh and depth-varying parameter trajectories.
//
// A trajectory stores one parameter vector per mesh node and is read as the
// piecewise-linear interpolant of those values. The parameter vector of an
// N-dimensional model is theta = (vec(W), b) with vec stacking the columns of
// W, i.e. (W11, W21, ..., WN1, W12, ..., WNN, b1, ..., bN).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nodencg/errors.hpp"

namespace nodencg {

/// Uniform mesh 0 = t_0 < ... < t_n = T.
class TimeMesh {
 public:
  static constexpr double kDefaultFinalTime = 5.0;
  static constexpr int kDefaultIntervals = 250;

  TimeMesh() : TimeMesh(kDefaultFinalTime, kDefaultIntervals) {}
  TimeMesh(double final_time, int intervals);

  double final_time() const noexcept { return final_time_; }
  int intervals() const noexcept { return intervals_; }
  std::size_t node_count() const noexcept { return static_cast<std::size_t>(intervals_) + 1; }
  double step() const noexcept { return step_; }

  /// t_i = i * (T / n), with t_n pinned to T.
  double node(std::size_t i) const noexcept {
    return i == static_cast<std::size_t>(intervals_) ? final_time_ : static_cast<double>(i) * step_;
  }
  std::vector<double> nodes() const;

  /// Segment index i with t in [t_i, t_{i+1}); t = T maps to the last segment.
  std::size_t segment(double t) const;

  bool operator==(const TimeMesh& other) const noexcept {
    return final_time_ == other.final_time_ && intervals_ == other.intervals_;
  }

 private:
  double final_time_;
  int intervals_;
  double step_;
};

/// Number of parameters of the tanh-affine model in dimension n: n^2 + n.
constexpr std::size_t param_count(std::size_t state_dim) { return state_dim * state_dim + state_dim; }

/// Nodal values of an R^M-valued function on a TimeMesh. The tag keeps
/// parameters and gradients/directions apart at the type level.
template <class Tag>
class NodalField {
 public:
  NodalField() = default;
  NodalField(TimeMesh mesh, std::size_t state_dim)
      : mesh_(mesh),
        state_dim_(state_dim),
        values_(mesh.node_count() * param_count(state_dim), 0.0) {}

  const TimeMesh& mesh() const noexcept { return mesh_; }
  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t param_dim() const noexcept { return param_count(state_dim_); }
  std::size_t node_count() const noexcept { return mesh_.node_count(); }

  std::span<double> node(std::size_t i) noexcept {
    return {values_.data() + i * param_dim(), param_dim()};
  }
  std::span<const double> node(std::size_t i) const noexcept {
    return {values_.data() + i * param_dim(), param_dim()};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Component j sampled at every node.
  std::vector<double> component(std::size_t j) const {
    std::vector<double> out(node_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i * param_dim() + j];
    return out;
  }
  void set_component(std::size_t j, std::span<const double> nodal) {
    for (std::size_t i = 0; i < node_count(); ++i) values_[i * param_dim() + j] = nodal[i];
  }

  bool same_shape(const auto& other) const noexcept {
    return mesh_ == other.mesh() && state_dim_ == other.state_dim();
  }

  bool operator==(const NodalField&) const = default;

 private:
  TimeMesh mesh_;
  std::size_t state_dim_ = 0;
  std::vector<double> values_;
};

struct ParamTag;
struct GradientTag;

using ParamTrajectory = NodalField<ParamTag>;
/// L2 / W^{1,2} gradients, descent directions and perturbations.
using GradientField = NodalField<GradientTag>;

/// Reinterprets the nodal values of one field kind as another.
template <class To, class From>
NodalField<To> field_cast(const NodalField<From>& from) {
  NodalField<To> out(from.mesh(), from.state_dim());
  std::copy(from.values().begin(), from.values().end(), out.values().begin());
  return out;
}

/// Index of W(row, col) inside theta.
constexpr std::size_t weight_index(std::size_t state_dim, std::size_t row, std::size_t col) {
  return col * state_dim + row;
}
/// Index of b(row) inside theta.
constexpr std::size_t bias_index(std::size_t state_dim, std::size_t row) {
  return state_dim * state_dim + row;
}

/// theta(t) by linear interpolation of nodal values. Exact at nodes.
template <class Tag>
void interpolate(const NodalField<Tag>& p, double t, std::span<double> out);
template <class Tag>
std::vector<double> interpolate(const NodalField<Tag>& p, double t);

/// Slope of the interpolant. Right limit at interior nodes, left limit at T.
template <class Tag>
void derivative_at(const NodalField<Tag>& p, double t, std::span<double> out);
template <class Tag>
std::vector<double> derivative_at(const NodalField<Tag>& p, double t);

/// y + alpha * x, nodewise.
template <class TagX, class TagY>
NodalField<TagY> axpy(double alpha, const NodalField<TagX>& x, const NodalField<TagY>& y);

template <class Tag>
NodalField<Tag> scaled(double alpha, const NodalField<Tag>& x);

/// Trapezoidal integral of <x(t), y(t)> over the mesh.
template <class TagA, class TagB>
double l2_inner(const NodalField<TagA>& x, const NodalField<TagB>& y);

/// Exact integral of <x'(t), y'(t)> for the piecewise-linear interpolants.
template <class TagA, class TagB>
double derivative_inner(const NodalField<TagA>& x, const NodalField<TagB>& y);

template <class TagA, class TagB>
double w12_inner(const NodalField<TagA>& x, const NodalField<TagB>& y) {
  return l2_inner(x, y) + derivative_inner(x, y);
}

template <class Tag>
double l2_norm_sq(const NodalField<Tag>& x) {
  return l2_inner(x, x);
}

template <class Tag>
double w12_norm_sq(const NodalField<Tag>& x) {
  return w12_inner(x, x);
}

/// Trapezoid over a scalar nodal sequence on the mesh.
double trapezoid(const TimeMesh& mesh, std::span<const double> nodal);

/// Constant-in-t parameters, each component uniform in [-scale, scale].
ParamTrajectory init_params(std::uint64_t seed, std::size_t state_dim, TimeMesh mesh = {},
                            double scale = 0.1);

bool all_finite(std::span<const double> values);

}  // namespace nodencg

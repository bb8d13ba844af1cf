#include "nodencg/mesh.hpp"

#include <cmath>
#include <random>
#include <string>

namespace nodencg {

TimeMesh::TimeMesh(double final_time, int intervals)
    : final_time_(final_time), intervals_(intervals), step_(0.0) {
  if (!(final_time > 0.0) || !std::isfinite(final_time)) {
    throw DomainError("TimeMesh: final time must be positive and finite");
  }
  if (intervals < 1) throw DomainError("TimeMesh: need at least one interval");
  step_ = final_time / static_cast<double>(intervals);
}

std::vector<double> TimeMesh::nodes() const {
  std::vector<double> out(node_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
  return out;
}

std::size_t TimeMesh::segment(double t) const {
  if (!(t >= 0.0 && t <= final_time_)) {
    throw DomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(final_time_) + "]");
  }
  const auto last = static_cast<std::size_t>(intervals_ - 1);
  auto i = static_cast<std::size_t>(std::min<double>(std::floor(t / step_), static_cast<double>(last)));
  // floor(t / h) can be off by one near nodes.
  while (i > 0 && t < node(i)) --i;
  while (i < last && t >= node(i + 1)) ++i;
  return i;
}

namespace {

template <class Tag>
void require_same_shape(const NodalField<Tag>& a, const auto& b, const char* what) {
  if (!a.same_shape(b)) throw DomainError(std::string(what) + ": mesh or dimension mismatch");
}

}  // namespace

template <class Tag>
void interpolate(const NodalField<Tag>& p, double t, std::span<double> out) {
  const std::size_t i = p.mesh().segment(t);
  const double t0 = p.mesh().node(i);
  const double t1 = p.mesh().node(i + 1);
  const double w = (t - t0) / (t1 - t0);
  const auto a = p.node(i);
  const auto b = p.node(i + 1);
  if (w == 0.0) {
    std::copy(a.begin(), a.end(), out.begin());
  } else if (w == 1.0) {
    std::copy(b.begin(), b.end(), out.begin());
  } else {
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = (1.0 - w) * a[j] + w * b[j];
  }
}

template <class Tag>
std::vector<double> interpolate(const NodalField<Tag>& p, double t) {
  std::vector<double> out(p.param_dim());
  interpolate(p, t, out);
  return out;
}

template <class Tag>
void derivative_at(const NodalField<Tag>& p, double t, std::span<double> out) {
  const std::size_t i = p.mesh().segment(t);
  const double h = p.mesh().node(i + 1) - p.mesh().node(i);
  const auto a = p.node(i);
  const auto b = p.node(i + 1);
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = (b[j] - a[j]) / h;
}

template <class Tag>
std::vector<double> derivative_at(const NodalField<Tag>& p, double t) {
  std::vector<double> out(p.param_dim());
  derivative_at(p, t, out);
  return out;
}

template <class TagX, class TagY>
NodalField<TagY> axpy(double alpha, const NodalField<TagX>& x, const NodalField<TagY>& y) {
  require_same_shape(y, x, "axpy");
  NodalField<TagY> out = y;
  auto dst = out.values();
  const auto src = x.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
  return out;
}

template <class Tag>
NodalField<Tag> scaled(double alpha, const NodalField<Tag>& x) {
  NodalField<Tag> out = x;
  for (double& v : out.values()) v *= alpha;
  return out;
}

template <class TagA, class TagB>
double l2_inner(const NodalField<TagA>& x, const NodalField<TagB>& y) {
  require_same_shape(x, y, "l2_inner");
  const TimeMesh& mesh = x.mesh();
  double sum = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto a = x.node(i);
    const auto b = y.node(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
    const bool end = i == 0 || i + 1 == mesh.node_count();
    sum += (end ? 0.5 : 1.0) * dot;
  }
  return sum * mesh.step();
}

template <class TagA, class TagB>
double derivative_inner(const NodalField<TagA>& x, const NodalField<TagB>& y) {
  require_same_shape(x, y, "derivative_inner");
  const TimeMesh& mesh = x.mesh();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < mesh.node_count(); ++i) {
    const double h = mesh.node(i + 1) - mesh.node(i);
    const auto a0 = x.node(i);
    const auto a1 = x.node(i + 1);
    const auto b0 = y.node(i);
    const auto b1 = y.node(i + 1);
    double dot = 0.0;
    for (std::size_t j = 0; j < a0.size(); ++j) dot += (a1[j] - a0[j]) * (b1[j] - b0[j]);
    sum += dot / h;
  }
  return sum;
}

double trapezoid(const TimeMesh& mesh, std::span<const double> nodal) {
  if (nodal.size() != mesh.node_count()) throw DomainError("trapezoid: expected one value per node");
  double sum = 0.5 * (nodal.front() + nodal.back());
  for (std::size_t i = 1; i + 1 < nodal.size(); ++i) sum += nodal[i];
  return sum * mesh.step();
}

ParamTrajectory init_params(std::uint64_t seed, std::size_t state_dim, TimeMesh mesh, double scale) {
  if (state_dim == 0) throw DomainError("init_params: state dimension must be positive");
  ParamTrajectory p(mesh, state_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-scale, scale);
  std::vector<double> theta(p.param_dim());
  for (double& v : theta) v = uniform(rng);
  for (std::size_t i = 0; i < p.node_count(); ++i) std::copy(theta.begin(), theta.end(), p.node(i).begin());
  return p;
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

#define NODENCG_FIELD_FNS(Tag)                                                               \
  template void interpolate(const NodalField<Tag>&, double, std::span<double>);              \
  template std::vector<double> interpolate(const NodalField<Tag>&, double);                  \
  template void derivative_at(const NodalField<Tag>&, double, std::span<double>);            \
  template std::vector<double> derivative_at(const NodalField<Tag>&, double);                \
  template NodalField<Tag> scaled(double, const NodalField<Tag>&);

NODENCG_FIELD_FNS(ParamTag)
NODENCG_FIELD_FNS(GradientTag)

#define NODENCG_PAIR_FNS(A, B)                                                                \
  template NodalField<B> axpy(double, const NodalField<A>&, const NodalField<B>&);           \
  template double l2_inner(const NodalField<A>&, const NodalField<B>&);                      \
  template double derivative_inner(const NodalField<A>&, const NodalField<B>&);

NODENCG_PAIR_FNS(ParamTag, ParamTag)
NODENCG_PAIR_FNS(ParamTag, GradientTag)
NODENCG_PAIR_FNS(GradientTag, ParamTag)
NODENCG_PAIR_FNS(GradientTag, GradientTag)

#undef NODENCG_FIELD_FNS
#undef NODENCG_PAIR_FNS

}  // namespace nodencg

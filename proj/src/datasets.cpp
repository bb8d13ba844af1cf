#include "nodencg/datasets.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nodencg/model.hpp"

namespace nodencg {

std::string to_string(DatasetKind kind) { return kind == DatasetKind::moons ? "moons" : "circles"; }

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "moons") return DatasetKind::moons;
  if (name == "circles") return DatasetKind::circles;
  throw ConfigError({"unknown dataset kind '" + name + "' (expected moons or circles)"});
}

DatasetSpec DatasetSpec::training(DatasetKind kind, std::uint64_t seed) { return {kind, 1000, 0.07, seed, false}; }
DatasetSpec DatasetSpec::clean_test(DatasetKind kind, std::uint64_t seed) { return {kind, 100, 0.0, seed, false}; }
DatasetSpec DatasetSpec::noisy_test(DatasetKind kind, std::uint64_t seed) { return {kind, 1000, 0.06, seed, false}; }

namespace {

struct Arc {
  double cx, cy, radius, angle_lo, angle_hi;
};

LabeledSet sample_arcs(const Arc& first, const Arc& second, std::size_t count, double noise_sigma,
                       std::uint64_t seed) {
  if (count % 2 != 0) throw DomainError("dataset size must be even (balanced classes)");
  if (!(noise_sigma >= 0.0)) throw DomainError("noise sigma must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  LabeledSet out(2);
  for (int label = 0; label < 2; ++label) {
    const Arc& arc = label == 0 ? first : second;
    std::uniform_real_distribution<double> angle(arc.angle_lo, arc.angle_hi);
    for (std::size_t k = 0; k < count / 2; ++k) {
      const double a = angle(rng);
      double p[2] = {arc.cx + arc.radius * std::cos(a), arc.cy + arc.radius * std::sin(a)};
      if (noise_sigma > 0.0) {
        p[0] += noise_sigma * noise(rng);
        p[1] += noise_sigma * noise(rng);
      }
      out.add(p, label);
    }
  }
  return out;
}

}  // namespace

LabeledSet gen_moons(std::size_t count, double noise_sigma, std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  return sample_arcs({0.0, 0.0, 1.0, 0.0, pi}, {1.0, 0.5, 1.0, pi, 2.0 * pi}, count, noise_sigma, seed);
}

LabeledSet gen_circles(std::size_t count, double noise_sigma, std::uint64_t seed) {
  constexpr double pi = std::numbers::pi;
  return sample_arcs({0.0, 0.0, 1.0, 0.0, 2.0 * pi}, {0.0, 0.0, 0.5, 0.0, 2.0 * pi}, count, noise_sigma, seed);
}

LabeledSet make_dataset(const DatasetSpec& spec) {
  LabeledSet set = spec.kind == DatasetKind::moons ? gen_moons(spec.count, spec.noise_sigma, spec.seed)
                                                   : gen_circles(spec.count, spec.noise_sigma, spec.seed);
  return spec.augmented ? augment_to_3d(set) : set;
}

LabeledSet augment_to_3d(const LabeledSet& set) {
  if (set.dim() != 2) throw DomainError("augment_to_3d: expected a 2D set");
  LabeledSet out(3);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto x = set.input(k);
    const double p[3] = {x[0], x[1], 0.0};
    out.add(p, set.label(k));
  }
  return out;
}

LabeledSet project_to_2d(const LabeledSet& set) {
  if (set.dim() != 3) throw DomainError("project_to_2d: expected a 3D set");
  LabeledSet out(2);
  for (std::size_t k = 0; k < set.size(); ++k) out.add(set.input(k).first(2), set.label(k));
  return out;
}

int classify(std::span<const double> output) { return output[0] >= output[1] ? 0 : 1; }

double accuracy_from_outputs(std::span<const double> outputs, const LabeledSet& set) {
  if (outputs.size() != set.size() * set.dim()) throw DomainError("accuracy: output count mismatch");
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (classify(outputs.subspan(k * set.dim(), set.dim())) == set.label(k)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

double accuracy(const ParamTrajectory& params, const LabeledSet& set, const SolverOptions& opts, Exec exec) {
  if (params.state_dim() != set.dim()) throw DomainError("accuracy: model and data dimensions differ");
  return accuracy_from_outputs(network_outputs(params, set, opts, exec), set);
}

}  // namespace nodencg

#pragma once

// Synthetic two-class planar datasets and the nearest-one-hot decision rule.

#include <cstdint>
#include <span>
#include <string>

#include "nodencg/exec.hpp"
#include "nodencg/labeled_set.hpp"
#include "nodencg/mesh.hpp"
#include "nodencg/ode.hpp"

namespace nodencg {

enum class DatasetKind { moons, circles };

std::string to_string(DatasetKind kind);
/// Throws ConfigError for anything but "moons" / "circles".
DatasetKind parse_dataset_kind(const std::string& name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::moons;
  std::size_t count = 1000;
  double noise_sigma = 0.07;
  std::uint64_t seed = 0;
  bool augmented = false;

  /// 1000 points at sigma 0.07.
  static DatasetSpec training(DatasetKind kind, std::uint64_t seed);
  /// 100 noiseless points.
  static DatasetSpec clean_test(DatasetKind kind, std::uint64_t seed);
  /// 1000 points at sigma 0.06.
  static DatasetSpec noisy_test(DatasetKind kind, std::uint64_t seed);
};

/// Class 0: upper unit semicircle about the origin. Class 1: lower unit
/// semicircle about (1, 0.5). Angles uniform, isotropic Gaussian noise.
LabeledSet gen_moons(std::size_t count, double noise_sigma, std::uint64_t seed);

/// Class 0: unit circle. Class 1: circle of radius 0.5. Both about the origin.
LabeledSet gen_circles(std::size_t count, double noise_sigma, std::uint64_t seed);

LabeledSet make_dataset(const DatasetSpec& spec);

/// Zero-pads inputs and targets from R^2 to R^3.
LabeledSet augment_to_3d(const LabeledSet& set);
/// Drops the last coordinate of a 3D set.
LabeledSet project_to_2d(const LabeledSet& set);

/// Class 0 iff |out - e1| <= |out - e2|, i.e. out[0] >= out[1]. Ties go to class 0.
int classify(std::span<const double> output);

/// Fraction of samples whose terminal state classifies to the ground truth.
double accuracy_from_outputs(std::span<const double> outputs, const LabeledSet& set);
double accuracy(const ParamTrajectory& params, const LabeledSet& set, const SolverOptions& opts,
                Exec exec = Exec::parallel);

}  // namespace nodencg

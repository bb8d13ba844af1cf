#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nodencg/datasets.hpp"
#include "nodencg/model.hpp"

using namespace nodencg;

namespace {

struct RadialStats {
  double mean = 0.0, sd = 0.0;
};

RadialStats radial(const LabeledSet& set, int label, double cx, double cy) {
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (set.label(k) != label) continue;
    const auto x = set.input(k);
    const double r = std::hypot(x[0] - cx, x[1] - cy);
    s += r;
    s2 += r * r;
    ++n;
  }
  const double mean = s / static_cast<double>(n);
  return {mean, std::sqrt(s2 / static_cast<double>(n) - mean * mean)};
}

std::size_t count_label(const LabeledSet& set, int label) {
  std::size_t n = 0;
  for (int l : set.labels()) n += l == label;
  return n;
}

}  // namespace

TEST_CASE("noiseless moons lie on their arcs") {
  const auto set = gen_moons(200, 0.0, 1);
  REQUIRE(set.size() == 200);
  CHECK(count_label(set, 0) == 100);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto x = set.input(k);
    if (set.label(k) == 0) {
      CHECK(std::hypot(x[0], x[1]) == doctest::Approx(1.0));
      CHECK(x[1] >= -1e-12);
    } else {
      CHECK(std::hypot(x[0] - 1.0, x[1] - 0.5) == doctest::Approx(1.0));
      CHECK(x[1] <= 0.5 + 1e-12);
    }
    const auto y = set.target(k);
    CHECK(y[set.label(k)] == 1.0);
    CHECK(y[1 - set.label(k)] == 0.0);
  }
}

TEST_CASE("noiseless circles have radii 1 and 0.5") {
  const auto set = gen_circles(100, 0.0, 2);
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto x = set.input(k);
    CHECK(std::hypot(x[0], x[1]) == doctest::Approx(set.label(k) == 0 ? 1.0 : 0.5));
  }
}

TEST_CASE("noise level") {
  const double sigma = 0.07;
  const auto circles = gen_circles(20000, sigma, 3);
  for (int label : {0, 1}) {
    // Radial deviation of an isotropic Gaussian around a circle of radius r >> sigma is about N(0, sigma).
    const auto st = radial(circles, label, 0.0, 0.0);
    CHECK(st.sd == doctest::Approx(sigma).epsilon(0.05));
  }
  const auto moons = gen_moons(20000, sigma, 4);
  CHECK(radial(moons, 0, 0.0, 0.0).sd == doctest::Approx(sigma).epsilon(0.05));
  CHECK(radial(moons, 1, 1.0, 0.5).sd == doctest::Approx(sigma).epsilon(0.05));
}

TEST_CASE("angles cover the arcs uniformly") {
  const auto set = gen_moons(20000, 0.0, 5);
  double upper_mean = 0.0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    if (set.label(k) == 0) upper_mean += std::atan2(set.input(k)[1], set.input(k)[0]);
  }
  upper_mean /= 10000.0;
  CHECK(upper_mean == doctest::Approx(std::numbers::pi / 2).epsilon(0.02));
}

TEST_CASE("generators are deterministic and validate arguments") {
  CHECK(gen_moons(50 * 2, 0.07, 9) == gen_moons(100, 0.07, 9));
  CHECK_FALSE(gen_moons(100, 0.07, 9) == gen_moons(100, 0.07, 10));
  CHECK_THROWS_AS(gen_moons(101, 0.07, 1), DomainError);
  CHECK_THROWS_AS(gen_circles(10, -0.1, 1), DomainError);
  CHECK(gen_circles(0, 0.0, 1).empty());
}

TEST_CASE("dataset specs") {
  const auto train = DatasetSpec::training(DatasetKind::moons, 1);
  CHECK(train.count == 1000);
  CHECK(train.noise_sigma == 0.07);
  const auto clean = DatasetSpec::clean_test(DatasetKind::circles, 1);
  CHECK(clean.count == 100);
  CHECK(clean.noise_sigma == 0.0);
  const auto noisy = DatasetSpec::noisy_test(DatasetKind::moons, 1);
  CHECK(noisy.count == 1000);
  CHECK(noisy.noise_sigma == 0.06);
  auto aug = DatasetSpec::training(DatasetKind::circles, 7);
  aug.augmented = true;
  CHECK(make_dataset(aug).dim() == 3);
  CHECK(parse_dataset_kind("circles") == DatasetKind::circles);
  CHECK(to_string(DatasetKind::moons) == "moons");
  CHECK_THROWS_AS(parse_dataset_kind("spirals"), ConfigError);
}

TEST_CASE("augment and project") {
  const auto set = gen_circles(40, 0.05, 6);
  const auto aug = augment_to_3d(set);
  CHECK(aug.dim() == 3);
  for (std::size_t k = 0; k < aug.size(); ++k) {
    CHECK(aug.input(k)[2] == 0.0);
    CHECK(aug.target(k)[2] == 0.0);
    CHECK(aug.label(k) == set.label(k));
  }
  CHECK(project_to_2d(aug) == set);
  CHECK_THROWS_AS(augment_to_3d(aug), DomainError);
  CHECK_THROWS_AS(project_to_2d(set), DomainError);
}

TEST_CASE("classify") {
  CHECK(classify(std::vector<double>{1.0, 0.0}) == 0);
  CHECK(classify(std::vector<double>{0.2, 0.9}) == 1);
  CHECK(classify(std::vector<double>{0.5, 0.5}) == 0);  // tie
  CHECK(classify(std::vector<double>{0.3, 0.3, 7.0}) == 0);  // third coordinate ignored
  // Equivalent to the nearest one-hot target.
  for (double a = -2.0; a <= 2.0; a += 0.37) {
    for (double b = -2.0; b <= 2.0; b += 0.41) {
      const double d0 = std::hypot(a - 1.0, b), d1 = std::hypot(a, b - 1.0);
      CHECK(classify(std::vector<double>{a, b}) == (d0 <= d1 ? 0 : 1));
    }
  }
}

TEST_CASE("accuracy") {
  const auto set = gen_moons(10, 0.0, 1);
  std::vector<double> perfect, constant;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto y = set.target(k);
    perfect.insert(perfect.end(), y.begin(), y.end());
    constant.insert(constant.end(), {1.0, 0.0});
  }
  CHECK(accuracy_from_outputs(perfect, set) == 1.0);
  // A constant classifier on a balanced set sits at chance.
  CHECK(accuracy_from_outputs(constant, set) == 0.5);
  CHECK_THROWS_AS(accuracy_from_outputs(std::vector<double>{1.0}, set), DomainError);

  // A zero model is the identity map: accuracy is that of the inputs themselves.
  const ParamTrajectory zero(TimeMesh{}, 2);
  const auto test = gen_moons(100, 0.06, 3);
  const double acc = accuracy(zero, test, SolverOptions{.mode = StepMode::fixed_rk4});
  CHECK(acc == accuracy_from_outputs(test.inputs(), test));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  CHECK_THROWS_AS(accuracy(ParamTrajectory(TimeMesh{}, 3), test, SolverOptions{}), DomainError);
}

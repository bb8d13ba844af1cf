#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nodencg/errors.hpp"

namespace nodencg {

/// Inputs x_k^0 in R^N with one-hot targets y_k and class ids in {0, ..., N-1}.
class LabeledSet {
 public:
  LabeledSet() = default;
  explicit LabeledSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return classes_.size(); }
  bool empty() const noexcept { return classes_.empty(); }

  std::span<const double> input(std::size_t k) const noexcept { return {inputs_.data() + k * dim_, dim_}; }
  std::span<const double> target(std::size_t k) const noexcept { return {targets_.data() + k * dim_, dim_}; }
  int label(std::size_t k) const noexcept { return classes_[k]; }
  std::span<const int> labels() const noexcept { return classes_; }
  std::span<const double> inputs() const noexcept { return inputs_; }

  /// Appends a sample with one-hot target e_label.
  void add(std::span<const double> x, int label) {
    if (x.size() != dim_) throw DomainError("LabeledSet: input has wrong dimension");
    if (label < 0 || static_cast<std::size_t>(label) >= dim_) throw DomainError("LabeledSet: label out of range");
    inputs_.insert(inputs_.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < dim_; ++i) targets_.push_back(static_cast<int>(i) == label ? 1.0 : 0.0);
    classes_.push_back(label);
  }

  /// Samples at the given indices, in order.
  LabeledSet subset(std::span<const std::size_t> indices) const {
    LabeledSet out(dim_);
    for (std::size_t k : indices) out.add(input(k), label(k));
    return out;
  }

  bool operator==(const LabeledSet&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> inputs_;
  std::vector<double> targets_;
  std::vector<int> classes_;
};

}  // namespace nodencg

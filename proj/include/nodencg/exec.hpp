#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace nodencg {

/// Execution policy of the per-sample kernels. `serial` is the reference path.
enum class Exec { serial, parallel };

/// Runs fn(i) for i in [0, n). With Exec::parallel the loop is split over
/// OpenMP threads; iterations must write to disjoint outputs. The first
/// exception thrown by any iteration is rethrown on the calling thread.
template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

int max_threads();

}  // namespace nodencg

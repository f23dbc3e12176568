// sweep.hpp: instance-level sweeps.  The OpenMP kernel and the serial
// reference loop produce identical result vectors: every instance draws from
// its own counter-derived stream and writes only its own slot.

#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <vector>

namespace ncmart {

enum class Execution { serial, parallel };

int max_threads();
/// n <= 0 restores the OpenMP default.
void set_threads(int n);

template <class R, class Fn>
std::vector<R> map_instances_serial(std::size_t count, Fn&& fn) {
  std::vector<R> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(fn(i));
  return out;
}

template <class R, class Fn>
std::vector<R> map_instances_parallel(std::size_t count, Fn&& fn) {
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    try {
      slots[i].emplace(fn(static_cast<std::size_t>(i)));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  // lowest failing index wins, as in the serial loop
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

template <class R, class Fn>
std::vector<R> map_instances(std::size_t count, Execution exec, Fn&& fn) {
  return exec == Execution::parallel ? map_instances_parallel<R>(count, fn)
                                     : map_instances_serial<R>(count, fn);
}

}  // namespace ncmart

#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace georf {

// Execution policy for the data-parallel kernels. Every kernel has one body
// shared by both policies; Serial is the reference path used to validate the
// OpenMP path and by the benchmark tool.
enum class Exec { Serial, Parallel };

inline void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Results must be written to disjoint slots;
// bodies must not throw. Iteration order is unspecified under Parallel, so
// bodies may not depend on each other.
template <typename Body>
void parallel_for(Exec exec, std::ptrdiff_t n, const Body& body) {
#ifdef _OPENMP
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)exec;
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace georf

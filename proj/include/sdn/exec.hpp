#ifndef SDN_EXEC_HPP
#define SDN_EXEC_HPP

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdn {

// Execution policy for the data-parallel kernels. `serial` is the reference
// path; `parallel` must produce bit-identical results (each index does the
// same work, writes are disjoint, accumulation order per output is fixed).
enum class exec_policy { serial, parallel };

template <class F>
inline void for_each_index(std::int64_t n, exec_policy policy, F&& body) {
  if (policy == exec_policy::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
}

// Dynamic schedule for loops with uneven per-index cost (per-column coding).
template <class F>
inline void for_each_index_dynamic(std::int64_t n, exec_policy policy, F&& body) {
  if (policy == exec_policy::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace sdn

#endif

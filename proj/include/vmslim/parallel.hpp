#pragma once

#include <cstddef>

namespace vmslim {

// Execution policy for the data-parallel kernels (block flattening, content
// hashing). Serial and Parallel must produce bit-identical results; Auto
// resolves to Parallel unless VMSLIM_NO_PARALLEL=1 is set or OpenMP is
// unavailable.
enum class ExecMode {
    Serial,
    Parallel,
    Auto,
};

// True if kernels should run their OpenMP path under the given mode.
bool use_parallel(ExecMode mode);

int max_threads();

namespace detail {

template <typename Fn>
void parallel_for(size_t n, bool parallel, Fn&& fn) {
    if (!parallel) {
        for (size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
#ifdef VMSLIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        fn(static_cast<size_t>(i));
#else
    for (size_t i = 0; i < n; ++i)
        fn(i);
#endif
}

} // namespace detail
} // namespace vmslim

#include "vmslim/parallel.hpp"

#include <cstdlib>
#include <cstring>

#ifdef VMSLIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace vmslim {

static bool no_parallel_env() {
    const char* v = std::getenv("VMSLIM_NO_PARALLEL");
    return v != nullptr && std::strcmp(v, "1") == 0;
}

int max_threads() {
#ifdef VMSLIM_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool use_parallel(ExecMode mode) {
    switch (mode) {
    case ExecMode::Serial:
        return false;
    case ExecMode::Parallel:
#ifdef VMSLIM_HAVE_OPENMP
        return true;
#else
        return false;
#endif
    case ExecMode::Auto:
        break;
    }
#ifdef VMSLIM_HAVE_OPENMP
    return !no_parallel_env() && max_threads() > 1;
#else
    return false;
#endif
}

} // namespace vmslim

#pragma once

#include <cmath>

namespace vmslim {

// Half-up rounding to 2 decimals, with a small guard so values that decimal
// arithmetic would put exactly on the .5 boundary but binary floating point
// stores just below it (13.025 -> 13.024999...) still round up.
inline double round_half_up2(double x) {
    return std::floor(x * 100.0 + 0.5 + 1e-7) / 100.0;
}

} // namespace vmslim

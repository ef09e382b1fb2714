#pragma once

#include <cmath>
#include <cstdlib>

namespace testsupport {

// |actual - expected| <= tol * max(1, |expected|): relative for large values,
// absolute for small ones, which is what finite-difference noise demands.
inline bool close_mixed(double actual, double expected, double tol) {
    return std::abs(actual - expected) <= tol * std::max(1.0, std::abs(expected));
}

// U may be long double: an extended-precision stencil keeps the oracle's own
// roundoff well under the tolerance bands it certifies.
template <class F, class U>
U fd_first(F&& f, U z, U h) {
    return (f(z + h) - f(z - h)) / (U(2) * h);
}

template <class F, class U>
U fd_second(F&& f, U z, U h) {
    return (f(z + h) - U(2) * f(z) + f(z - h)) / (h * h);
}

}  // namespace testsupport

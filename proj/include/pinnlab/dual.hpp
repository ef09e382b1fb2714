#pragma once

#include <cmath>
#include <stdexcept>

namespace pinnlab {

// First-order forward-mode scalar: value plus one tangent slot.
// Used to seed single-parameter sweeps and to push activation derivative
// triples one order higher (the tangent of f'' is f''').
struct Dual {
    double v = 0.0;
    double d = 0.0;

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value) {}
    constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

    friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
    friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
    friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
    friend constexpr Dual operator*(const Dual& a, const Dual& b) {
        return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    friend constexpr Dual operator/(const Dual& a, const Dual& b) {
        if (b.v == 0.0) throw std::domain_error("Dual: division by zero value");
        double inv = 1.0 / b.v;
        return {a.v * inv, (a.d - a.v * b.d * inv) * inv};
    }

    Dual& operator+=(const Dual& o) { return *this = *this + o; }
    Dual& operator-=(const Dual& o) { return *this = *this - o; }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }

    friend constexpr bool operator==(const Dual& a, const Dual& b) { return a.v == b.v && a.d == b.d; }
};

inline Dual sin(const Dual& a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual exp(const Dual& a) {
    double e = std::exp(a.v);
    return {e, e * a.d};
}
inline Dual tanh(const Dual& a) {
    double t = std::tanh(a.v);
    return {t, (1.0 - t * t) * a.d};
}

// Primal value of a possibly-nested forward scalar.
constexpr double value_of(double x) { return x; }
constexpr double value_of(long double x) { return static_cast<double>(x); }
constexpr double value_of(const Dual& x) { return x.v; }

}  // namespace pinnlab

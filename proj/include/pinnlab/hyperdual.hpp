#pragma once

#include <cmath>
#include <stdexcept>
#include <type_traits>

#include "pinnlab/dual.hpp"

namespace pinnlab {

enum class Axis { X, Y };

// Second-order forward-mode scalar over two independent variables.
// Tracks value, first and pure second derivatives; no cross term, which is
// all a Laplacian-style residual needs. Template parameter T is the slot
// scalar so the whole tower can itself be differentiated (T = Dual).
template <class T = double>
struct HyperDual2T {
    T v{}, dx{}, dy{}, dxx{}, dyy{};

    constexpr HyperDual2T() = default;
    constexpr HyperDual2T(T value) : v(value) {}
    constexpr HyperDual2T(T value, T dx_, T dy_, T dxx_, T dyy_)
        : v(value), dx(dx_), dy(dy_), dxx(dxx_), dyy(dyy_) {}

    template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
    constexpr HyperDual2T(double value) : v(value) {}

    static constexpr HyperDual2T variable(T value, Axis axis) {
        HyperDual2T r(value);
        (axis == Axis::X ? r.dx : r.dy) = T(1.0);
        return r;
    }

    friend constexpr HyperDual2T operator+(const HyperDual2T& a, const HyperDual2T& b) {
        return {a.v + b.v, a.dx + b.dx, a.dy + b.dy, a.dxx + b.dxx, a.dyy + b.dyy};
    }
    friend constexpr HyperDual2T operator-(const HyperDual2T& a, const HyperDual2T& b) {
        return {a.v - b.v, a.dx - b.dx, a.dy - b.dy, a.dxx - b.dxx, a.dyy - b.dyy};
    }
    friend constexpr HyperDual2T operator-(const HyperDual2T& a) {
        return {-a.v, -a.dx, -a.dy, -a.dxx, -a.dyy};
    }
    friend constexpr HyperDual2T operator*(const HyperDual2T& a, const HyperDual2T& b) {
        return {a.v * b.v,
                a.dx * b.v + a.v * b.dx,
                a.dy * b.v + a.v * b.dy,
                a.dxx * b.v + T(2.0) * a.dx * b.dx + a.v * b.dxx,
                a.dyy * b.v + T(2.0) * a.dy * b.dy + a.v * b.dyy};
    }
    friend HyperDual2T operator/(const HyperDual2T& a, const HyperDual2T& b) {
        if (value_of(b.v) == 0.0) throw std::domain_error("HyperDual2: division by zero value");
        T inv = T(1.0) / b.v;
        return a * chain(b, inv, -inv * inv, T(2.0) * inv * inv * inv);
    }

    HyperDual2T& operator+=(const HyperDual2T& o) { return *this = *this + o; }
    HyperDual2T& operator-=(const HyperDual2T& o) { return *this = *this - o; }
    HyperDual2T& operator*=(const HyperDual2T& o) { return *this = *this * o; }
    HyperDual2T& operator/=(const HyperDual2T& o) { return *this = *this / o; }

    friend constexpr bool operator==(const HyperDual2T& a, const HyperDual2T& b) {
        return a.v == b.v && a.dx == b.dx && a.dy == b.dy && a.dxx == b.dxx && a.dyy == b.dyy;
    }
};

using HyperDual2 = HyperDual2T<double>;

// Composes an elementwise map given its value and first two derivatives at a.v:
//   h = f(a)  =>  h' = f1 a',  h'' = f2 a'^2 + f1 a''   (per axis)
template <class T>
constexpr HyperDual2T<T> chain(const HyperDual2T<T>& a, T f0, T f1, T f2) {
    return {f0,
            f1 * a.dx,
            f1 * a.dy,
            f2 * a.dx * a.dx + f1 * a.dxx,
            f2 * a.dy * a.dy + f1 * a.dyy};
}

template <class T>
HyperDual2T<T> sin(const HyperDual2T<T>& a) {
    using std::cos;
    using std::sin;
    T s = sin(a.v), c = cos(a.v);
    return chain(a, s, c, -s);
}

template <class T>
HyperDual2T<T> cos(const HyperDual2T<T>& a) {
    using std::cos;
    using std::sin;
    T s = sin(a.v), c = cos(a.v);
    return chain(a, c, -s, -c);
}

template <class T>
HyperDual2T<T> exp(const HyperDual2T<T>& a) {
    using std::exp;
    T e = exp(a.v);
    return chain(a, e, e, e);
}

template <class T>
HyperDual2T<T> tanh(const HyperDual2T<T>& a) {
    using std::tanh;
    T t = tanh(a.v);
    T p = T(1.0) - t * t;
    return chain(a, t, p, T(-2.0) * t * p);
}

template <class T>
constexpr double value_of(const HyperDual2T<T>& x) {
    return value_of(x.v);
}

template <class S>
struct is_hyperdual : std::false_type {};
template <class T>
struct is_hyperdual<HyperDual2T<T>> : std::true_type {};
template <class S>
inline constexpr bool is_hyperdual_v = is_hyperdual<S>::value;

}  // namespace pinnlab

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "pinnlab/network.hpp"

namespace pinnlab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct Point {
    double x = 0.0, y = 0.0;
};

// Steady problem on the unit square:
//   psi_xx + psi_yy + psi * psi_y = f,  psi = 0 on x=0, x=1, y=0 and
//   psi = sin(pi x) on y=1. f is manufactured so psi = y^2 sin(pi x) solves it.
inline double exact_solution(Point p) {
    return p.y * p.y * std::sin(kPi * p.x);
}

inline double source_term(Point p) {
    double s = std::sin(kPi * p.x);
    return s * (2.0 - kPi * kPi * p.y * p.y + 2.0 * p.y * p.y * p.y * s);
}

// Satisfies the boundary conditions exactly; the network term is gated off
// the boundary, so the trial function inherits them for any parameters.
template <class S>
S boundary_lift(const S& x, const S& y) {
    using std::sin;
    return y * sin(S(kPi) * x);
}

// Zero on all four edges, nonzero inside.
template <class S>
S boundary_gate(const S& x, const S& y) {
    using std::sin;
    return sin(x - S(1.0)) * sin(y - S(1.0)) * sin(x) * sin(y);
}

template <class S, class TB = double>
S trial_value(const LayerSpec& spec, std::span<const TB> flat, const S& x, const S& y) {
    return boundary_lift(x, y) + boundary_gate(x, y) * forward<S, TB>(spec, flat, x, y);
}

inline double trial_value(const LayerSpec& spec, const Params& p, Point pt) {
    return trial_value<double>(spec, std::span<const double>(p.values), pt.x, pt.y);
}

struct ResidualParts {
    double psi, psi_y, psi_xx, psi_yy, source, residual;
};

// field maps seeded hyperdual coordinates to a hyperdual surface value.
template <class Field>
ResidualParts residual_at(Field&& field, Point pt) {
    HyperDual2 psi = field(HyperDual2::variable(pt.x, Axis::X), HyperDual2::variable(pt.y, Axis::Y));
    double f = source_term(pt);
    return {psi.v, psi.dy, psi.dxx, psi.dyy, f, psi.dxx + psi.dyy + psi.v * psi.dy - f};
}

inline ResidualParts residual_parts(const LayerSpec& spec, const Params& p, Point pt) {
    return residual_at(
        [&](const HyperDual2& x, const HyperDual2& y) {
            return trial_value<HyperDual2>(spec, std::span<const double>(p.values), x, y);
        },
        pt);
}

// Residual generic in the parameter scalar; with TB = Dual this carries one
// parameter tangent through the whole PDE operator.
template <class TB>
TB residual_value(const LayerSpec& spec, std::span<const TB> flat, Point pt) {
    using HD = HyperDual2T<TB>;
    HD psi = trial_value<HD, TB>(spec, flat, HD::variable(TB(pt.x), Axis::X), HD::variable(TB(pt.y), Axis::Y));
    return psi.dxx + psi.dyy + psi.v * psi.dy - TB(source_term(pt));
}

// Cell-centered n x n evaluation grid; matches the reported-error convention.
inline std::vector<Point> validation_grid(int n) {
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            pts.push_back({(i + 0.5) / n, (j + 0.5) / n});
    return pts;
}

template <class F>
double mae_against_exact(F&& approx, int grid_n) {
    double acc = 0.0;
    for (Point pt : validation_grid(grid_n)) acc += std::abs(approx(pt) - exact_solution(pt));
    return acc / (static_cast<double>(grid_n) * grid_n);
}

}  // namespace pinnlab

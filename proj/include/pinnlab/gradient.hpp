#pragma once

#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

#include "pinnlab/problem.hpp"

namespace pinnlab {

// Forward-mode gradient of a scalar-generic objective: one tangent sweep per
// parameter. objective must be callable as objective(std::span<const S>) -> S
// for S = Dual. Exact but O(#params) sweeps; fine for small objectives and
// as an independent cross-check of the reverse path below.
template <class F>
std::vector<double> gradient_forward(F&& objective, std::span<const double> p) {
    std::vector<Dual> dp(p.begin(), p.end());
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        dp[i].d = 1.0;
        g[i] = objective(std::span<const Dual>(dp)).d;
        dp[i].d = 0.0;
    }
    return g;
}

inline double dot5(const HyperDual2& a, const HyperDual2& b) {
    return a.v * b.v + a.dx * b.dx + a.dy * b.dy + a.dxx * b.dxx + a.dyy * b.dyy;
}

inline void axpy5(double a, const HyperDual2& s, HyperDual2& dst) {
    dst.v += a * s.v;
    dst.dx += a * s.dx;
    dst.dy += a * s.dy;
    dst.dxx += a * s.dxx;
    dst.dyy += a * s.dyy;
}

// Scratch for the traced forward / reverse sweep; reusable across points
// and epochs so the hot loop never allocates.
struct GradWorkspace {
    std::vector<HyperDual2> h, hbar;  // unit values per layer level, inputs included
    std::vector<HyperDual2> z, zbar;  // pre-activations per non-input layer
    std::vector<std::size_t> hoff, zoff, woff;
    std::vector<int> shape;  // sizes this scratch was laid out for

    void resize(const LayerSpec& spec) {
        shape = spec.sizes;
        const int layers = spec.layer_count();
        hoff.assign(layers + 1, 0);
        zoff.assign(layers, 0);
        woff.assign(layers, 0);
        std::size_t hn = spec.sizes[0], zn = 0, wn = 0;
        for (int t = 0; t < layers; ++t) {
            hoff[t + 1] = hn;
            zoff[t] = zn;
            woff[t] = wn;
            hn += spec.sizes[t + 1];
            zn += spec.sizes[t + 1];
            wn += static_cast<std::size_t>(spec.sizes[t + 1]) * (spec.sizes[t] + 1);
        }
        h.assign(hn, {});
        hbar.assign(hn, {});
        z.assign(zn, {});
        zbar.assign(zn, {});
    }
};


// Mean squared PDE residual over the batch and its gradient in the flat
// parameters: reverse accumulation through the hyperdual-traced forward pass.
// The adjoint of each scalar carries five slots, one per derivative tracked.
inline double loss_and_gradient(const LayerSpec& spec, const Params& p, std::span<const Point> batch,
                                std::span<double> grad, GradWorkspace& ws) {
    const int layers = spec.layer_count();
    const std::size_t np = static_cast<std::size_t>(param_count(spec));
    if (p.values.size() != np) throw std::invalid_argument("loss_and_gradient: parameter count mismatch");
    if (grad.size() != np) throw std::invalid_argument("loss_and_gradient: gradient span size mismatch");
    if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
    if (ws.shape != spec.sizes) ws.resize(spec);

    const double* W = p.values.data();
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    const double rbar_scale = 2.0 / static_cast<double>(batch.size());

    for (const Point& pt : batch) {
        HyperDual2 X = HyperDual2::variable(pt.x, Axis::X);
        HyperDual2 Y = HyperDual2::variable(pt.y, Axis::Y);
        ws.h[0] = X;
        ws.h[1] = Y;

        for (int t = 0; t < layers; ++t) {
            const int in = spec.sizes[t], out = spec.sizes[t + 1];
            const HyperDual2* hin = ws.h.data() + ws.hoff[t];
            HyperDual2* zt = ws.z.data() + ws.zoff[t];
            HyperDual2* hout = ws.h.data() + ws.hoff[t + 1];
            const double* Wt = W + ws.woff[t];
            const double* bt = Wt + static_cast<std::size_t>(out) * in;
            const bool activated = !(spec.linear_output && t == layers - 1);
            for (int j = 0; j < out; ++j) {
                HyperDual2 acc(bt[j]);
                const double* wrow = Wt + static_cast<std::size_t>(j) * in;
                for (int k = 0; k < in; ++k) axpy5(wrow[k], hin[k], acc);
                zt[j] = acc;
                hout[j] = activated ? apply_activation(spec.activations[t], acc) : acc;
            }
        }

        const HyperDual2 N = ws.h[ws.hoff[layers]];
        const HyperDual2 A = boundary_lift(X, Y);
        const HyperDual2 F = boundary_gate(X, Y);
        const HyperDual2 psi = A + F * N;
        const double r = psi.dxx + psi.dyy + psi.v * psi.dy - source_term(pt);
        loss += r * r;

        const double rb = rbar_scale * r;
        // d r / d psi-slots, then transposed through psi = A + F N.
        const HyperDual2 psibar{rb * psi.dy, 0.0, rb * psi.v, rb, rb};
        HyperDual2 nbar;
        nbar.v = psibar.v * F.v + psibar.dy * F.dy + psibar.dxx * F.dxx + psibar.dyy * F.dyy;
        nbar.dx = 2.0 * F.dx * psibar.dxx;
        nbar.dy = psibar.dy * F.v + 2.0 * F.dy * psibar.dyy;
        nbar.dxx = psibar.dxx * F.v;
        nbar.dyy = psibar.dyy * F.v;

        std::fill(ws.hbar.begin(), ws.hbar.end(), HyperDual2{});
        ws.hbar[ws.hoff[layers]] = nbar;

        for (int t = layers - 1; t >= 0; --t) {
            const int in = spec.sizes[t], out = spec.sizes[t + 1];
            const HyperDual2* hin = ws.h.data() + ws.hoff[t];
            const HyperDual2* zt = ws.z.data() + ws.zoff[t];
            const HyperDual2* hb = ws.hbar.data() + ws.hoff[t + 1];
            HyperDual2* zb = ws.zbar.data() + ws.zoff[t];
            HyperDual2* hbin = ws.hbar.data() + ws.hoff[t];
            const double* Wt = W + ws.woff[t];
            double* gWt = grad.data() + ws.woff[t];
            double* gbt = gWt + static_cast<std::size_t>(out) * in;
            const bool activated = !(spec.linear_output && t == layers - 1);

            for (int j = 0; j < out; ++j) {
                if (activated) {
                    // First three derivatives of the activation at z.v; the
                    // dual tangent of .second supplies the third one.
                    const auto d = activation_eval(spec.activations[t], Dual{zt[j].v, 1.0});
                    const double f1 = d.first.v, f2 = d.second.v, f3 = d.second.d;
                    const HyperDual2& zj = zt[j];
                    const HyperDual2& hj = hb[j];
                    zb[j].v = hj.v * f1 + f2 * (hj.dx * zj.dx + hj.dy * zj.dy) +
                              hj.dxx * (f3 * zj.dx * zj.dx + f2 * zj.dxx) +
                              hj.dyy * (f3 * zj.dy * zj.dy + f2 * zj.dyy);
                    zb[j].dx = f1 * hj.dx + 2.0 * f2 * zj.dx * hj.dxx;
                    zb[j].dy = f1 * hj.dy + 2.0 * f2 * zj.dy * hj.dyy;
                    zb[j].dxx = f1 * hj.dxx;
                    zb[j].dyy = f1 * hj.dyy;
                } else {
                    zb[j] = hb[j];
                }
            }
            for (int j = 0; j < out; ++j) {
                const double* wrow = Wt + static_cast<std::size_t>(j) * in;
                double* grow = gWt + static_cast<std::size_t>(j) * in;
                for (int k = 0; k < in; ++k) {
                    grow[k] += dot5(zb[j], hin[k]);
                    if (t > 0) axpy5(wrow[k], zb[j], hbin[k]);
                }
                gbt[j] += zb[j].v;
            }
        }
    }
    return loss / static_cast<double>(batch.size());
}

}  // namespace pinnlab

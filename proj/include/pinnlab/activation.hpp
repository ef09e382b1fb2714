#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "pinnlab/format.hpp"
#include "pinnlab/hyperdual.hpp"

namespace pinnlab {

// Activation family plus its shape parameter. alpha is the negative-side
// slope for relu (in [0,1]) and the negative-side scale for elu (> 0);
// the other kinds ignore it.
struct ActivationKind {
    enum class Fn { Sigmoid, Tanh, Relu, Elu, Gelu };

    Fn fn = Fn::Tanh;
    double alpha = 0.0;

    static ActivationKind sigmoid() { return {Fn::Sigmoid, 0.0}; }
    static ActivationKind tanh() { return {Fn::Tanh, 0.0}; }
    static ActivationKind relu(double slope = 0.0) {
        if (!(slope >= 0.0 && slope <= 1.0))
            throw std::invalid_argument("relu: slope must be in [0, 1], got " + format_double(slope));
        return {Fn::Relu, slope};
    }
    static ActivationKind elu(double scale = 1.0) {
        if (!(scale > 0.0))
            throw std::invalid_argument("elu: scale must be > 0, got " + format_double(scale));
        return {Fn::Elu, scale};
    }
    static ActivationKind gelu() { return {Fn::Gelu, 0.0}; }

    friend bool operator==(const ActivationKind& a, const ActivationKind& b) {
        return a.fn == b.fn && a.alpha == b.alpha;
    }
};

inline std::string activation_name(const ActivationKind& k) {
    switch (k.fn) {
        case ActivationKind::Fn::Sigmoid: return "sigmoid";
        case ActivationKind::Fn::Tanh: return "tanh";
        case ActivationKind::Fn::Relu:
            return k.alpha == 0.0 ? "relu" : "relu:" + format_double(k.alpha);
        case ActivationKind::Fn::Elu:
            return k.alpha == 1.0 ? "elu" : "elu:" + format_double(k.alpha);
        case ActivationKind::Fn::Gelu: return "gelu";
    }
    throw std::logic_error("activation_name: bad kind");
}

// Accepts "tanh", "relu", "relu:0.1", "elu:1.5", ...
inline ActivationKind parse_activation(const std::string& text) {
    std::string name = text;
    double alpha = 0.0;
    bool has_alpha = false;
    if (auto pos = text.find(':'); pos != std::string::npos) {
        name = text.substr(0, pos);
        std::string rest = text.substr(pos + 1);
        std::size_t used = 0;
        try {
            alpha = std::stod(rest, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != rest.size() || rest.empty())
            throw std::invalid_argument("activation parameter is not a number: '" + text + "'");
        has_alpha = true;
    }
    if (name == "sigmoid" && !has_alpha) return ActivationKind::sigmoid();
    if (name == "tanh" && !has_alpha) return ActivationKind::tanh();
    if (name == "gelu" && !has_alpha) return ActivationKind::gelu();
    if (name == "relu") return has_alpha ? ActivationKind::relu(alpha) : ActivationKind::relu();
    if (name == "elu") return has_alpha ? ActivationKind::elu(alpha) : ActivationKind::elu();
    throw std::invalid_argument("unknown activation: '" + text + "'");
}

// Value and first two derivatives at one point, in the slot scalar T.
// Instantiating with T = Dual pushes the triple one order up, so the
// tangent of .second is the third derivative; nothing is hand-derived twice.
template <class T>
struct ActivationDerivs {
    T value, first, second;
};

namespace detail {

// 0.044715 and sqrt(2/pi) are the standard tanh-form gelu constants.
inline constexpr double kGeluCubic = 0.044715;
inline constexpr double kGeluScale = 0.7978845608028653558798921198687637369;

}  // namespace detail

// At the relu/elu kink z = 0 the first derivative takes the right-hand
// limit and the second derivative is defined as 0.
template <class T>
ActivationDerivs<T> activation_eval(const ActivationKind& k, const T& z) {
    using std::exp;
    using std::tanh;
    switch (k.fn) {
        case ActivationKind::Fn::Sigmoid: {
            T s = T(1.0) / (T(1.0) + exp(-z));
            T p = s * (T(1.0) - s);
            return {s, p, p * (T(1.0) - T(2.0) * s)};
        }
        case ActivationKind::Fn::Tanh: {
            T t = tanh(z);
            T p = T(1.0) - t * t;
            return {t, p, T(-2.0) * t * p};
        }
        case ActivationKind::Fn::Relu: {
            if (value_of(z) >= 0.0) return {z, T(1.0), T(0.0)};
            return {T(k.alpha) * z, T(k.alpha), T(0.0)};
        }
        case ActivationKind::Fn::Elu: {
            if (value_of(z) >= 0.0) return {z, T(1.0), T(0.0)};
            T e = T(k.alpha) * exp(z);
            return {e - T(k.alpha), e, e};
        }
        case ActivationKind::Fn::Gelu: {
            T z2 = z * z;
            T u = T(detail::kGeluScale) * (z + T(detail::kGeluCubic) * z2 * z);
            T t = tanh(u);
            T p = T(1.0) - t * t;
            T u1 = T(detail::kGeluScale) * (T(1.0) + T(3.0 * detail::kGeluCubic) * z2);
            T u2 = T(6.0 * detail::kGeluScale * detail::kGeluCubic) * z;
            T half_z = T(0.5) * z;
            return {half_z * (T(1.0) + t),
                    T(0.5) * (T(1.0) + t) + half_z * p * u1,
                    p * u1 + half_z * (p * u2 - T(2.0) * t * p * u1 * u1)};
        }
    }
    throw std::logic_error("activation_eval: bad kind");
}

// Elementwise application; hyperdual scalars compose through the chain rule.
template <class S>
S apply_activation(const ActivationKind& k, const S& z) {
    if constexpr (is_hyperdual_v<S>) {
        auto d = activation_eval(k, z.v);
        return chain(z, d.value, d.first, d.second);
    } else {
        return activation_eval(k, z).value;
    }
}

}  // namespace pinnlab

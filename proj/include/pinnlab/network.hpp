#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinnlab/activation.hpp"
#include "pinnlab/rng.hpp"

namespace pinnlab {

// Fully connected feed-forward topology. sizes runs input to output,
// activations has one entry per non-input layer. With linear_output the
// last layer skips its activation (its ActivationKind entry is ignored).
struct LayerSpec {
    std::vector<int> sizes;
    std::vector<ActivationKind> activations;
    bool linear_output = false;

    int layer_count() const { return static_cast<int>(sizes.size()) - 1; }

    void validate() const {
        if (sizes.size() < 2) throw std::invalid_argument("network: need at least input and output layers");
        if (sizes.front() != 2) throw std::invalid_argument("network: input layer must have 2 units (x, y)");
        for (int n : sizes)
            if (n <= 0) throw std::invalid_argument("network: layer sizes must be positive");
        if (activations.size() != sizes.size() - 1)
            throw std::invalid_argument("network: expected " + std::to_string(sizes.size() - 1) +
                                        " activations, got " + std::to_string(activations.size()));
    }
};

inline int param_count(const LayerSpec& spec) {
    int n = 0;
    for (std::size_t l = 1; l < spec.sizes.size(); ++l)
        n += spec.sizes[l] * (spec.sizes[l - 1] + 1);
    return n;
}

// Flat parameter vector, layer-major: for each non-input layer its weight
// matrix row-major (out x in) followed by its bias vector.
struct Params {
    std::vector<double> values;
};

struct LayerView {
    std::span<const double> weights;
    std::span<const double> biases;
    int in = 0, out = 0;

    double weight(int j, int k) const { return weights[static_cast<std::size_t>(j) * in + k]; }
    double bias(int j) const { return biases[j]; }
};

// layer indexes non-input layers from 0.
inline LayerView layer_view(const LayerSpec& spec, std::span<const double> flat, int layer) {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l)
        off += static_cast<std::size_t>(spec.sizes[l + 1]) * (spec.sizes[l] + 1);
    int in = spec.sizes[layer];
    int out = spec.sizes[layer + 1];
    return {flat.subspan(off, static_cast<std::size_t>(out) * in),
            flat.subspan(off + static_cast<std::size_t>(out) * in, out), in, out};
}

inline LayerView layer_view(const LayerSpec& spec, const Params& p, int layer) {
    return layer_view(spec, std::span<const double>(p.values), layer);
}

// Glorot-uniform weights, zero biases; same seed, same parameters.
inline Params init_params(const LayerSpec& spec, std::uint64_t seed) {
    spec.validate();
    Params p;
    p.values.resize(param_count(spec));
    std::mt19937_64 rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 1; l < spec.sizes.size(); ++l) {
        int in = spec.sizes[l - 1], out = spec.sizes[l];
        double limit = std::sqrt(6.0 / (in + out));
        for (int i = 0; i < out * in; ++i) p.values[off++] = uniform_in(rng, -limit, limit);
        off += out;  // biases stay zero
    }
    return p;
}

inline std::vector<double> flatten(const Params& p) { return p.values; }

inline Params unflatten(const LayerSpec& spec, std::span<const double> flat) {
    if (flat.size() != static_cast<std::size_t>(param_count(spec)))
        throw std::invalid_argument("unflatten: expected " + std::to_string(param_count(spec)) +
                                    " values, got " + std::to_string(flat.size()));
    return Params{std::vector<double>(flat.begin(), flat.end())};
}

// Forward pass generic in both the point scalar S (double, HyperDual2, ...)
// and the parameter scalar TB (double, or Dual for parameter tangents).
template <class S, class TB = double>
S forward(const LayerSpec& spec, std::span<const TB> flat, const S& x, const S& y) {
    std::vector<S> h = {x, y};
    std::vector<S> z;
    std::size_t off = 0;
    const int layers = spec.layer_count();
    for (int l = 0; l < layers; ++l) {
        int in = spec.sizes[l], out = spec.sizes[l + 1];
        z.assign(out, S(0.0));
        for (int j = 0; j < out; ++j) {
            S acc = S(flat[off + static_cast<std::size_t>(out) * in + j]);  // bias
            for (int k = 0; k < in; ++k) acc += S(flat[off + static_cast<std::size_t>(j) * in + k]) * h[k];
            z[j] = acc;
        }
        off += static_cast<std::size_t>(out) * (in + 1);
        bool activated = !(spec.linear_output && l == layers - 1);
        if (activated)
            for (S& s : z) s = apply_activation(spec.activations[l], s);
        h.swap(z);
    }
    return h[0];
}

template <class S>
S forward(const LayerSpec& spec, const Params& p, const S& x, const S& y) {
    if (p.values.size() != static_cast<std::size_t>(param_count(spec)))
        throw std::invalid_argument("forward: parameter count mismatch");
    return forward<S, double>(spec, std::span<const double>(p.values), x, y);
}

inline nlohmann::json spec_to_json(const LayerSpec& spec) {
    nlohmann::json acts = nlohmann::json::array();
    for (const auto& a : spec.activations) acts.push_back(activation_name(a));
    return {{"sizes", spec.sizes}, {"activations", acts}, {"linear_output", spec.linear_output}};
}

inline LayerSpec spec_from_json(const nlohmann::json& j) {
    LayerSpec spec;
    spec.sizes = j.at("sizes").get<std::vector<int>>();
    for (const auto& name : j.at("activations"))
        spec.activations.push_back(parse_activation(name.get<std::string>()));
    spec.linear_output = j.at("linear_output").get<bool>();
    spec.validate();
    return spec;
}

inline nlohmann::json params_to_json(const LayerSpec& spec, const Params& p) {
    nlohmann::json j = spec_to_json(spec);
    j["values"] = p.values;
    return j;
}

inline std::pair<LayerSpec, Params> params_from_json(const nlohmann::json& j) {
    LayerSpec spec = spec_from_json(j);
    auto values = j.at("values").get<std::vector<double>>();
    return {spec, unflatten(spec, values)};
}

}  // namespace pinnlab

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinnlab/format.hpp"
#include "pinnlab/gradient.hpp"
#include "pinnlab/problem.hpp"
#include "pinnlab/rng.hpp"

namespace pinnlab {

enum class OptimizerKind { Sgd, Adam };

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    LayerSpec spec;
    std::uint64_t seed = 1;
    OptimizerKind optimizer = OptimizerKind::Adam;
    AdamSettings adam{};
    double learning_rate = 1e-3;
    int epochs_max = 10000;
    int batch_size = 50;
    double noise = 0.0;   // per-point probability of coordinate jitter
    double stddev = 0.0;  // jitter scale
    double tolerance = 0.0;
    std::vector<int> mae_checkpoints = {10000, 20000, 50000};
    int validation_grid_n = 100;

    void validate() const {
        spec.validate();
        if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be > 0");
        if (epochs_max < 1) throw std::invalid_argument("train.epochs_max must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
        if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("train.noise must be in [0, 1]");
        if (!(stddev >= 0.0)) throw std::invalid_argument("train.stddev must be >= 0");
        if (!(tolerance >= 0.0)) throw std::invalid_argument("train.tolerance must be >= 0");
        if (validation_grid_n < 1) throw std::invalid_argument("train.validation_grid must be >= 1");
        for (int e : mae_checkpoints)
            if (e < 1) throw std::invalid_argument("train.mae_checkpoints entries must be >= 1");
    }
};

enum class StopReason { MaxEpochs, ToleranceReached };

struct TrainReport {
    std::vector<double> loss_history;  // one entry per epoch, pre-step loss
    std::map<int, double> mae_at;      // checkpoint epoch -> validation MAE
    Params final_params;
    StopReason stop_reason = StopReason::MaxEpochs;
    double wall_seconds = 0.0;
};

struct TrainingDiverged : std::runtime_error {
    int epoch;
    double last_finite_loss;

    TrainingDiverged(int epoch_, double last_finite)
        : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) +
                             " (last finite loss " + format_double(last_finite) + ")"),
          epoch(epoch_),
          last_finite_loss(last_finite) {}
};

// Collocation batch: uniform in the open unit square, then with probability
// noise each point gets Gaussian jitter on both coordinates, clamped back
// into [0, 1].
inline std::vector<Point> sample_batch(std::mt19937_64& rng, int n, double noise, double stddev) {
    std::vector<Point> pts(n);
    for (Point& pt : pts) {
        pt.x = uniform_open01(rng);
        pt.y = uniform_open01(rng);
        if (noise > 0.0 && uniform01(rng) < noise) {
            NormalPair g = normal_pair(rng);
            pt.x = std::clamp(pt.x + stddev * g.first, 0.0, 1.0);
            pt.y = std::clamp(pt.y + stddev * g.second, 0.0, 1.0);
        }
    }
    return pts;
}

inline double batch_loss(const LayerSpec& spec, const Params& p, std::span<const Point> batch) {
    double acc = 0.0;
    for (const Point& pt : batch) {
        double r = residual_parts(spec, p, pt).residual;
        acc += r * r;
    }
    return acc / static_cast<double>(batch.size());
}

inline void sgd_step(std::span<double> p, std::span<const double> g, double lr) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
}

struct AdamState {
    std::vector<double> m, v;
    long t = 0;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& st, std::span<double> p, std::span<const double> g, double lr,
                      const AdamSettings& s = {}) {
    ++st.t;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        st.m[i] = s.beta1 * st.m[i] + (1.0 - s.beta1) * g[i];
        st.v[i] = s.beta2 * st.v[i] + (1.0 - s.beta2) * g[i] * g[i];
        p[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + s.epsilon);
    }
}

inline double validation_mae(const LayerSpec& spec, const Params& p, int grid_n) {
    return mae_against_exact([&](Point pt) { return trial_value(spec, p, pt); }, grid_n);
}

// One epoch = one sampled batch = one optimizer step. The recorded loss is
// evaluated before the step; checkpoint MAEs after it, so mae_at[e] reflects
// the parameters produced by e epochs.
inline TrainReport train(const TrainConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    TrainReport rep;
    rep.final_params = init_params(cfg.spec, derive_seed(cfg.seed, 0));
    std::mt19937_64 batch_rng(derive_seed(cfg.seed, 1));

    const std::size_t np = rep.final_params.values.size();
    std::vector<double> grad(np);
    GradWorkspace ws;
    ws.resize(cfg.spec);
    AdamState adam(np);

    rep.loss_history.reserve(cfg.epochs_max);
    double last_finite = 0.0;
    for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
        std::vector<Point> batch = sample_batch(batch_rng, cfg.batch_size, cfg.noise, cfg.stddev);
        double loss = loss_and_gradient(cfg.spec, rep.final_params, batch, grad, ws);
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch, last_finite);
        last_finite = loss;
        rep.loss_history.push_back(loss);

        if (loss < cfg.tolerance) {
            rep.stop_reason = StopReason::ToleranceReached;
            if (std::find(cfg.mae_checkpoints.begin(), cfg.mae_checkpoints.end(), epoch) !=
                cfg.mae_checkpoints.end())
                rep.mae_at[epoch] = validation_mae(cfg.spec, rep.final_params, cfg.validation_grid_n);
            break;
        }

        std::span<double> p(rep.final_params.values);
        if (cfg.optimizer == OptimizerKind::Adam)
            adam_step(adam, p, grad, cfg.learning_rate, cfg.adam);
        else
            sgd_step(p, grad, cfg.learning_rate);

        if (std::find(cfg.mae_checkpoints.begin(), cfg.mae_checkpoints.end(), epoch) !=
            cfg.mae_checkpoints.end())
            rep.mae_at[epoch] = validation_mae(cfg.spec, rep.final_params, cfg.validation_grid_n);
    }

    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace pinnlab

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "pinnlab/training.hpp"

namespace pinnlab {

enum class SearchMode { Grid, Random };

struct SearchSpace {
    std::vector<std::pair<double, double>> intervals;
    int points_per_interval = 50;
    SearchMode mode = SearchMode::Grid;
    std::uint64_t seed = 0;    // random mode draws
    bool log_spacing = false;  // geometric instead of linear placement

    void validate() const {
        if (intervals.empty()) throw std::invalid_argument("tune.intervals must not be empty");
        if (points_per_interval < 1) throw std::invalid_argument("tune.points_per_interval must be >= 1");
        for (auto [a, b] : intervals) {
            if (!(std::isfinite(a) && std::isfinite(b)))
                throw std::invalid_argument("tune.intervals entries must be finite");
            if (log_spacing && !(a > 0.0 && b > 0.0))
                throw std::invalid_argument("tune.intervals must be positive with log spacing");
        }
    }
};

// Evenly spaced candidates per interval (endpoints included), merged and
// sorted across intervals; duplicates are kept. Interval order is ignored.
inline std::vector<double> grid_candidates(const SearchSpace& s) {
    s.validate();
    std::vector<double> out;
    out.reserve(s.intervals.size() * s.points_per_interval);
    for (auto [a, b] : s.intervals) {
        auto [lo, hi] = std::minmax(a, b);
        const int n = s.points_per_interval;
        for (int i = 0; i < n; ++i) {
            double c;
            if (n == 1)
                c = s.log_spacing ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
            else {
                double t = static_cast<double>(i) / (n - 1);
                c = s.log_spacing ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
            }
            out.push_back(c);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Independent uniform draws per interval, kept in draw order.
inline std::vector<double> random_candidates(const SearchSpace& s) {
    s.validate();
    std::mt19937_64 rng(s.seed);
    std::vector<double> out;
    out.reserve(s.intervals.size() * s.points_per_interval);
    for (auto [a, b] : s.intervals) {
        auto [lo, hi] = std::minmax(a, b);
        for (int i = 0; i < s.points_per_interval; ++i) {
            if (s.log_spacing)
                out.push_back(std::exp(uniform_in(rng, std::log(lo), std::log(hi))));
            else
                out.push_back(uniform_in(rng, lo, hi));
        }
    }
    return out;
}

inline std::vector<double> candidates(const SearchSpace& s) {
    return s.mode == SearchMode::Grid ? grid_candidates(s) : random_candidates(s);
}

struct TrialRecord {
    ActivationKind activation;
    int activation_index = 0;
    int candidate_index = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;  // full train() seed for standalone reruns
    std::map<int, double> mae_at;
    double final_loss = std::numeric_limits<double>::infinity();
    bool diverged = false;
};

// MAE at the largest checkpoint the trial reached; +inf for diverged or
// unmeasured trials so they never win selection.
inline double selection_metric(const TrialRecord& t) {
    if (t.diverged || t.mae_at.empty()) return std::numeric_limits<double>::infinity();
    return t.mae_at.rbegin()->second;
}

struct SearchReport {
    std::vector<ActivationKind> activations;
    std::vector<double> candidates;
    std::vector<int> checkpoints;    // effective MAE epochs used by every trial
    std::vector<TrialRecord> trials; // activation-major, candidate order within
    std::vector<int> best;           // per activation: index into trials

    const TrialRecord& best_for(int activation_index) const {
        return trials[best[activation_index]];
    }
};

struct SearchOptions {
    int jobs = 1;
    std::function<void(const TrialRecord&)> on_trial_done;  // called under a lock
};

// Training configuration for one trial, reconstructible from its record.
inline TrainConfig trial_config(const TrainConfig& base, const std::vector<int>& checkpoints,
                                const ActivationKind& kind, double lr, std::uint64_t seed) {
    TrainConfig tc = base;
    tc.spec.activations.assign(tc.spec.sizes.size() - 1, kind);
    tc.learning_rate = lr;
    tc.seed = seed;
    tc.mae_checkpoints = checkpoints;
    return tc;
}

// Trains every (activation, candidate) pair and picks the best learning rate
// per activation: smallest selection metric, ties to the smaller rate.
// Trial seeds derive from (base seed, activation index, candidate index), so
// results do not depend on scheduling.
inline SearchReport run_search(const SearchSpace& space, const TrainConfig& base,
                               const std::vector<ActivationKind>& activations,
                               const SearchOptions& opt = {}) {
    base.validate();
    if (activations.empty()) throw std::invalid_argument("tune.activations must not be empty");

    SearchReport rep;
    rep.activations = activations;
    rep.candidates = candidates(space);
    for (double lr : rep.candidates)
        if (!(lr > 0.0))
            throw std::invalid_argument("tune: candidate learning rates must be > 0 (got " +
                                        format_double(lr) + ")");

    for (int c : base.mae_checkpoints)
        if (c <= base.epochs_max) rep.checkpoints.push_back(c);
    rep.checkpoints.push_back(base.epochs_max);
    std::sort(rep.checkpoints.begin(), rep.checkpoints.end());
    rep.checkpoints.erase(std::unique(rep.checkpoints.begin(), rep.checkpoints.end()),
                          rep.checkpoints.end());

    const std::size_t n_cand = rep.candidates.size();
    const std::size_t total = activations.size() * n_cand;
    rep.trials.resize(total);

    std::mutex done_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= total) return;
            const std::size_t a = idx / n_cand, c = idx % n_cand;
            TrialRecord& t = rep.trials[idx];
            t.activation = activations[a];
            t.activation_index = static_cast<int>(a);
            t.candidate_index = static_cast<int>(c);
            t.learning_rate = rep.candidates[c];
            t.seed = derive_seed(base.seed, a, c);
            try {
                TrainReport tr =
                    train(trial_config(base, rep.checkpoints, t.activation, t.learning_rate, t.seed));
                t.mae_at = std::move(tr.mae_at);
                t.final_loss = tr.loss_history.empty()
                                   ? std::numeric_limits<double>::infinity()
                                   : tr.loss_history.back();
            } catch (const TrainingDiverged&) {
                t.diverged = true;
                t.mae_at.clear();
                t.final_loss = std::numeric_limits<double>::infinity();
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
            if (opt.on_trial_done) {
                std::lock_guard<std::mutex> lk(done_mutex);
                opt.on_trial_done(t);
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(total)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    rep.best.resize(activations.size());
    for (std::size_t a = 0; a < activations.size(); ++a) {
        std::size_t pick = a * n_cand;
        for (std::size_t c = 1; c < n_cand; ++c) {
            const std::size_t idx = a * n_cand + c;
            const double m = selection_metric(rep.trials[idx]);
            const double mb = selection_metric(rep.trials[pick]);
            if (m < mb || (m == mb && rep.trials[idx].learning_rate < rep.trials[pick].learning_rate))
                pick = idx;
        }
        rep.best[a] = static_cast<int>(pick);
    }
    return rep;
}

}  // namespace pinnlab

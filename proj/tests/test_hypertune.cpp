#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "pinnlab/hypertune.hpp"
#include "support/helpers.hpp"

using namespace pinnlab;
using testsupport::close_mixed;

namespace {

SearchSpace decades() {
    SearchSpace s;
    s.intervals = {{1e-6, 1e-5}, {1e-5, 1e-4}, {1e-4, 1e-3}, {1e-3, 1e-2}, {1e-2, 1e-1}};
    return s;
}

TrainConfig tiny_base() {
    TrainConfig cfg;
    cfg.spec.sizes = {2, 4, 1};
    cfg.spec.activations.assign(2, ActivationKind::tanh());
    cfg.seed = 3;
    cfg.epochs_max = 30;
    cfg.batch_size = 4;
    cfg.mae_checkpoints = {10, 30};
    cfg.validation_grid_n = 10;
    return cfg;
}

bool same_trial(const TrialRecord& a, const TrialRecord& b) {
    return activation_name(a.activation) == activation_name(b.activation) &&
           a.activation_index == b.activation_index && a.candidate_index == b.candidate_index &&
           a.learning_rate == b.learning_rate && a.seed == b.seed && a.mae_at == b.mae_at &&
           a.final_loss == b.final_loss && a.diverged == b.diverged;
}

}  // namespace

TEST_CASE("grid candidates: endpoints, midpoints and counts") {
    SearchSpace s;
    s.points_per_interval = 2;
    s.intervals = {{1e-5, 1e-4}};
    CHECK(grid_candidates(s) == std::vector<double>{1e-5, 1e-4});

    s.intervals = {{0.0, 1.0}};
    s.points_per_interval = 3;
    CHECK(grid_candidates(s) == std::vector<double>{0.0, 0.5, 1.0});

    s = decades();
    std::vector<double> c = grid_candidates(s);
    REQUIRE(c.size() == 250);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(c.front() == 1e-6);
    CHECK(c.back() == 1e-1);

    s.points_per_interval = 1;
    s.intervals = {{2.0, 4.0}};
    CHECK(grid_candidates(s) == std::vector<double>{3.0});
}

TEST_CASE("grid candidates: interval reversal changes nothing") {
    SearchSpace fwd = decades();
    fwd.points_per_interval = 7;
    SearchSpace rev = fwd;
    std::reverse(rev.intervals.begin(), rev.intervals.end());
    for (auto& [lo, hi] : rev.intervals) std::swap(lo, hi);
    CHECK(grid_candidates(fwd) == grid_candidates(rev));
}

TEST_CASE("grid candidates: overlapping endpoints are kept") {
    SearchSpace s;
    s.points_per_interval = 2;
    s.intervals = {{1e-5, 1e-4}, {1e-4, 1e-3}};
    std::vector<double> c = grid_candidates(s);
    REQUIRE(c.size() == 4);
    CHECK(c[1] == 1e-4);
    CHECK(c[2] == 1e-4);
}

TEST_CASE("grid candidates: log spacing lands on decades") {
    SearchSpace s;
    s.log_spacing = true;
    s.points_per_interval = 5;
    s.intervals = {{1e-6, 1e-2}};
    std::vector<double> c = grid_candidates(s);
    REQUIRE(c.size() == 5);
    const double want[] = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    for (int i = 0; i < 5; ++i) CHECK(close_mixed(c[i], want[i], 1e-12));

    s.points_per_interval = 1;
    s.intervals = {{1e-4, 1e-2}};
    CHECK(close_mixed(grid_candidates(s)[0], 1e-3, 1e-15));
}

TEST_CASE("search space validation") {
    SearchSpace s;
    CHECK_THROWS_AS(grid_candidates(s), std::invalid_argument);  // no intervals

    s.intervals = {{1e-5, 1e-4}};
    s.points_per_interval = 0;
    CHECK_THROWS_AS(grid_candidates(s), std::invalid_argument);

    s.points_per_interval = 3;
    s.log_spacing = true;
    s.intervals = {{0.0, 1.0}};
    CHECK_THROWS_AS(grid_candidates(s), std::invalid_argument);
}

TEST_CASE("random candidates: bounds, count and determinism") {
    SearchSpace s = decades();
    s.mode = SearchMode::Random;
    s.seed = 42;
    std::vector<double> c = random_candidates(s);
    REQUIRE(c.size() == 250);
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto [lo, hi] = s.intervals[i / 50];
        CHECK(c[i] >= lo);
        CHECK(c[i] <= hi);
    }
    CHECK(random_candidates(s) == c);

    SearchSpace other = s;
    other.seed = 43;
    CHECK(random_candidates(other) != c);

    s.log_spacing = true;
    std::vector<double> lc = random_candidates(s);
    for (std::size_t i = 0; i < lc.size(); ++i) {
        auto [lo, hi] = s.intervals[i / 50];
        CHECK(lc[i] >= lo);
        CHECK(lc[i] <= hi);
    }

    CHECK(candidates(s) == random_candidates(s));
    s.mode = SearchMode::Grid;
    CHECK(candidates(s) == grid_candidates(s));
}

TEST_CASE("selection metric reads the last checkpoint and flags dead trials") {
    TrialRecord t;
    t.activation = ActivationKind::tanh();
    CHECK(selection_metric(t) == std::numeric_limits<double>::infinity());

    t.mae_at = {{10, 0.5}, {50, 0.2}, {20, 0.9}};
    CHECK(selection_metric(t) == 0.2);

    t.diverged = true;
    CHECK(selection_metric(t) == std::numeric_limits<double>::infinity());
}

TEST_CASE("degenerate search: one interval, one point, one activation") {
    SearchSpace s;
    s.intervals = {{1e-3, 1e-3}};
    s.points_per_interval = 1;

    SearchReport rep = run_search(s, tiny_base(), {ActivationKind::tanh()});
    REQUIRE(rep.trials.size() == 1);
    REQUIRE(rep.best == std::vector<int>{0});
    CHECK(rep.trials[0].learning_rate == 1e-3);
    CHECK_FALSE(rep.trials[0].diverged);
    CHECK(std::isfinite(selection_metric(rep.trials[0])));
}

TEST_CASE("search trains every pair exactly once, in candidate order") {
    SearchSpace s;
    s.intervals = {{1e-4, 1e-3}, {1e-3, 1e-2}};
    s.points_per_interval = 2;
    std::vector<ActivationKind> acts = {ActivationKind::tanh(), ActivationKind::sigmoid()};

    int count = 0;
    SearchOptions opt;
    opt.on_trial_done = [&](const TrialRecord&) { ++count; };
    TrainConfig base = tiny_base();
    SearchReport rep = run_search(s, base, acts, opt);

    CHECK(count == 8);
    REQUIRE(rep.candidates.size() == 4);
    REQUIRE(rep.trials.size() == 8);
    for (std::size_t i = 0; i < rep.trials.size(); ++i) {
        const TrialRecord& t = rep.trials[i];
        CHECK(t.activation_index == static_cast<int>(i / 4));
        CHECK(t.candidate_index == static_cast<int>(i % 4));
        CHECK(t.learning_rate == rep.candidates[i % 4]);
        CHECK(activation_name(t.activation) == activation_name(acts[i / 4]));
        CHECK(t.seed == derive_seed(base.seed, i / 4, i % 4));
    }

    // Effective checkpoints: declared ones within range plus the final epoch.
    CHECK(rep.checkpoints == std::vector<int>{10, 30});
    for (const TrialRecord& t : rep.trials) {
        REQUIRE(t.mae_at.size() == 2);
        CHECK(t.mae_at.count(10) == 1);
        CHECK(t.mae_at.count(30) == 1);
    }
}

TEST_CASE("checkpoints beyond the horizon are dropped and the end is added") {
    SearchSpace s;
    s.intervals = {{1e-3, 1e-3}};
    s.points_per_interval = 1;
    TrainConfig base = tiny_base();
    base.epochs_max = 20;
    base.mae_checkpoints = {5, 10, 500};

    SearchReport rep = run_search(s, base, {ActivationKind::tanh()});
    CHECK(rep.checkpoints == std::vector<int>{5, 10, 20});
    CHECK(rep.trials[0].mae_at.count(20) == 1);
}

TEST_CASE("best trial minimizes the metric with ties to the smaller rate") {
    SearchSpace s;
    s.intervals = {{1e-4, 1e-2}};
    s.points_per_interval = 4;
    std::vector<ActivationKind> acts = {ActivationKind::tanh(), ActivationKind::gelu()};
    SearchReport rep = run_search(s, tiny_base(), acts);

    for (std::size_t a = 0; a < acts.size(); ++a) {
        const TrialRecord& best = rep.best_for(static_cast<int>(a));
        CHECK(best.activation_index == static_cast<int>(a));
        for (std::size_t c = 0; c < rep.candidates.size(); ++c) {
            const TrialRecord& t = rep.trials[a * rep.candidates.size() + c];
            CHECK(selection_metric(best) <= selection_metric(t));
            if (selection_metric(t) == selection_metric(best))
                CHECK(best.learning_rate <= t.learning_rate);
        }
    }

    // Argmin is unchanged by a uniform positive rescaling of the metric.
    const std::size_t n = rep.candidates.size();
    for (std::size_t a = 0; a < acts.size(); ++a) {
        std::size_t plain = 0, scaled = 0;
        for (std::size_t c = 1; c < n; ++c) {
            auto metric = [&](std::size_t i) { return selection_metric(rep.trials[a * n + i]); };
            if (metric(c) < metric(plain)) plain = c;
            if (4.2 * metric(c) < 4.2 * metric(scaled)) scaled = c;
        }
        CHECK(plain == scaled);
    }
}

TEST_CASE("every trial is independently re-runnable") {
    SearchSpace s;
    s.intervals = {{1e-4, 1e-2}};
    s.points_per_interval = 2;
    TrainConfig base = tiny_base();
    SearchReport rep = run_search(s, base, {ActivationKind::elu()});

    for (const TrialRecord& t : rep.trials) {
        TrainReport tr = train(trial_config(base, rep.checkpoints, t.activation, t.learning_rate, t.seed));
        CHECK(tr.mae_at == t.mae_at);
        CHECK(tr.loss_history.back() == t.final_loss);
    }
}

TEST_CASE("scheduling does not change the report") {
    SearchSpace s;
    s.intervals = {{1e-4, 1e-3}, {1e-3, 1e-2}};
    s.points_per_interval = 2;
    std::vector<ActivationKind> acts = {ActivationKind::tanh(), ActivationKind::sigmoid()};
    TrainConfig base = tiny_base();

    SearchOptions serial, parallel;
    serial.jobs = 1;
    parallel.jobs = 3;
    SearchReport a = run_search(s, base, acts, serial);
    SearchReport b = run_search(s, base, acts, parallel);

    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) CHECK(same_trial(a.trials[i], b.trials[i]));
    CHECK(a.best == b.best);
    CHECK(a.candidates == b.candidates);
    CHECK(a.checkpoints == b.checkpoints);
}

TEST_CASE("a diverging trial is recorded, not fatal") {
    SearchSpace s;
    s.intervals = {{1e-4, 1e7}};
    s.points_per_interval = 2;  // {1e-4, 1e7}: the second blows up under plain descent
    TrainConfig base = tiny_base();
    base.spec.linear_output = true;
    base.optimizer = OptimizerKind::Sgd;
    base.epochs_max = 60;

    SearchReport rep = run_search(s, base, {ActivationKind::tanh()});
    REQUIRE(rep.trials.size() == 2);
    const TrialRecord& ok = rep.trials[0];
    const TrialRecord& dead = rep.trials[1];
    CHECK_FALSE(ok.diverged);
    CHECK(dead.diverged);
    CHECK(dead.mae_at.empty());
    CHECK(dead.final_loss == std::numeric_limits<double>::infinity());
    CHECK(selection_metric(dead) == std::numeric_limits<double>::infinity());
    CHECK(rep.best == std::vector<int>{0});
}

TEST_CASE("nonpositive candidates are rejected up front") {
    SearchSpace s;
    s.intervals = {{0.0, 1e-3}};
    s.points_per_interval = 2;  // includes 0
    CHECK_THROWS_AS(run_search(s, tiny_base(), {ActivationKind::tanh()}), std::invalid_argument);

    CHECK_THROWS_AS(run_search(SearchSpace{{{1e-4, 1e-3}}}, tiny_base(), {}), std::invalid_argument);
}

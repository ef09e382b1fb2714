#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "pinnlab/training.hpp"
#include "support/helpers.hpp"

using namespace pinnlab;
using testsupport::close_mixed;

namespace {

LayerSpec net(std::vector<int> sizes, ActivationKind kind, bool linear_out = false) {
    LayerSpec s;
    s.sizes = std::move(sizes);
    s.activations.assign(s.sizes.size() - 1, kind);
    s.linear_output = linear_out;
    return s;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("batch sampling: count, range and determinism") {
    std::mt19937_64 rng(31);
    std::vector<Point> b = sample_batch(rng, 50, 0.0, 0.0);
    REQUIRE(b.size() == 50);
    for (const Point& pt : b) {
        CHECK(pt.x > 0.0);
        CHECK(pt.x < 1.0);
        CHECK(pt.y > 0.0);
        CHECK(pt.y < 1.0);
    }

    std::mt19937_64 r1(31), r2(31);
    std::vector<Point> a1 = sample_batch(r1, 50, 0.0, 0.0);
    std::vector<Point> a2 = sample_batch(r2, 50, 0.0, 0.0);
    for (std::size_t i = 0; i < a1.size(); ++i) {
        CHECK(a1[i].x == a2[i].x);
        CHECK(a1[i].y == a2[i].y);
    }
}

TEST_CASE("batch sampling: zero noise ignores the jitter scale") {
    std::mt19937_64 r1(8), r2(8);
    std::vector<Point> plain = sample_batch(r1, 200, 0.0, 0.0);
    std::vector<Point> scaled = sample_batch(r2, 200, 0.0, 7.5);
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(plain[i].x == scaled[i].x);
        CHECK(plain[i].y == scaled[i].y);
    }
}

TEST_CASE("batch sampling: jitter stays clamped to the closed square") {
    std::mt19937_64 rng(11);
    std::vector<Point> b = sample_batch(rng, 300, 1.0, 10.0);
    bool hit_edge = false;
    for (const Point& pt : b) {
        CHECK(pt.x >= 0.0);
        CHECK(pt.x <= 1.0);
        CHECK(pt.y >= 0.0);
        CHECK(pt.y <= 1.0);
        if (pt.x == 0.0 || pt.x == 1.0 || pt.y == 0.0 || pt.y == 1.0) hit_edge = true;
    }
    CHECK(hit_edge);  // stddev 10 pushes most draws out of the square
}

TEST_CASE("batch loss semantics") {
    LayerSpec spec = net({2, 30, 1}, ActivationKind::tanh());
    Params zero;
    zero.values.assign(param_count(spec), 0.0);

    std::vector<Point> one = {{0.5, 0.5}};
    CHECK(close_mixed(batch_loss(spec, zero, one), 17.786472040578341, 1e-13));

    // Hand-coded exact surface: residual loss vanishes to solver precision,
    // including next to the boundary.
    auto exact_field = [](const HyperDual2& x, const HyperDual2& y) {
        return y * y * sin(HyperDual2(kPi) * x);
    };
    std::vector<Point> near_edge = {{0.01, 0.01}, {0.99, 0.01}, {0.01, 0.99}, {0.99, 0.99}, {0.5, 0.999}};
    double acc = 0.0;
    for (Point pt : near_edge) {
        double r = residual_at(exact_field, pt).residual;
        acc += r * r;
    }
    CHECK(acc / near_edge.size() <= 1e-18);
}

TEST_CASE("plain gradient step") {
    std::vector<double> p = {1.0, 2.0};
    std::vector<double> g = {0.5, -1.0};
    sgd_step(p, g, 0.1);
    CHECK(close_mixed(p[0], 0.95, 1e-15));
    CHECK(close_mixed(p[1], 2.1, 1e-15));

    std::vector<double> q = {0.0, 0.0, 0.0};
    std::vector<double> ones = {1.0, 1.0, 1.0};
    sgd_step(q, ones, 0.1);
    for (double qi : q) CHECK(qi == -0.1);
    sgd_step(q, ones, 0.1);
    for (double qi : q) CHECK(close_mixed(qi, -0.2, 1e-15));

    std::vector<double> r = {3.0};
    std::vector<double> zerog = {0.0};
    sgd_step(r, zerog, 0.5);
    CHECK(r[0] == 3.0);
}

TEST_CASE("adam first step recurrences") {
    AdamState st(1);
    std::vector<double> p = {0.1};
    std::vector<double> g = {2.0};
    adam_step(st, p, g, 1e-3);
    CHECK(st.t == 1);
    CHECK(close_mixed(st.m[0], 0.2, 1e-15));
    CHECK(close_mixed(st.v[0], 0.004, 1e-15));
    // Bias-corrected m̂=2, v̂=4: update is lr·2/(2+eps).
    CHECK(close_mixed(p[0], 0.1 - 9.99999995e-4, 1e-13));
}

TEST_CASE("adam first step magnitude is close to the learning rate") {
    std::mt19937_64 rng(3);
    const double lr = 1e-3;
    for (int i = 0; i < 200; ++i) {
        double mag = std::exp(uniform_in(rng, std::log(1e-4), std::log(1e3)));
        double g0 = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * mag;
        AdamState st(1);
        std::vector<double> p = {0.0};
        std::vector<double> g = {g0};
        adam_step(st, p, g, lr);
        CHECK(p[0] * g0 < 0.0);  // moves against the gradient
        CHECK(std::abs(p[0]) <= lr);
        CHECK(std::abs(p[0]) >= lr * (1.0 - 1.1e-4));  // eps dampening at |g| >= 1e-4
    }
}

TEST_CASE("adam never moves under a zero gradient") {
    AdamState st(3);
    std::vector<double> p = {1.0, -2.0, 0.5};
    std::vector<double> before = p;
    std::vector<double> g = {0.0, 0.0, 0.0};
    for (int i = 0; i < 10; ++i) adam_step(st, p, g, 0.1);
    CHECK(p == before);
    CHECK(st.t == 10);
}

TEST_CASE("zero network validation error equals the bare-lift error") {
    LayerSpec spec = net({2, 30, 1}, ActivationKind::tanh());
    Params zero;
    zero.values.assign(param_count(spec), 0.0);
    CHECK(close_mixed(validation_mae(spec, zero, 100), 0.1061129642, 1e-9));

    Params p = init_params(spec, 4);
    CHECK(validation_mae(spec, p, 50) > 0.0);
}

TEST_CASE("training run shape and checkpoint bookkeeping") {
    TrainConfig cfg;
    cfg.spec = net({2, 8, 1}, ActivationKind::tanh());
    cfg.seed = 5;
    cfg.learning_rate = 1e-3;
    cfg.epochs_max = 30;
    cfg.batch_size = 10;
    cfg.mae_checkpoints = {10, 50};  // 50 lies beyond the run and must not appear
    cfg.validation_grid_n = 20;

    TrainReport rep = train(cfg);
    REQUIRE(rep.loss_history.size() == 30);
    CHECK(rep.stop_reason == StopReason::MaxEpochs);
    for (double l : rep.loss_history) CHECK(std::isfinite(l));
    REQUIRE(rep.mae_at.size() == 1);
    REQUIRE(rep.mae_at.count(10) == 1);
    CHECK(rep.mae_at.at(10) > 0.0);
    CHECK(rep.final_params.values.size() == static_cast<std::size_t>(param_count(cfg.spec)));
    CHECK(rep.wall_seconds >= 0.0);
}

TEST_CASE("single epoch run") {
    TrainConfig cfg;
    cfg.spec = net({2, 4, 1}, ActivationKind::sigmoid());
    cfg.epochs_max = 1;
    cfg.batch_size = 5;
    cfg.mae_checkpoints = {};
    TrainReport rep = train(cfg);
    CHECK(rep.loss_history.size() == 1);
    CHECK(rep.stop_reason == StopReason::MaxEpochs);
}

TEST_CASE("huge tolerance stops immediately with untouched parameters") {
    TrainConfig cfg;
    cfg.spec = net({2, 8, 1}, ActivationKind::tanh());
    cfg.seed = 2;
    cfg.epochs_max = 100;
    cfg.batch_size = 5;
    cfg.tolerance = 1e9;
    cfg.mae_checkpoints = {1};
    cfg.validation_grid_n = 10;

    TrainReport rep = train(cfg);
    CHECK(rep.stop_reason == StopReason::ToleranceReached);
    REQUIRE(rep.loss_history.size() == 1);
    CHECK(rep.mae_at.count(1) == 1);
    CHECK(rep.final_params.values == init_params(cfg.spec, derive_seed(cfg.seed, 0)).values);
}

TEST_CASE("training is bit-reproducible") {
    TrainConfig cfg;
    cfg.spec = net({2, 6, 1}, ActivationKind::gelu());
    cfg.seed = 77;
    cfg.epochs_max = 40;
    cfg.batch_size = 8;
    cfg.noise = 0.3;
    cfg.stddev = 0.05;
    cfg.mae_checkpoints = {20, 40};
    cfg.validation_grid_n = 15;

    TrainReport a = train(cfg);
    TrainReport b = train(cfg);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.final_params.values == b.final_params.values);
    CHECK(a.mae_at == b.mae_at);
    CHECK(a.stop_reason == b.stop_reason);

    cfg.seed = 78;
    TrainReport c = train(cfg);
    CHECK(c.loss_history.front() != a.loss_history.front());
}

TEST_CASE("gradient stays consistent with finite differences along a run") {
    TrainConfig cfg;
    cfg.spec = net({2, 6, 1}, ActivationKind::tanh());
    cfg.seed = 9;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 5;

    Params p = init_params(cfg.spec, derive_seed(cfg.seed, 0));
    std::mt19937_64 batch_rng(derive_seed(cfg.seed, 1));
    std::mt19937_64 pick(55);
    std::vector<double> grad(p.values.size());
    GradWorkspace ws;
    AdamState adam(p.values.size());

    for (int epoch = 1; epoch <= 40; ++epoch) {
        std::vector<Point> batch = sample_batch(batch_rng, cfg.batch_size, 0.0, 0.0);
        loss_and_gradient(cfg.spec, p, batch, grad, ws);

        if (epoch % 8 == 3) {
            for (int probe = 0; probe < 6; ++probe) {
                std::size_t i = pick() % p.values.size();
                if (std::abs(grad[i]) <= 1e-8) continue;
                std::vector<long double> flat(p.values.begin(), p.values.end());
                const long double h = 1e-5L * std::max(1.0L, std::abs(flat[i]));
                auto loss_at = [&](long double step) {
                    flat[i] += step;
                    long double acc = 0.0L;
                    for (const Point& pt : batch) {
                        long double r = residual_value<long double>(cfg.spec, std::span<const long double>(flat), pt);
                        acc += r * r;
                    }
                    flat[i] -= step;
                    return acc / static_cast<long double>(batch.size());
                };
                double fd = static_cast<double>((loss_at(h) - loss_at(-h)) / (2.0L * h));
                INFO("epoch " << epoch << " component " << i);
                REQUIRE(std::abs(fd - grad[i]) <= 1e-4 * std::abs(grad[i]) + 1e-10);
            }
        }
        adam_step(adam, p.values, grad, cfg.learning_rate, cfg.adam);
    }
}

TEST_CASE("loss drops by an order of magnitude across seeds") {
    std::vector<double> first, last;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        TrainConfig cfg;
        cfg.spec = net({2, 30, 1}, ActivationKind::tanh(), true);
        cfg.seed = seed;
        cfg.learning_rate = 3e-4;
        cfg.epochs_max = 2000;
        cfg.batch_size = 50;
        cfg.mae_checkpoints = {};
        TrainReport rep = train(cfg);
        first.push_back(rep.loss_history.front());
        last.push_back(rep.loss_history.back());
    }
    double m_first = median(first), m_last = median(last);
    INFO("median initial " << m_first << ", median final " << m_last);
    CHECK(m_last * 10.0 < m_first);
}

TEST_CASE("runaway step size raises a divergence error") {
    TrainConfig cfg;
    cfg.spec = net({2, 8, 1}, ActivationKind::tanh(), true);
    cfg.seed = 1;
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.learning_rate = 1e6;
    cfg.epochs_max = 200;
    cfg.batch_size = 10;
    cfg.mae_checkpoints = {};

    try {
        train(cfg);
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(e.epoch >= 1);
        CHECK(e.epoch <= 200);
        CHECK(std::isfinite(e.last_finite_loss));
        CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }
}

TEST_CASE("config validation rejects out-of-range settings") {
    TrainConfig good;
    good.spec = net({2, 4, 1}, ActivationKind::tanh());
    CHECK_NOTHROW(good.validate());

    TrainConfig c = good;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = good;
    c.epochs_max = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = good;
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = good;
    c.noise = -0.1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = good;
    c.noise = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = good;
    c.stddev = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = good;
    c.mae_checkpoints = {0};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ltsf/error.hpp"
#include "ltsf/evaluation.hpp"
#include "ltsf/trainer.hpp"
#include "oracles.hpp"

using namespace ltsf;

namespace {

Matrix sine(std::size_t n, double period, std::size_t channels = 1) {
    Matrix m(n, channels);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < channels; ++c)
            m(r, c) = std::sin(2.0 * std::numbers::pi * static_cast<double>(r) / period + static_cast<double>(c));
    return m;
}

ModelSpec spec_for(ModelKind kind, std::size_t L, std::size_t T, std::size_t N) {
    ModelSpec s;
    s.kind = kind;
    s.input_len = L;
    s.horizon = T;
    s.channels = N;
    s.ma_kernel = 5;
    return s;
}

}  // namespace

TEST_CASE("mse loss examples") {
    const Matrix p{{1, 1}};
    const LossResult same = mse_loss(p, p);
    CHECK(same.value == 0.0);
    CHECK(same.grad == Matrix(1, 2));
    const LossResult l = mse_loss(p, Matrix(1, 2));
    CHECK(l.value == 1.0);
    CHECK(l.grad == Matrix{{1, 1}});
    CHECK_THROWS_AS(mse_loss(p, Matrix(2, 1)), ShapeError);

    Rng rng(3);
    const Matrix x = init_uniform(rng, 3, 4, 2.0);
    const Matrix t = init_uniform(rng, 3, 4, 2.0);
    const Matrix fd = finite_diff_gradient([&](const Matrix& m) { return mse_loss(m, t).value; }, x, 1e-5);
    CHECK(max_abs_diff(mse_loss(x, t).grad, fd) < 1e-8);
}

TEST_CASE("mae examples") {
    CHECK(mae_metric(Matrix{{3, 4}}, Matrix{{3, 4}}) == 0.0);
    CHECK(mae_metric(Matrix{{1, 1}}, Matrix(1, 2)) == 1.0);
    CHECK(mae_metric(Matrix{{2, -2}}, Matrix(1, 2)) == 2.0);
}

TEST_CASE("adam steps") {
    TrainConfig cfg;
    Parameters p;
    p.add("w", Matrix{{1.0}});
    Parameters g;
    g.add("w", Matrix{{0.0}});
    AdamState opt = make_adam_state(p);
    adam_step(p, g, opt, cfg);
    CHECK(p.at("w") == Matrix{{1.0}});
    CHECK(opt.t == 1);

    Parameters q;
    q.add("w", Matrix{{1.0}});
    g.at("w") = Matrix{{0.5}};
    AdamState fresh = make_adam_state(q);
    adam_step(q, g, fresh, cfg);
    CHECK(q.at("w")(0, 0) - 1.0 == doctest::Approx(-0.001).epsilon(1e-6));

    Parameters a = q, b = q;
    AdamState oa = fresh, ob = fresh;
    adam_step(a, g, oa, cfg);
    adam_step(b, g, ob, cfg);
    CHECK(a == b);

    g.at("w") = Matrix{{std::nan("")}};
    try {
        adam_step(a, g, oa, cfg);
        FAIL("expected numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("'w'") != std::string::npos);
    }
    CHECK(a == b);
}

TEST_CASE("train config validation and profiles") {
    TrainConfig c;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.beta2 = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(learning_rate_for_profile("default") == 1e-3);
    CHECK(learning_rate_for_profile("etth1") == 1e-2);
    CHECK_THROWS_AS(learning_rate_for_profile("fast"), ConfigError);
}

TEST_CASE("linear model overfits a noiseless sine") {
    const ModelSpec s = spec_for(ModelKind::linear, 24, 12, 1);
    const WindowSet train = make_windows(sine(1200, 17.0), 24, 12);
    const WindowSet val = make_windows(sine(400, 17.0), 24, 12);
    TrainConfig cfg;
    const FitResult r = fit(s, init_model(s, 1), train, val, cfg);
    CHECK(r.report.train_loss.size() <= 10);
    CHECK(r.report.train_loss.back() < 1e-3);
}

TEST_CASE("early stopping when validation rises") {
    const ModelSpec s = spec_for(ModelKind::linear, 4, 2, 1);
    const WindowSet train = make_windows(Matrix{{0}, {0}, {0}, {0}, {1}, {1}}, 4, 2);
    const WindowSet val = make_windows(Matrix{{0}, {0}, {0}, {0}, {-1}, {-1}}, 4, 2);
    TrainConfig cfg;
    cfg.patience = 1;
    cfg.learning_rate = 0.01;
    const FitResult r = fit(s, init_model(s, 3), train, val, cfg);
    CHECK(r.report.stopped_early);
    CHECK(r.report.best_epoch == 1);
    CHECK(r.report.val_loss.size() == 2);
}

TEST_CASE("best snapshot is returned") {
    const ModelSpec s = spec_for(ModelKind::rs_glinear, 16, 4, 2);
    const WindowSet train = make_windows(sine(300, 9.0, 2), 16, 4);
    const WindowSet val = make_windows(sine(120, 11.0, 2), 16, 4);
    TrainConfig cfg;
    cfg.max_epochs = 6;
    const FitResult r = fit(s, init_model(s, 5), train, val, cfg);
    const double best = r.report.val_loss[r.report.best_epoch - 1];
    for (double v : r.report.val_loss) CHECK(best <= v);
    CHECK(evaluate(s, r.best, val).mse == best);
    CHECK(r.best.mode == Mode::eval);
}

TEST_CASE("training is deterministic for every kind") {
    for (ModelKind kind : all_model_kinds()) {
        CAPTURE(to_string(kind));
        const ModelSpec s = spec_for(kind, 12, 4, 2);
        const WindowSet train = make_windows(sine(150, 7.0, 2), 12, 4);
        const WindowSet val = make_windows(sine(60, 7.0, 2), 12, 4);
        TrainConfig cfg;
        cfg.max_epochs = 3;
        const FitResult a = fit(s, init_model(s, 9), train, val, cfg);
        const FitResult b = fit(s, init_model(s, 9), train, val, cfg);
        CHECK(a.report.train_loss == b.report.train_loss);
        CHECK(a.report.val_loss == b.report.val_loss);
        CHECK(a.best.params == b.best.params);
    }
}

TEST_CASE("fit preconditions") {
    const ModelSpec s = spec_for(ModelKind::linear, 4, 2, 1);
    const WindowSet w = make_windows(sine(20, 5.0), 4, 2);
    CHECK_THROWS_AS(fit(s, init_model(s, 1), WindowSet{}, w, TrainConfig{}), ConfigError);
    CHECK_THROWS_AS(fit(s, init_model(s, 1), w, WindowSet{}, TrainConfig{}), ConfigError);
    const WindowSet wrong = make_windows(sine(20, 5.0), 5, 2);
    CHECK_THROWS_AS(fit(s, init_model(s, 1), wrong, w, TrainConfig{}), ShapeError);
}

TEST_CASE("least-squares oracle recovers an exact affine map") {
    std::vector<double> series;
    Rng rng(4);
    for (int i = 0; i < 6; ++i) series.push_back(rng.uniform(-1, 1));
    for (int i = 6; i < 200; ++i) series.push_back(0.5 * series[i - 1] - 0.3 * series[i - 3] + 0.1);
    const oracle::AffineMap map = oracle::least_squares_windows(series, 6, 2);
    CHECK(oracle::windows_mse(map, series, 6, 2) < 1e-20);
}

#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ltsf/model.hpp"
#include "ltsf/numeric.hpp"
#include "ltsf/trainer.hpp"

namespace oracle {

// max |exact - tanh form| of GeLU over [-5, 5] with step 1e-3, from a
// 40-digit mpmath sweep; attained at x = ±2.699 (4.73235517952e-4).
inline constexpr double kGeluTanhMaxDeviation = 4.733e-4;

// Phi(1) from the same high-precision sweep.
inline constexpr double kGeluAtOne = 0.841344746068543;

// Solves A x = b by Gaussian elimination with partial pivoting (A is n x n).
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

struct AffineMap {
    std::vector<std::vector<double>> w;  // T x L
    std::vector<double> b;               // T
};

// Least-squares affine map from the L values before each origin to the T
// values after it, over every stride-1 window of a univariate series.
inline AffineMap least_squares_windows(const std::vector<double>& series, std::size_t L, std::size_t T) {
    const std::size_t n = L + 1;
    std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> rhs(T, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k + L + T <= series.size(); ++k) {
        std::vector<double> x(series.begin() + static_cast<std::ptrdiff_t>(k),
                              series.begin() + static_cast<std::ptrdiff_t>(k + L));
        x.push_back(1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) gram[i][j] += x[i] * x[j];
        }
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t i = 0; i < n; ++i) rhs[t][i] += series[k + L + t] * x[i];
        }
    }
    AffineMap map;
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> coef = solve(gram, rhs[t]);
        map.b.push_back(coef.back());
        coef.pop_back();
        map.w.push_back(std::move(coef));
    }
    return map;
}

inline double windows_mse(const AffineMap& map, const std::vector<double>& series, std::size_t L, std::size_t T) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k + L + T <= series.size(); ++k) {
        for (std::size_t t = 0; t < T; ++t) {
            double pred = map.b[t];
            for (std::size_t i = 0; i < L; ++i) pred += map.w[t][i] * series[k + i];
            const double d = pred - series[k + L + t];
            acc += d * d;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

// Series of consecutive blocks: L uniform draws followed by T values that are
// a fixed random linear map of those draws. Only block-aligned windows are
// exactly linear, so least squares over all windows has a nonzero floor.
inline std::vector<double> block_linear_series(std::size_t blocks, std::size_t L, std::size_t T, std::uint64_t seed) {
    ltsf::Rng rng(seed);
    const ltsf::Matrix w = ltsf::init_uniform(rng, T, L, 1.0 / std::sqrt(static_cast<double>(L)));
    std::vector<double> out;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<double> x(L);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        out.insert(out.end(), x.begin(), x.end());
        for (std::size_t t = 0; t < T; ++t) {
            double y = 0.0;
            for (std::size_t i = 0; i < L; ++i) y += w(t, i) * x[i];
            out.push_back(y);
        }
    }
    return out;
}

struct GradientCheck {
    double worst = 0.0;
    std::string worst_parameter;
    bool input_ok = true;
};

// Compares every analytic parameter gradient of forward + MSE against central
// differences. Train mode with dropout: every probe replays the same mask
// because the state copy carries the same dropout stream position.
inline GradientCheck check_gradients(const ltsf::ModelSpec& spec, std::uint64_t seed, std::size_t batch = 3) {
    ltsf::ModelState state = ltsf::init_model(spec, seed);
    ltsf::Rng rng(seed + 101);
    for (std::size_t i = 0; i < state.params.size(); ++i) {
        ltsf::Matrix& p = state.params.value(i);
        if (state.params.name(i) == "alpha") {
            for (double& v : p.data()) v = rng.uniform(0.5, 1.5);
        } else if (state.params.name(i) == "beta") {
            for (double& v : p.data()) v = rng.uniform(-0.5, 0.5);
        } else if (state.params.name(i).starts_with("b")) {
            for (double& v : p.data()) v = rng.uniform(-0.3, 0.3);
        }
    }
    const ltsf::Matrix x = ltsf::init_uniform(rng, spec.input_len, batch * spec.channels, 2.0);
    const ltsf::Matrix target = ltsf::init_uniform(rng, spec.horizon, batch * spec.channels, 1.0);

    ltsf::ModelState run_state = state;
    const ltsf::ForwardResult fwd = ltsf::forward(spec, run_state, x);
    const ltsf::LossResult loss = ltsf::mse_loss(fwd.prediction, target);
    const ltsf::Gradients grads = ltsf::backward(spec, run_state, fwd.cache, loss.grad);

    GradientCheck out;
    for (std::size_t i = 0; i < state.params.size(); ++i) {
        const auto f = [&](const ltsf::Matrix& value) {
            ltsf::ModelState probe = state;
            probe.params.value(i) = value;
            return ltsf::mse_loss(ltsf::forward(spec, probe, x).prediction, target).value;
        };
        const ltsf::Matrix numeric = ltsf::finite_diff_gradient(f, state.params.value(i), 1e-5);
        const double err = ltsf::relative_error(grads.params.value(i), numeric);
        if (err >= out.worst) {
            out.worst = err;
            out.worst_parameter = state.params.name(i);
        }
    }
    const auto fx = [&](const ltsf::Matrix& value) {
        ltsf::ModelState probe = state;
        return ltsf::mse_loss(ltsf::forward(spec, probe, value).prediction, target).value;
    };
    out.input_ok = ltsf::relative_error(grads.input, ltsf::finite_diff_gradient(fx, x, 1e-5)) < 1e-4;
    return out;
}

}  // namespace oracle

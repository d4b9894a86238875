#include "ltsf/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ltsf/error.hpp"

namespace ltsf {

Matrix init_uniform(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
    if (!(bound > 0.0)) throw ConfigError("init_uniform bound must be positive");
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
    return m;
}

Matrix finite_diff_gradient(const ScalarFunction& f, const Matrix& x, double h) {
    if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
    Matrix grad(x.rows(), x.cols());
    Matrix probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double original = probe.data()[i];
        probe.data()[i] = original + h;
        const double up = f(probe);
        probe.data()[i] = original - h;
        const double down = f(probe);
        probe.data()[i] = original;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("non-finite function value while probing entry " + std::to_string(i));
        }
        grad.data()[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
    require_same_shape(analytic, numeric, "relative_error");
    double scale = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        scale = std::max({scale, std::abs(analytic.data()[i]), std::abs(numeric.data()[i])});
    }
    if (scale == 0.0) return 0.0;
    return max_abs_diff(analytic, numeric) / std::max(scale, 1e-8);
}

}  // namespace ltsf

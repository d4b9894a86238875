#include "ltsf/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ltsf/error.hpp"

namespace ltsf {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

std::size_t channel_count(const Matrix& alpha, const Matrix& beta, const Matrix& x, const char* context) {
    if (alpha.cols() != 1 || beta.cols() != 1 || alpha.rows() != beta.rows() || alpha.rows() == 0) {
        throw ShapeError(std::string(context) + ": affine parameters must be matching column vectors, got " +
                         alpha.shape_string() + " and " + beta.shape_string());
    }
    if (x.cols() % alpha.rows() != 0) {
        throw ShapeError(std::string(context) + ": " + std::to_string(x.cols()) + " columns for " +
                         std::to_string(alpha.rows()) + " channels");
    }
    return alpha.rows();
}

}  // namespace

double gelu(double x, GeluVariant variant) {
    if (variant == GeluVariant::exact) return 0.5 * x * std::erfc(-x * kInvSqrt2);
    const double u = kSqrt2OverPi * (x + kGeluTanhCoefficient * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x, GeluVariant variant) {
    if (variant == GeluVariant::exact) {
        const double cdf = 0.5 * std::erfc(-x * kInvSqrt2);
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return cdf + x * pdf;
    }
    const double u = kSqrt2OverPi * (x + kGeluTanhCoefficient * x * x * x);
    const double th = std::tanh(u);
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluTanhCoefficient * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

Matrix gelu(const Matrix& x, GeluVariant variant) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = gelu(x.data()[i], variant);
    return y;
}

Matrix gelu_backward(const Matrix& x, const Matrix& upstream, GeluVariant variant) {
    require_same_shape(x, upstream, "gelu_backward");
    Matrix g(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) g.data()[i] = upstream.data()[i] * gelu_derivative(x.data()[i], variant);
    return g;
}

DropoutResult dropout(const Matrix& x, double rate, Mode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (mode == Mode::eval || rate == 0.0) return {x, Matrix()};
    const double keep_scale = 1.0 / (1.0 - rate);
    DropoutResult out{Matrix(x.rows(), x.cols()), Matrix(x.rows(), x.cols())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = rng.uniform01() < rate ? 0.0 : keep_scale;
        out.mask.data()[i] = m;
        out.output.data()[i] = x.data()[i] * m;
    }
    return out;
}

Matrix dropout_backward(const Matrix& upstream, const Matrix& mask) {
    if (mask.empty()) return upstream;
    return elementwise(upstream, mask, ElementOp::mul);
}

RevInNormalized revin_normalize(const Matrix& x, const Matrix& alpha, const Matrix& beta, double epsilon) {
    const std::size_t channels = channel_count(alpha, beta, x, "revin_normalize");
    for (double a : alpha.data()) {
        if (a == 0.0) throw NumericError("degenerate RevIN affine: alpha has a zero entry");
    }
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    RevInNormalized out{Matrix(rows, cols), RevInStats{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0), epsilon}};
    auto& mu = out.stats.mu;
    auto& sigma = out.stats.sigma;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) mu[c] += x(r, c);
    for (double& m : mu) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = x(r, c) - mu[c];
            sigma[c] += d * d;
        }
    }
    for (double& s : sigma) s = std::sqrt(s / static_cast<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t ch = c % channels;
            const double xn = (x(r, c) - mu[c]) / (sigma[c] + epsilon);
            out.output(r, c) = (xn - beta(ch, 0)) / alpha(ch, 0);
        }
    }
    return out;
}

Matrix revin_denormalize(const Matrix& yhat, const RevInStats& stats, const Matrix& alpha, const Matrix& beta) {
    const std::size_t channels = channel_count(alpha, beta, yhat, "revin_denormalize");
    if (stats.mu.size() != yhat.cols() || stats.sigma.size() != yhat.cols()) {
        throw ShapeError("revin_denormalize: statistics for " + std::to_string(stats.mu.size()) + " columns, output has " +
                         std::to_string(yhat.cols()));
    }
    Matrix out(yhat.rows(), yhat.cols());
    for (std::size_t r = 0; r < yhat.rows(); ++r) {
        for (std::size_t c = 0; c < yhat.cols(); ++c) {
            const std::size_t ch = c % channels;
            const double affine = alpha(ch, 0) * yhat(r, c) + beta(ch, 0);
            out(r, c) = affine * (stats.sigma[c] + stats.epsilon) + stats.mu[c];
        }
    }
    return out;
}

RevInDenormGrad revin_denormalize_backward(const Matrix& upstream, const Matrix& yhat, const RevInStats& stats,
                                           const Matrix& alpha, const Matrix& beta) {
    require_same_shape(upstream, yhat, "revin_denormalize_backward");
    const std::size_t channels = channel_count(alpha, beta, yhat, "revin_denormalize_backward");
    const std::size_t cols = yhat.cols();
    RevInDenormGrad g{Matrix(yhat.rows(), cols), Matrix(channels, 1), Matrix(channels, 1),
                      std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
    for (std::size_t r = 0; r < yhat.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t ch = c % channels;
            const double s = stats.sigma[c] + stats.epsilon;
            const double go = upstream(r, c);
            g.yhat(r, c) = go * s * alpha(ch, 0);
            g.alpha(ch, 0) += go * s * yhat(r, c);
            g.beta(ch, 0) += go * s;
            g.mu[c] += go;
            g.scale[c] += go * (alpha(ch, 0) * yhat(r, c) + beta(ch, 0));
        }
    }
    return g;
}

RevInNormGrad revin_normalize_backward(const Matrix& upstream, const Matrix& input, const Matrix& normalized,
                                       const RevInStats& stats, const Matrix& alpha, const Matrix& beta,
                                       const std::vector<double>& mu_grad, const std::vector<double>& scale_grad) {
    require_same_shape(upstream, input, "revin_normalize_backward");
    const std::size_t channels = channel_count(alpha, beta, input, "revin_normalize_backward");
    const std::size_t rows = input.rows();
    const std::size_t cols = input.cols();
    const auto n = static_cast<double>(rows);
    RevInNormGrad g{Matrix(rows, cols), Matrix(channels, 1), Matrix(channels, 1)};

    // dL/dx' per entry, then reduce to dL/dmu and dL/dsigma per column.
    Matrix g_prime(rows, cols);
    std::vector<double> d_mu(mu_grad);
    std::vector<double> d_sigma(scale_grad);
    d_mu.resize(cols, 0.0);
    d_sigma.resize(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t ch = c % channels;
            const double a = alpha(ch, 0);
            const double g2 = upstream(r, c);
            g.beta(ch, 0) -= g2 / a;
            g.alpha(ch, 0) -= g2 * normalized(r, c) / a;
            const double gp = g2 / a;
            g_prime(r, c) = gp;
            const double s = stats.sigma[c] + stats.epsilon;
            d_mu[c] -= gp / s;
            d_sigma[c] -= gp * (input(r, c) - stats.mu[c]) / (s * s);
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double s = stats.sigma[c] + stats.epsilon;
            const double centered = input(r, c) - stats.mu[c];
            double dx = g_prime(r, c) / s + d_mu[c] / n;
            if (stats.sigma[c] > 0.0) dx += d_sigma[c] * centered / (n * stats.sigma[c]);
            g.input(r, c) = dx;
        }
    }
    return g;
}

Matrix moving_average(const Matrix& x, std::size_t kernel) {
    if (kernel == 0 || kernel % 2 == 0) throw ConfigError("moving average kernel must be odd and positive");
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto last = static_cast<std::ptrdiff_t>(x.rows()) - 1;
    const auto k = static_cast<double>(kernel);
    Matrix trend(x.rows(), x.cols());
    for (std::ptrdiff_t r = 0; r <= last; ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            // Summing offsets from the centre keeps constant and linear runs exact.
            const double centre = x(static_cast<std::size_t>(r), c);
            double acc = 0.0;
            for (std::ptrdiff_t d = -half; d <= half; ++d) {
                const auto src = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r + d, 0, last));
                acc += x(src, c) - centre;
            }
            trend(static_cast<std::size_t>(r), c) = centre + acc / k;
        }
    }
    return trend;
}

Matrix moving_average_backward(const Matrix& upstream, std::size_t kernel) {
    if (kernel == 0 || kernel % 2 == 0) throw ConfigError("moving average kernel must be odd and positive");
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const auto last = static_cast<std::ptrdiff_t>(upstream.rows()) - 1;
    const double inv_k = 1.0 / static_cast<double>(kernel);
    Matrix g(upstream.rows(), upstream.cols());
    for (std::ptrdiff_t r = 0; r <= last; ++r) {
        for (std::ptrdiff_t d = -half; d <= half; ++d) {
            const auto src = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r + d, 0, last));
            const auto in = upstream.row(static_cast<std::size_t>(r));
            auto out = g.row(src);
            for (std::size_t c = 0; c < upstream.cols(); ++c) out[c] += in[c] * inv_k;
        }
    }
    return g;
}

Decomposition decompose(const Matrix& x, std::size_t kernel) {
    Decomposition d{Matrix(), moving_average(x, kernel)};
    d.seasonal = elementwise(x, d.trend, ElementOp::sub);
    // Re-deriving the trend from the rounded seasonal part makes seasonal +
    // trend == x exact, except where both parts dwarf x and cancel.
    d.trend = elementwise(x, d.seasonal, ElementOp::sub);
    return d;
}

}  // namespace ltsf

#pragma once

#include <cstddef>
#include <vector>

#include "ltsf/matrix.hpp"
#include "ltsf/rng.hpp"

namespace ltsf {

enum class GeluVariant { exact, tanh };
enum class Mode { train, eval };

// Coefficient of the cubic term in the tanh approximation.
inline constexpr double kGeluTanhCoefficient = 0.044715;

double gelu(double x, GeluVariant variant = GeluVariant::exact);
double gelu_derivative(double x, GeluVariant variant = GeluVariant::exact);

Matrix gelu(const Matrix& x, GeluVariant variant = GeluVariant::exact);
// upstream ⊙ GeLU'(x)
Matrix gelu_backward(const Matrix& x, const Matrix& upstream, GeluVariant variant = GeluVariant::exact);

struct DropoutResult {
    Matrix output;
    // Per-entry multiplier (0 or 1/(1-rate)); empty when dropout was the identity.
    Matrix mask;
};

// Inverted dropout. Eval mode and rate 0 are the identity and draw nothing.
DropoutResult dropout(const Matrix& x, double rate, Mode mode, Rng& rng);
Matrix dropout_backward(const Matrix& upstream, const Matrix& mask);

/// Reversible instance normalization.
///
/// Statistics are taken per column over the time axis (rows). Columns map to
/// channels as col % channels, so one call normalizes a whole packed batch.
struct RevInStats {
    std::vector<double> mu;     // per column
    std::vector<double> sigma;  // per column, population standard deviation
    double epsilon = 1e-5;
};

struct RevInNormalized {
    Matrix output;
    RevInStats stats;
};

// x' = (x - mu) / (sigma + eps), x'' = (x' - beta) / alpha, per channel.
RevInNormalized revin_normalize(const Matrix& x, const Matrix& alpha, const Matrix& beta, double epsilon);
// y' = alpha * y + beta, out = y' * (sigma + eps) + mu.
Matrix revin_denormalize(const Matrix& yhat, const RevInStats& stats, const Matrix& alpha, const Matrix& beta);

struct RevInDenormGrad {
    Matrix yhat;                   // dL/dyhat
    Matrix alpha, beta;            // accumulated into by the caller
    std::vector<double> mu, scale; // dL/dmu and dL/d(sigma + eps) per column
};

RevInDenormGrad revin_denormalize_backward(const Matrix& upstream, const Matrix& yhat, const RevInStats& stats,
                                           const Matrix& alpha, const Matrix& beta);

struct RevInNormGrad {
    Matrix input;
    Matrix alpha, beta;
};

// `normalized` is the x'' produced by revin_normalize for `input`. The mu/scale
// terms from the denormalize side flow back through the statistics.
RevInNormGrad revin_normalize_backward(const Matrix& upstream, const Matrix& input, const Matrix& normalized,
                                       const RevInStats& stats, const Matrix& alpha, const Matrix& beta,
                                       const std::vector<double>& mu_grad, const std::vector<double>& scale_grad);

// Centered moving average over rows with replicate padding of (kernel-1)/2.
Matrix moving_average(const Matrix& x, std::size_t kernel);
Matrix moving_average_backward(const Matrix& upstream, std::size_t kernel);

struct Decomposition {
    Matrix seasonal;
    Matrix trend;
};

// seasonal + trend reproduces x exactly in floating point, except where both
// parts dwarf x and cancel (their sum then cannot carry x's low bits).
Decomposition decompose(const Matrix& x, std::size_t kernel);

}  // namespace ltsf

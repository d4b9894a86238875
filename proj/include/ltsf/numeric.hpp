#pragma once

#include <cstddef>
#include <functional>

#include "ltsf/matrix.hpp"
#include "ltsf/rng.hpp"

namespace ltsf {

// Entries i.i.d. uniform in [-bound, bound], drawn in row-major order.
Matrix init_uniform(Rng& rng, std::size_t rows, std::size_t cols, double bound);

using ScalarFunction = std::function<double(const Matrix&)>;

// Central differences (f(x + h e_ij) - f(x - h e_ij)) / 2h for every entry.
// Throws NumericError if any probe evaluates to a non-finite value.
Matrix finite_diff_gradient(const ScalarFunction& f, const Matrix& x, double h = 1e-5);

// max |a - b| / max(1, max|b|) style relative error used by gradient checks.
double relative_error(const Matrix& analytic, const Matrix& numeric);

}  // namespace ltsf

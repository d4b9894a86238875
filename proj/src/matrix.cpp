#include "ltsf/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "ltsf/error.hpp"

namespace ltsf {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("buffer of " + std::to_string(data_.size()) + " values cannot form " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged initializer list");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
    if (first + count > rows_) {
        throw ShapeError("row block [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") outside " + shape_string());
    }
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
    return Matrix(count, cols_, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* context) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(context) + ": " + a.shape_string() + " vs " + b.shape_string());
    }
}

namespace {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const EigenRowMajor>;
using View = Eigen::Map<EigenRowMajor>;

ConstView view(const Matrix& m) {
    return ConstView(m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

View view(Matrix& m) {
    return View(m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
    }
    Matrix c(a.rows(), b.cols());
    if (a.cols() > 0) view(c).noalias() = view(a) * view(b);
    return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_bt: " + a.shape_string() + " * (" + b.shape_string() + ")^T");
    }
    Matrix c(a.rows(), b.rows());
    if (a.cols() > 0) view(c).noalias() = view(a) * view(b).transpose();
    return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_at: (" + a.shape_string() + ")^T * " + b.shape_string());
    }
    Matrix c(a.cols(), b.cols());
    if (a.rows() > 0) view(c).noalias() = view(a).transpose() * view(b);
    return c;
}

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op) {
    require_same_shape(a, b, "elementwise");
    Matrix c(a.rows(), a.cols());
    auto x = a.data();
    auto y = b.data();
    auto z = c.data();
    switch (op) {
        case ElementOp::add:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
            break;
        case ElementOp::sub:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
            break;
        case ElementOp::mul:
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
            break;
    }
    return c;
}

Matrix scaled(const Matrix& a, double factor) {
    Matrix c = a;
    for (double& v : c.data()) v *= factor;
    return c;
}

void add_column_bias(Matrix& m, const Matrix& bias) {
    if (bias.rows() != m.rows() || bias.cols() != 1) {
        throw ShapeError("bias " + bias.shape_string() + " for " + m.shape_string());
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double b = bias(r, 0);
        for (double& v : m.row(r)) v += b;
    }
}

Matrix row_sums(const Matrix& m) {
    Matrix s(m.rows(), 1);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        for (double v : m.row(r)) acc += v;
        s(r, 0) = acc;
    }
    return s;
}

double sum(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data()) acc += v;
    return acc;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

}  // namespace ltsf

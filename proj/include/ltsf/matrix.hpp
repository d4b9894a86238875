#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ltsf {

/// Dense row-major matrix of doubles.
///
/// Models keep one column per (sample, channel) pair, so every temporal
/// layer is a single left-multiplication and weights are shared across
/// channels for free.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept { return rows_ == other.rows_ && cols_ == other.cols_; }
    std::string shape_string() const;

    bool all_finite() const noexcept;

    Matrix transposed() const;

    // Rows [first, first + count).
    Matrix row_block(std::size_t first, std::size_t count) const;

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class ElementOp { add, sub, mul };

Matrix matmul(const Matrix& a, const Matrix& b);
// a · bᵀ and aᵀ · b without materializing the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
Matrix matmul_at(const Matrix& a, const Matrix& b);

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op);
Matrix scaled(const Matrix& a, double factor);

// Adds the column vector `bias` (rows × 1) to every column of `m`.
void add_column_bias(Matrix& m, const Matrix& bias);
// Row sums, returned as a rows × 1 column.
Matrix row_sums(const Matrix& m);

double sum(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

void require_same_shape(const Matrix& a, const Matrix& b, const char* context);

}  // namespace ltsf

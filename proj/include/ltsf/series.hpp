#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltsf/matrix.hpp"
#include "ltsf/rng.hpp"

namespace ltsf {

/// A timestamped (length x channels) block of observations.
struct RawSeries {
    std::string name;
    std::vector<std::int64_t> timestamps;  // seconds since 1970-01-01, strictly increasing
    Matrix values;                         // one row per time step, one column per variate
    std::vector<std::string> column_names;

    std::size_t length() const noexcept { return values.rows(); }
    std::size_t channels() const noexcept { return values.cols(); }

    // Rows [first, first + count) as a new series.
    RawSeries slice(std::size_t first, std::size_t count) const;
};

// Accepts "YYYY-MM-DD[ HH:MM[:SS]]" with '-' or '/' separators and single-digit
// fields, which covers every benchmark file in circulation.
std::optional<std::int64_t> parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t seconds);

// Header row with a leading "date" column, then numeric columns.
RawSeries load_csv(const std::filesystem::path& path);
RawSeries parse_csv(std::string_view text, std::string name);

// Median spacing rendered as "10 minutes", "1 hour", "1 day", "weekly", ...
std::string infer_granularity(const RawSeries& series);

struct SplitSpec {
    double train_ratio = 0.6;
    double val_ratio = 0.2;
    double test_ratio = 0.2;

    void validate() const;
};

struct SplitSeries {
    RawSeries train;
    RawSeries val;
    RawSeries test;
};

// train and val lengths are floor(ratio * length); test takes the remainder.
// With borrow_context > 0 the val and test segments are extended backwards
// by that many rows so their first window can look across the boundary.
SplitSeries chronological_split(const RawSeries& series, const SplitSpec& spec, std::size_t borrow_context = 0);

struct SegmentLengths {
    std::size_t train, val, test;
};
SegmentLengths split_lengths(std::size_t length, const SplitSpec& spec);

/// Per-column standardization fitted on the training split.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> std;
    double epsilon = 1e-8;

    Matrix apply(const Matrix& values) const;
    Matrix invert(const Matrix& values) const;
};

Scaler fit_scaler(const RawSeries& train, double epsilon = 1e-8);
RawSeries apply_scaler(const Scaler& scaler, const RawSeries& series);

struct WindowSample {
    Matrix input;   // L x N
    Matrix target;  // T x N
    std::size_t origin_index = 0;
};

/// Every stride-1 (input, target) window of one series segment.
///
/// Windows are views into a shared copy of the segment; samples are only
/// materialized on request, which keeps long horizons on wide datasets cheap.
class WindowSet {
public:
    WindowSet() = default;
    WindowSet(std::shared_ptr<const Matrix> series, std::size_t input_len, std::size_t horizon);

    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    std::size_t input_len() const noexcept { return input_len_; }
    std::size_t horizon() const noexcept { return horizon_; }
    std::size_t channels() const noexcept { return series_ ? series_->cols() : 0; }

    WindowSample sample(std::size_t k) const;

    // Packs the chosen windows column-wise: column b * N + c holds channel c
    // of window indices[b]. inputs is L x (B*N), targets is T x (B*N).
    void gather(std::span<const std::size_t> indices, Matrix& inputs, Matrix& targets) const;

private:
    std::shared_ptr<const Matrix> series_;
    std::size_t input_len_ = 0;
    std::size_t horizon_ = 0;
    std::size_t count_ = 0;
};

WindowSet make_windows(const RawSeries& series, std::size_t input_len, std::size_t horizon);
WindowSet make_windows(const Matrix& values, std::size_t input_len, std::size_t horizon);

// Index groups covering [0, count) exactly once; the last group may be short.
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, bool shuffle, Rng& rng);

}  // namespace ltsf

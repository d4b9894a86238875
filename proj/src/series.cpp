#include "ltsf/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ltsf/error.hpp"

namespace ltsf {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            return cells;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool read_int(std::string_view& s, int& out, std::size_t max_digits) {
    std::size_t n = 0;
    while (n < s.size() && n < max_digits && s[n] >= '0' && s[n] <= '9') ++n;
    if (n == 0) return false;
    std::from_chars(s.data(), s.data() + n, out);
    s.remove_prefix(n);
    return true;
}

bool eat(std::string_view& s, std::string_view options) {
    if (s.empty() || options.find(s.front()) == std::string_view::npos) return false;
    s.remove_prefix(1);
    return true;
}

}  // namespace

RawSeries RawSeries::slice(std::size_t first, std::size_t count) const {
    RawSeries out;
    out.name = name;
    out.column_names = column_names;
    out.values = values.row_block(first, count);
    out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(first),
                          timestamps.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    std::string_view s = trim(text);
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (!read_int(s, year, 4) || !eat(s, "-/") || !read_int(s, month, 2) || !eat(s, "-/") ||
        !read_int(s, day, 2)) {
        return std::nullopt;
    }
    if (!s.empty()) {
        if (!eat(s, " T") || !read_int(s, hour, 2) || !eat(s, ":") || !read_int(s, minute, 2)) return std::nullopt;
        if (eat(s, ":") && !read_int(s, second, 2)) return std::nullopt;
        if (!s.empty()) return std::nullopt;
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        return std::nullopt;
    }
    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t seconds) {
    // Inverse of days_from_civil.
    std::int64_t z = (seconds >= 0 ? seconds : seconds - 86399) / 86400;
    const std::int64_t secs = seconds - z * 86400;
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u %02lld:%02lld:%02lld", static_cast<long long>(y), m, d,
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

RawSeries parse_csv(std::string_view text, std::string name) {
    RawSeries series;
    series.name = std::move(name);

    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) lines.push_back(line);
        start = end + 1;
    }
    if (lines.empty()) throw ParseError(series.name + ": file is empty");

    const auto header = split_commas(lines.front());
    if (header.size() < 2) throw ParseError(series.name + ": header needs a date column and at least one value column");
    std::string first(header.front());
    std::transform(first.begin(), first.end(), first.begin(), [](unsigned char c) { return std::tolower(c); });
    if (first != "date") throw ParseError(series.name + ": first column must be named 'date', found '" + first + "'");
    for (std::size_t c = 1; c < header.size(); ++c) series.column_names.emplace_back(header[c]);

    const std::size_t n_cols = header.size() - 1;
    const std::size_t n_rows = lines.size() - 1;
    if (n_rows == 0) throw LoadError(series.name + ": no data rows");
    std::vector<double> values;
    values.reserve(n_rows * n_cols);
    series.timestamps.reserve(n_rows);

    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t row_no = r + 1;
        const auto cells = split_commas(lines[r + 1]);
        if (cells.size() != header.size()) {
            throw ParseError(series.name + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(header.size()));
        }
        if (cells[0].empty()) throw LoadError(series.name + ": missing timestamp at row " + std::to_string(row_no));
        const auto ts = parse_timestamp(cells[0]);
        if (!ts) {
            throw ParseError(series.name + ": row " + std::to_string(row_no) + ": cannot parse timestamp '" +
                             std::string(cells[0]) + "'");
        }
        if (!series.timestamps.empty() && *ts <= series.timestamps.back()) {
            throw OrderError(series.name + ": timestamp at row " + std::to_string(row_no) + " (" +
                             std::string(cells[0]) + ") does not follow the previous row");
        }
        series.timestamps.push_back(*ts);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const std::string_view cell = cells[c];
            if (cell.empty()) {
                throw LoadError(series.name + ": missing value at row " + std::to_string(row_no) + ", column '" +
                                series.column_names[c - 1] + "'");
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw ParseError(series.name + ": row " + std::to_string(row_no) + ", column '" +
                                 series.column_names[c - 1] + "': '" + std::string(cell) + "' is not numeric");
            }
            values.push_back(v);
        }
    }
    series.values = Matrix(n_rows, n_cols, std::move(values));
    return series;
}

RawSeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), path.stem().string());
}

std::string infer_granularity(const RawSeries& series) {
    if (series.timestamps.size() < 2) return "unknown";
    std::vector<std::int64_t> gaps;
    gaps.reserve(series.timestamps.size() - 1);
    for (std::size_t i = 1; i < series.timestamps.size(); ++i) {
        gaps.push_back(series.timestamps[i] - series.timestamps[i - 1]);
    }
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
    const std::int64_t gap = gaps[gaps.size() / 2];

    auto plural = [](std::int64_t n, const char* unit) {
        return std::to_string(n) + " " + unit + (n == 1 ? "" : "s");
    };
    if (gap == 7 * 86400) return "weekly";
    if (gap % 86400 == 0) return plural(gap / 86400, "day");
    if (gap % 3600 == 0) return plural(gap / 3600, "hour");
    if (gap % 60 == 0) return plural(gap / 60, "minute");
    return plural(gap, "second");
}

void SplitSpec::validate() const {
    if (!(train_ratio > 0.0) || !(val_ratio > 0.0) || !(test_ratio > 0.0)) {
        throw ConfigError("split ratios must be positive");
    }
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1");
    }
}

SegmentLengths split_lengths(std::size_t length, const SplitSpec& spec) {
    spec.validate();
    // The small slack absorbs products such as 0.6 * 10 = 6.000000000000001.
    const auto floor_of = [&](double ratio) {
        return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(length) + 1e-9));
    };
    const std::size_t train = floor_of(spec.train_ratio);
    const std::size_t val = std::min(floor_of(spec.val_ratio), length - train);
    return {train, val, length - train - val};
}

SplitSeries chronological_split(const RawSeries& series, const SplitSpec& spec, std::size_t borrow_context) {
    if (series.length() == 0) throw ConfigError("cannot split an empty series");
    const auto len = split_lengths(series.length(), spec);
    const std::size_t val_start = len.train;
    const std::size_t test_start = len.train + len.val;
    const std::size_t val_ctx = std::min(borrow_context, val_start);
    const std::size_t test_ctx = std::min(borrow_context, test_start);
    return {series.slice(0, len.train), series.slice(val_start - val_ctx, len.val + val_ctx),
            series.slice(test_start - test_ctx, len.test + test_ctx)};
}

Scaler fit_scaler(const RawSeries& train, double epsilon) {
    if (train.length() == 0) throw ConfigError("cannot fit a scaler on an empty split");
    const std::size_t n = train.channels();
    Scaler s;
    s.epsilon = epsilon;
    s.mean.assign(n, 0.0);
    s.std.assign(n, 0.0);
    const auto rows = static_cast<double>(train.length());
    for (std::size_t r = 0; r < train.length(); ++r)
        for (std::size_t c = 0; c < n; ++c) s.mean[c] += train.values(r, c);
    for (double& m : s.mean) m /= rows;
    for (std::size_t r = 0; r < train.length(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double d = train.values(r, c) - s.mean[c];
            s.std[c] += d * d;
        }
    }
    for (double& v : s.std) v = std::sqrt(v / rows);
    return s;
}

Matrix Scaler::apply(const Matrix& values) const {
    if (values.cols() != mean.size()) {
        throw ShapeError("scaler fitted on " + std::to_string(mean.size()) + " columns applied to " +
                         values.shape_string());
    }
    Matrix out(values.rows(), values.cols());
    for (std::size_t r = 0; r < values.rows(); ++r)
        for (std::size_t c = 0; c < values.cols(); ++c) out(r, c) = (values(r, c) - mean[c]) / (std[c] + epsilon);
    return out;
}

Matrix Scaler::invert(const Matrix& values) const {
    if (values.cols() != mean.size()) {
        throw ShapeError("scaler fitted on " + std::to_string(mean.size()) + " columns inverted on " +
                         values.shape_string());
    }
    Matrix out(values.rows(), values.cols());
    for (std::size_t r = 0; r < values.rows(); ++r)
        for (std::size_t c = 0; c < values.cols(); ++c) out(r, c) = values(r, c) * (std[c] + epsilon) + mean[c];
    return out;
}

RawSeries apply_scaler(const Scaler& scaler, const RawSeries& series) {
    RawSeries out = series;
    out.values = scaler.apply(series.values);
    return out;
}

WindowSet::WindowSet(std::shared_ptr<const Matrix> series, std::size_t input_len, std::size_t horizon)
    : series_(std::move(series)), input_len_(input_len), horizon_(horizon) {
    if (input_len_ == 0 || horizon_ == 0) throw ConfigError("input length and horizon must be at least 1");
    const std::size_t length = series_->rows();
    if (length < input_len_ + horizon_) {
        throw WindowError("input length " + std::to_string(input_len_) + " + horizon " + std::to_string(horizon_) +
                          " exceeds segment length " + std::to_string(length));
    }
    count_ = length - input_len_ - horizon_ + 1;
}

WindowSample WindowSet::sample(std::size_t k) const {
    if (k >= count_) throw ConfigError("window index " + std::to_string(k) + " out of range " + std::to_string(count_));
    return {series_->row_block(k, input_len_), series_->row_block(k + input_len_, horizon_), k};
}

void WindowSet::gather(std::span<const std::size_t> indices, Matrix& inputs, Matrix& targets) const {
    const std::size_t n = channels();
    const std::size_t width = indices.size() * n;
    inputs = Matrix(input_len_, width);
    targets = Matrix(horizon_, width);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const std::size_t k = indices[b];
        if (k >= count_) throw ConfigError("window index " + std::to_string(k) + " out of range");
        for (std::size_t t = 0; t < input_len_; ++t) {
            const auto src = series_->row(k + t);
            std::copy(src.begin(), src.end(), inputs.row(t).begin() + static_cast<std::ptrdiff_t>(b * n));
        }
        for (std::size_t t = 0; t < horizon_; ++t) {
            const auto src = series_->row(k + input_len_ + t);
            std::copy(src.begin(), src.end(), targets.row(t).begin() + static_cast<std::ptrdiff_t>(b * n));
        }
    }
}

WindowSet make_windows(const Matrix& values, std::size_t input_len, std::size_t horizon) {
    return WindowSet(std::make_shared<const Matrix>(values), input_len, horizon);
}

WindowSet make_windows(const RawSeries& series, std::size_t input_len, std::size_t horizon) {
    return make_windows(series.values, input_len, horizon);
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, bool shuffle, Rng& rng) {
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> groups;
    groups.reserve((count + batch_size - 1) / batch_size);
    for (std::size_t first = 0; first < count; first += batch_size) {
        const std::size_t last = std::min(count, first + batch_size);
        groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(first),
                            order.begin() + static_cast<std::ptrdiff_t>(last));
    }
    return groups;
}

}  // namespace ltsf

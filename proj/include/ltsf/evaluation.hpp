#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ltsf/model.hpp"
#include "ltsf/series.hpp"
#include "ltsf/trainer.hpp"

namespace ltsf {

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

// Mean squared / absolute error over every entry of every window, eval mode.
Metrics evaluate(const ModelSpec& spec, const ModelState& state, const WindowSet& windows, std::size_t batch_size = 256);

/// Dataset registry: name -> file and the shape it is expected to have.
struct DatasetInfo {
    std::string name;
    std::string path;
    std::size_t channels = 0;
    std::size_t length = 0;
    std::string sample_rate;
};

class DatasetRegistry {
public:
    static DatasetRegistry from_json(const nlohmann::json& j);
    static DatasetRegistry load(const std::filesystem::path& path);
    // Registry shipped under assets/, with the dataset root from LTSF_DATA_DIR.
    static DatasetRegistry builtin();

    const DatasetInfo* find(std::string_view name) const;
    const std::vector<DatasetInfo>& entries() const noexcept { return entries_; }

    // A registered name resolves under data_dir; anything else is a path.
    std::filesystem::path resolve(std::string_view name_or_path, const std::filesystem::path& data_dir) const;

private:
    std::vector<DatasetInfo> entries_;
};

std::filesystem::path default_data_dir();
std::filesystem::path asset_dir();

// Problems with a loaded series compared to its registry entry; empty if it matches.
std::vector<std::string> check_against_registry(const RawSeries& series, const DatasetInfo& info);

struct PreparedData {
    Scaler scaler;
    WindowSet train, val, test;
};

// Split 6:2:2 (or as given), fit the scaler on train, scale all splits and window them.
PreparedData prepare_data(const RawSeries& series, std::size_t input_len, std::size_t horizon,
                          const SplitSpec& split = {}, bool borrow_context = false);

struct ExperimentGrid {
    std::string name;
    std::string dataset;
    std::size_t input_len = 96;
    std::vector<std::size_t> horizons;
    std::vector<ModelKind> models;
    std::vector<std::uint64_t> seeds{1};
    TrainConfig train;
    ModelSpec model_defaults;  // depth, dropout, kernel, epsilon; shape fields are ignored
    SplitSpec split;
    bool borrow_context = false;

    static ExperimentGrid from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

// FNV-1a over "seed|dataset|model|L|T", finalized with the SplitMix64 mixer.
std::uint64_t cell_seed(std::uint64_t seed, std::string_view dataset, ModelKind model, std::size_t input_len,
                        std::size_t horizon);

struct SeedRun {
    std::uint64_t seed = 0;
    std::uint64_t cell_seed = 0;
    Metrics test;
    TrainReport report;
};

struct Cell {
    std::string model;
    std::string dataset;
    std::size_t input_len = 0;
    std::size_t horizon = 0;
    std::optional<Metrics> metrics;  // median over seed runs
    std::vector<SeedRun> runs;
    std::string error;

    bool ok() const noexcept { return metrics.has_value(); }
};

struct MetricsReport {
    std::vector<Cell> cells;
    nlohmann::json metadata = nlohmann::json::object();

    const Cell* find(std::string_view model, std::string_view dataset, std::size_t input_len, std::size_t horizon) const;
    std::size_t succeeded() const;

    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

using CellCallback = std::function<void(const Cell&)>;

// Trains and scores one (model, horizon) cell on already loaded data, once per seed.
Cell run_cell(const ExperimentGrid& grid, const RawSeries& series, ModelKind model, std::size_t horizon);

MetricsReport run_grid(const ExperimentGrid& grid, const RawSeries& series, const CellCallback& on_cell = {});
MetricsReport run_grid(const ExperimentGrid& grid, const DatasetRegistry& registry,
                       const std::filesystem::path& data_dir, const CellCallback& on_cell = {});

/// Published numbers keyed like report cells; read-only.
struct ReferenceEntry {
    std::string model;
    std::string dataset;
    std::size_t input_len = 0;
    std::size_t horizon = 0;
    double mse = 0.0;
    double mae = 0.0;
    std::string source;
};

struct ReferenceTable {
    std::string version;
    std::vector<ReferenceEntry> entries;
    nlohmann::json notes;

    static ReferenceTable from_json(const nlohmann::json& j);
    static ReferenceTable load(const std::filesystem::path& path);
    static ReferenceTable builtin();

    const ReferenceEntry* find(std::string_view model, std::string_view dataset, std::size_t input_len,
                               std::size_t horizon) const;
};

struct ComparisonRow {
    std::string model;
    std::string reference_model;
    std::string dataset;
    std::size_t input_len = 0;
    std::size_t horizon = 0;
    std::string metric;  // "mse" or "mae"
    double ours = 0.0;
    double reference = 0.0;
    double delta = 0.0;                 // ours - reference
    std::optional<double> percent;      // 100 * (ours - reference) / reference; empty if reference == 0
    bool ours_lower = false;
    std::string source;
};

// Every successful cell against every reference entry sharing (dataset, L, T).
std::vector<ComparisonRow> compare_to_reference(const MetricsReport& report, const ReferenceTable& ref);

nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows);
std::string comparison_to_markdown(const std::vector<ComparisonRow>& rows);

}  // namespace ltsf

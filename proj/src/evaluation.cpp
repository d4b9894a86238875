#include "ltsf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "ltsf/checkpoint.hpp"
#include "ltsf/error.hpp"

#ifndef LTSF_DEFAULT_ASSET_DIR
#define LTSF_DEFAULT_ASSET_DIR "assets"
#endif

namespace ltsf {

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
    try {
        return j.contains(key) ? j.at(key).get<T>() : fallback;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

Metrics evaluate(const ModelSpec& spec, const ModelState& state, const WindowSet& windows, std::size_t batch_size) {
    if (windows.empty()) throw ConfigError("cannot evaluate on an empty window set");
    if (windows.input_len() != spec.input_len || windows.horizon() != spec.horizon || windows.channels() != spec.channels) {
        throw ShapeError("evaluation windows do not match the model's L, T and N");
    }
    double sq = 0.0;
    double abs_sum = 0.0;
    std::size_t count = 0;
    std::vector<std::size_t> group;
    Matrix inputs, targets;
    for (std::size_t first = 0; first < windows.size(); first += batch_size) {
        group.clear();
        for (std::size_t k = first; k < std::min(windows.size(), first + batch_size); ++k) group.push_back(k);
        windows.gather(group, inputs, targets);
        const Matrix pred = predict(spec, state, inputs);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred.data()[i] - targets.data()[i];
            sq += d * d;
            abs_sum += std::abs(d);
        }
        count += pred.size();
    }
    return {sq / static_cast<double>(count), abs_sum / static_cast<double>(count)};
}

DatasetRegistry DatasetRegistry::from_json(const nlohmann::json& j) {
    DatasetRegistry reg;
    try {
        for (const auto& [name, entry] : j.at("datasets").items()) {
            DatasetInfo info;
            info.name = name;
            info.path = entry.at("path").get<std::string>();
            info.channels = entry.value("channels", std::size_t{0});
            info.length = entry.value("length", std::size_t{0});
            info.sample_rate = entry.value("sample_rate", std::string());
            reg.entries_.push_back(std::move(info));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dataset registry: ") + e.what());
    }
    return reg;
}

DatasetRegistry DatasetRegistry::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

DatasetRegistry DatasetRegistry::builtin() {
    return load(asset_dir() / "datasets.json");
}

const DatasetInfo* DatasetRegistry::find(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

std::filesystem::path DatasetRegistry::resolve(std::string_view name_or_path, const std::filesystem::path& data_dir) const {
    if (const DatasetInfo* info = find(name_or_path)) return data_dir / info->path;
    return std::filesystem::path(name_or_path);
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("LTSF_DATA_DIR"); env && *env) return env;
    return "data";
}

std::filesystem::path asset_dir() {
    if (const char* env = std::getenv("LTSF_ASSET_DIR"); env && *env) return env;
    return LTSF_DEFAULT_ASSET_DIR;
}

std::vector<std::string> check_against_registry(const RawSeries& series, const DatasetInfo& info) {
    std::vector<std::string> issues;
    if (info.length != 0 && series.length() != info.length) {
        issues.push_back("expected " + std::to_string(info.length) + " rows, found " + std::to_string(series.length()));
    }
    if (info.channels != 0 && series.channels() != info.channels) {
        issues.push_back("expected " + std::to_string(info.channels) + " columns, found " +
                         std::to_string(series.channels()));
    }
    if (!info.sample_rate.empty()) {
        const std::string found = infer_granularity(series);
        if (found != info.sample_rate) issues.push_back("expected sample rate " + info.sample_rate + ", found " + found);
    }
    return issues;
}

PreparedData prepare_data(const RawSeries& series, std::size_t input_len, std::size_t horizon, const SplitSpec& split,
                          bool borrow_context) {
    const SplitSeries parts = chronological_split(series, split, borrow_context ? input_len : 0);
    PreparedData data;
    data.scaler = fit_scaler(parts.train);
    data.train = make_windows(data.scaler.apply(parts.train.values), input_len, horizon);
    data.val = make_windows(data.scaler.apply(parts.val.values), input_len, horizon);
    data.test = make_windows(data.scaler.apply(parts.test.values), input_len, horizon);
    return data;
}

ExperimentGrid ExperimentGrid::from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.empty()) throw ConfigError("grid file is empty");
    ExperimentGrid g;
    g.dataset = json_get<std::string>(j, "dataset", "");
    g.name = json_get<std::string>(j, "name", g.dataset);
    g.input_len = json_get<std::size_t>(j, "input", g.input_len);
    g.horizons = json_get<std::vector<std::size_t>>(j, "horizons", {});
    for (const auto& m : json_get<std::vector<std::string>>(j, "models", {})) g.models.push_back(parse_model_kind(m));
    if (j.contains("seeds")) {
        g.seeds = json_get<std::vector<std::uint64_t>>(j, "seeds", {});
    } else if (j.contains("seed")) {
        g.seeds = {json_get<std::uint64_t>(j, "seed", 1)};
    }
    if (j.contains("lr_profile")) g.train.learning_rate = learning_rate_for_profile(json_get<std::string>(j, "lr_profile", ""));
    g.train.learning_rate = json_get<double>(j, "lr", g.train.learning_rate);
    g.train.batch_size = json_get<std::size_t>(j, "batch", g.train.batch_size);
    g.train.max_epochs = json_get<std::size_t>(j, "epochs", g.train.max_epochs);
    g.train.patience = json_get<std::size_t>(j, "patience", g.train.patience);
    g.model_defaults.depth = json_get<std::size_t>(j, "depth", g.model_defaults.depth);
    g.model_defaults.dropout_rate = json_get<double>(j, "dropout", g.model_defaults.dropout_rate);
    g.model_defaults.ma_kernel = json_get<std::size_t>(j, "kernel", g.model_defaults.ma_kernel);
    g.borrow_context = json_get<bool>(j, "borrow_context", false);
    g.validate();
    return g;
}

nlohmann::json ExperimentGrid::to_json() const {
    nlohmann::json models_json = nlohmann::json::array();
    for (ModelKind m : models) models_json.push_back(to_string(m));
    return {{"name", name},
            {"dataset", dataset},
            {"input", input_len},
            {"horizons", horizons},
            {"models", models_json},
            {"seeds", seeds},
            {"lr", train.learning_rate},
            {"batch", train.batch_size},
            {"epochs", train.max_epochs},
            {"patience", train.patience},
            {"depth", model_defaults.depth},
            {"dropout", model_defaults.dropout_rate},
            {"kernel", model_defaults.ma_kernel},
            {"borrow_context", borrow_context}};
}

void ExperimentGrid::validate() const {
    if (dataset.empty()) throw ConfigError("grid needs a dataset");
    if (horizons.empty()) throw ConfigError("grid needs at least one horizon");
    if (models.empty()) throw ConfigError("grid needs at least one model");
    if (seeds.empty()) throw ConfigError("grid needs at least one seed");
    if (input_len < 1) throw ConfigError("input length must be >= 1");
    std::vector<std::size_t> sorted = horizons;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 1) throw ConfigError("horizons must be positive");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("horizons must be unique");
    train.validate();
    split.validate();
}

std::uint64_t cell_seed(std::uint64_t seed, std::string_view dataset, ModelKind model, std::size_t input_len,
                        std::size_t horizon) {
    const std::string key = std::to_string(seed) + "|" + std::string(dataset) + "|" + to_string(model) + "|" +
                            std::to_string(input_len) + "|" + std::to_string(horizon);
    return splitmix64_mix(fnv1a(key));
}

Cell run_cell(const ExperimentGrid& grid, const RawSeries& series, ModelKind model, std::size_t horizon) {
    Cell cell;
    cell.model = to_string(model);
    cell.dataset = grid.dataset;
    cell.input_len = grid.input_len;
    cell.horizon = horizon;
    try {
        const PreparedData data = prepare_data(series, grid.input_len, horizon, grid.split, grid.borrow_context);
        ModelSpec spec = grid.model_defaults;
        spec.kind = model;
        spec.input_len = grid.input_len;
        spec.horizon = horizon;
        spec.channels = series.channels();
        spec.validate();

        std::vector<double> mses, maes;
        for (std::uint64_t seed : grid.seeds) {
            SeedRun run;
            run.seed = seed;
            run.cell_seed = cell_seed(seed, grid.dataset, model, grid.input_len, horizon);
            TrainConfig cfg = grid.train;
            cfg.seed = run.cell_seed;
            FitResult fitted = fit(spec, init_model(spec, run.cell_seed), data.train, data.val, cfg);
            run.test = evaluate(spec, fitted.best, data.test);
            run.report = std::move(fitted.report);
            mses.push_back(run.test.mse);
            maes.push_back(run.test.mae);
            cell.runs.push_back(std::move(run));
        }
        cell.metrics = Metrics{median(mses), median(maes)};
    } catch (const Error& e) {
        cell.error = e.what();
        cell.metrics.reset();
    }
    return cell;
}

MetricsReport run_grid(const ExperimentGrid& grid, const RawSeries& series, const CellCallback& on_cell) {
    grid.validate();
    MetricsReport report;
    const std::string grid_text = grid.to_json().dump();
    report.metadata = {{"grid", grid.to_json()},
                       {"config_hash", [&] {
                            char buf[24];
                            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(grid_text)));
                            return std::string(buf);
                        }()},
                       {"seed_algorithm", "splitmix64_mix(fnv1a64(\"seed|dataset|model|L|T\"))"},
                       {"series_length", series.length()},
                       {"channels", series.channels()}};
    for (ModelKind model : grid.models) {
        for (std::size_t horizon : grid.horizons) {
            report.cells.push_back(run_cell(grid, series, model, horizon));
            if (on_cell) on_cell(report.cells.back());
        }
    }
    return report;
}

MetricsReport run_grid(const ExperimentGrid& grid, const DatasetRegistry& registry, const std::filesystem::path& data_dir,
                       const CellCallback& on_cell) {
    grid.validate();
    RawSeries series = load_csv(registry.resolve(grid.dataset, data_dir));
    series.name = grid.dataset;
    return run_grid(grid, series, on_cell);
}

const Cell* MetricsReport::find(std::string_view model, std::string_view dataset, std::size_t input_len,
                                std::size_t horizon) const {
    for (const auto& c : cells) {
        if (c.model == model && c.dataset == dataset && c.input_len == input_len && c.horizon == horizon) return &c;
    }
    return nullptr;
}

std::size_t MetricsReport::succeeded() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.ok(); }));
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json out;
    out["metadata"] = metadata;
    out["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json cell = {{"model", c.model}, {"dataset", c.dataset}, {"input_len", c.input_len}, {"horizon", c.horizon}};
        if (c.metrics) {
            cell["mse"] = c.metrics->mse;
            cell["mae"] = c.metrics->mae;
        } else {
            cell["mse"] = nullptr;
            cell["mae"] = nullptr;
            cell["error"] = c.error;
        }
        cell["runs"] = nlohmann::json::array();
        for (const auto& r : c.runs) {
            cell["runs"].push_back({{"seed", r.seed},
                                    {"cell_seed", r.cell_seed},
                                    {"mse", r.test.mse},
                                    {"mae", r.test.mae},
                                    {"best_epoch", r.report.best_epoch},
                                    {"stopped_early", r.report.stopped_early},
                                    {"val_loss", r.report.val_loss}});
        }
        out["cells"].push_back(std::move(cell));
    }
    return out;
}

std::string MetricsReport::to_markdown() const {
    std::ostringstream md;
    md << "| model | dataset | L | T | MSE | MAE | seeds | status |\n";
    md << "|---|---|---:|---:|---:|---:|---:|---|\n";
    for (const auto& c : cells) {
        md << "| " << c.model << " | " << c.dataset << " | " << c.input_len << " | " << c.horizon << " | ";
        if (c.metrics) {
            md << fixed(c.metrics->mse) << " | " << fixed(c.metrics->mae) << " | " << c.runs.size() << " | ok |\n";
        } else {
            md << "- | - | " << c.runs.size() << " | " << c.error << " |\n";
        }
    }
    return md.str();
}

ReferenceTable ReferenceTable::from_json(const nlohmann::json& j) {
    ReferenceTable t;
    try {
        t.version = j.at("version").get<std::string>();
        t.notes = j.value("notes", nlohmann::json::object());
        for (const auto& e : j.at("entries")) {
            t.entries.push_back({e.at("model").get<std::string>(), e.at("dataset").get<std::string>(),
                                 e.at("input_len").get<std::size_t>(), e.at("horizon").get<std::size_t>(),
                                 e.at("mse").get<double>(), e.at("mae").get<double>(), e.at("source").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("reference table: ") + e.what());
    }
    return t;
}

ReferenceTable ReferenceTable::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

ReferenceTable ReferenceTable::builtin() {
    return load(asset_dir() / "paper_tables.json");
}

const ReferenceEntry* ReferenceTable::find(std::string_view model, std::string_view dataset, std::size_t input_len,
                                           std::size_t horizon) const {
    for (const auto& e : entries) {
        if (e.model == model && e.dataset == dataset && e.input_len == input_len && e.horizon == horizon) return &e;
    }
    return nullptr;
}

std::vector<ComparisonRow> compare_to_reference(const MetricsReport& report, const ReferenceTable& ref) {
    std::vector<ComparisonRow> rows;
    for (const auto& cell : report.cells) {
        if (!cell.metrics) continue;
        for (const auto& e : ref.entries) {
            if (e.dataset != cell.dataset || e.input_len != cell.input_len || e.horizon != cell.horizon) continue;
            for (const char* metric : {"mse", "mae"}) {
                ComparisonRow row;
                row.model = cell.model;
                row.reference_model = e.model;
                row.dataset = cell.dataset;
                row.input_len = cell.input_len;
                row.horizon = cell.horizon;
                row.metric = metric;
                row.ours = metric == std::string_view("mse") ? cell.metrics->mse : cell.metrics->mae;
                row.reference = metric == std::string_view("mse") ? e.mse : e.mae;
                row.delta = row.ours - row.reference;
                if (row.reference != 0.0) row.percent = 100.0 * row.delta / row.reference;
                row.ours_lower = row.ours < row.reference;
                row.source = e.source;
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"model", r.model},
                       {"reference_model", r.reference_model},
                       {"dataset", r.dataset},
                       {"input_len", r.input_len},
                       {"horizon", r.horizon},
                       {"metric", r.metric},
                       {"ours", r.ours},
                       {"reference", r.reference},
                       {"delta", r.delta},
                       {"percent", r.percent ? nlohmann::json(*r.percent) : nlohmann::json()},
                       {"ours_lower", r.ours_lower},
                       {"source", r.source}});
    }
    return out;
}

std::string comparison_to_markdown(const std::vector<ComparisonRow>& rows) {
    std::ostringstream md;
    md << "| dataset | L | T | metric | ours (model) | reference (model) | delta | % | ours lower | source |\n";
    md << "|---|---:|---:|---|---:|---:|---:|---:|---|---|\n";
    for (const auto& r : rows) {
        md << "| " << r.dataset << " | " << r.input_len << " | " << r.horizon << " | " << r.metric << " | "
           << fixed(r.ours) << " (" << r.model << ") | " << fixed(r.reference) << " (" << r.reference_model << ") | "
           << fixed(r.delta) << " | " << (r.percent ? fixed(*r.percent, 1) + "%" : std::string("n/a")) << " | "
           << (r.ours_lower ? "yes" : "no") << " | " << r.source << " |\n";
    }
    return md.str();
}

}  // namespace ltsf

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ltsf/checkpoint.hpp"
#include "ltsf/error.hpp"
#include "ltsf/evaluation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
    std::optional<std::string> dataset, model, out, name, config, lr_profile;
    std::optional<std::size_t> input, horizon, batch, epochs, patience, depth, kernel;
    std::optional<double> lr, dropout;
    std::optional<std::uint64_t> seed;
    bool borrow_context = false;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--dataset", f.dataset, "Registered dataset name or CSV path");
    cmd->add_option("--model", f.model, "linear | nlinear | dlinear | rlinear | glinear | rs_glinear");
    cmd->add_option("--input", f.input, "Look-back length L");
    cmd->add_option("--horizon", f.horizon, "Forecast horizon T");
    cmd->add_option("--lr", f.lr, "Learning rate");
    cmd->add_option("--lr-profile", f.lr_profile, "Named learning rate: default | etth1");
    cmd->add_option("--batch", f.batch, "Batch size");
    cmd->add_option("--epochs", f.epochs, "Maximum epochs");
    cmd->add_option("--patience", f.patience, "Early-stopping patience (0 disables)");
    cmd->add_option("--dropout", f.dropout, "Dropout rate");
    cmd->add_option("--depth", f.depth, "Residual blocks (rs_glinear)");
    cmd->add_option("--kernel", f.kernel, "Moving-average kernel (dlinear)");
    cmd->add_option("--seed", f.seed, "Seed");
    cmd->add_option("--out", f.out, "Output root (default runs)");
    cmd->add_option("--name", f.name, "Run name under the output root");
    cmd->add_option("--config", f.config, "JSON config file; flags override it");
    cmd->add_flag("--borrow-context", f.borrow_context, "Let val/test windows look back across the split boundary");
}

json read_json_file(const fs::path& path, const char* what) {
    const std::string text = ltsf::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ltsf::ConfigError(std::string(what) + " " + path.string() + ": " + e.what());
    }
}

template <typename T>
T pick(const std::optional<T>& flag, const json& cfg, const char* key, T fallback) {
    if (flag) return *flag;
    if (cfg.contains(key)) {
        try {
            return cfg.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ltsf::ConfigError(std::string("config field '") + key + "': " + e.what());
        }
    }
    return fallback;
}

struct RunConfig {
    std::string dataset;
    ltsf::ModelSpec spec;
    ltsf::TrainConfig train;
    bool borrow_context = false;
    fs::path out = "runs";
    std::string name;

    json to_json() const {
        return {{"dataset", dataset},
                {"model", ltsf::spec_to_json(spec)},
                {"lr", train.learning_rate},
                {"batch", train.batch_size},
                {"epochs", train.max_epochs},
                {"patience", train.patience},
                {"seed", train.seed},
                {"borrow_context", borrow_context}};
    }
};

RunConfig resolve_config(const Flags& f) {
    const json cfg = f.config ? read_json_file(*f.config, "config") : json::object();
    if (!cfg.is_object()) throw ltsf::ConfigError("config file must hold a JSON object");
    RunConfig rc;
    rc.dataset = pick<std::string>(f.dataset, cfg, "dataset", "");
    if (rc.dataset.empty()) throw ltsf::ConfigError("--dataset is required");
    rc.spec.kind = ltsf::parse_model_kind(pick<std::string>(f.model, cfg, "model", "rs_glinear"));
    rc.spec.input_len = pick(f.input, cfg, "input", rc.spec.input_len);
    rc.spec.horizon = pick(f.horizon, cfg, "horizon", rc.spec.horizon);
    rc.spec.depth = pick(f.depth, cfg, "depth", rc.spec.depth);
    rc.spec.dropout_rate = pick(f.dropout, cfg, "dropout", rc.spec.dropout_rate);
    rc.spec.ma_kernel = pick(f.kernel, cfg, "kernel", rc.spec.ma_kernel);
    const std::string profile = pick<std::string>(f.lr_profile, cfg, "lr_profile", "default");
    rc.train.learning_rate = pick(f.lr, cfg, "lr", ltsf::learning_rate_for_profile(profile));
    rc.train.batch_size = pick(f.batch, cfg, "batch", rc.train.batch_size);
    rc.train.max_epochs = pick(f.epochs, cfg, "epochs", rc.train.max_epochs);
    rc.train.patience = pick(f.patience, cfg, "patience", rc.train.patience);
    rc.train.seed = pick(f.seed, cfg, "seed", rc.train.seed);
    rc.borrow_context = f.borrow_context || cfg.value("borrow_context", false);
    rc.out = pick<std::string>(f.out, cfg, "out", "runs");
    rc.train.validate();
    rc.name = pick<std::string>(f.name, cfg, "name", "");
    if (rc.name.empty()) {
        rc.name = fs::path(rc.dataset).stem().string() + "_" + ltsf::to_string(rc.spec.kind) + "_L" +
                  std::to_string(rc.spec.input_len) + "_T" + std::to_string(rc.spec.horizon) + "_s" +
                  std::to_string(rc.train.seed);
    }
    return rc;
}

ltsf::RawSeries load_dataset(const std::string& dataset, const ltsf::DatasetRegistry& registry) {
    ltsf::RawSeries series = ltsf::load_csv(registry.resolve(dataset, ltsf::default_data_dir()));
    series.name = dataset;
    return series;
}

ltsf::DatasetRegistry registry_or_empty() {
    try {
        return ltsf::DatasetRegistry::builtin();
    } catch (const ltsf::LoadError&) {
        return {};
    }
}

void write_json(const fs::path& path, const json& j) {
    ltsf::write_file_atomic(path, j.dump(2) + "\n");
}

int cmd_inspect(const Flags& f) {
    if (!f.dataset) throw ltsf::ConfigError("--dataset is required");
    const auto registry = registry_or_empty();
    const ltsf::RawSeries series = load_dataset(*f.dataset, registry);
    std::cout << series.length() << " rows, " << series.channels() << " columns, " << ltsf::infer_granularity(series)
              << "\n";
    if (const ltsf::DatasetInfo* info = registry.find(*f.dataset)) {
        for (const auto& issue : ltsf::check_against_registry(series, *info)) {
            std::cerr << "warning: " << *f.dataset << ": " << issue << "\n";
        }
    }
    return 0;
}

int cmd_train(const Flags& f) {
    RunConfig rc = resolve_config(f);
    const auto registry = registry_or_empty();
    const ltsf::RawSeries series = load_dataset(rc.dataset, registry);
    rc.spec.channels = series.channels();
    rc.spec.validate();
    const ltsf::PreparedData data =
        ltsf::prepare_data(series, rc.spec.input_len, rc.spec.horizon, {}, rc.borrow_context);

    ltsf::FitResult fitted = ltsf::fit(rc.spec, ltsf::init_model(rc.spec, rc.train.seed), data.train, data.val, rc.train,
                                       [](std::size_t epoch, double train_loss, double val_loss) {
                                           std::fprintf(stderr, "epoch %zu  train %.6f  val %.6f\n", epoch, train_loss,
                                                        val_loss);
                                       });
    const ltsf::Metrics val = ltsf::evaluate(rc.spec, fitted.best, data.val);
    const ltsf::Metrics test = ltsf::evaluate(rc.spec, fitted.best, data.test);

    const fs::path dir = rc.out / rc.name;
    ltsf::Checkpoint ck{rc.spec, fitted.best, {{"dataset", rc.dataset}, {"borrow_context", rc.borrow_context}}};
    ltsf::save_checkpoint(dir / "checkpoint.bin", ck);
    write_json(dir / "report.json", {{"config", rc.to_json()}, {"train", fitted.report.to_json()}});
    write_json(dir / "metrics.json", {{"config", rc.to_json()},
                                      {"val", {{"mse", val.mse}, {"mae", val.mae}}},
                                      {"test", {{"mse", test.mse}, {"mae", test.mae}}}});
    std::printf("best validation loss %.6f at epoch %zu\n", fitted.report.val_loss[fitted.report.best_epoch - 1],
                fitted.report.best_epoch);
    std::printf("test mse %.6f  mae %.6f\n", test.mse, test.mae);
    std::printf("wrote %s\n", dir.string().c_str());
    return 0;
}

struct CheckpointData {
    ltsf::Checkpoint ck;
    std::string dataset;
    ltsf::RawSeries series;
    ltsf::PreparedData data;
};

CheckpointData open_checkpoint(const std::string& path, const std::optional<std::string>& dataset) {
    CheckpointData cd{ltsf::load_checkpoint(path), {}, {}, {}};
    cd.dataset = dataset ? *dataset : cd.ck.metadata.value("dataset", std::string());
    if (cd.dataset.empty()) throw ltsf::ConfigError("--dataset is required");
    cd.series = load_dataset(cd.dataset, registry_or_empty());
    if (cd.series.channels() != cd.ck.spec.channels) {
        throw ltsf::ShapeError("checkpoint expects " + std::to_string(cd.ck.spec.channels) + " channels, dataset has " +
                               std::to_string(cd.series.channels()));
    }
    cd.data = ltsf::prepare_data(cd.series, cd.ck.spec.input_len, cd.ck.spec.horizon, {},
                                 cd.ck.metadata.value("borrow_context", false));
    return cd;
}

const ltsf::WindowSet& pick_split(const ltsf::PreparedData& data, const std::string& split) {
    if (split == "train") return data.train;
    if (split == "val") return data.val;
    if (split == "test") return data.test;
    throw ltsf::ConfigError("unknown split '" + split + "'");
}

int cmd_evaluate(const std::string& checkpoint, const std::optional<std::string>& dataset, const std::string& split,
                 const std::optional<std::string>& out) {
    const CheckpointData cd = open_checkpoint(checkpoint, dataset);
    const ltsf::Metrics m = ltsf::evaluate(cd.ck.spec, cd.ck.state, pick_split(cd.data, split));
    const json j = {{"dataset", cd.dataset}, {"split", split}, {"mse", m.mse}, {"mae", m.mae}};
    if (out) write_json(*out, j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_predict(const std::string& checkpoint, const std::optional<std::string>& dataset, std::size_t window,
                const std::string& split, const std::optional<std::string>& out) {
    const CheckpointData cd = open_checkpoint(checkpoint, dataset);
    const ltsf::WindowSet& windows = pick_split(cd.data, split);
    if (window >= windows.size()) {
        throw ltsf::ConfigError("window " + std::to_string(window) + " out of range; " + split + " has " +
                                std::to_string(windows.size()));
    }
    const ltsf::WindowSample s = windows.sample(window);
    const ltsf::Matrix pred = ltsf::predict(cd.ck.spec, cd.ck.state, s.input);
    std::ostringstream csv;
    csv.precision(17);
    csv << "t,channel,ground_truth,prediction\n";
    for (std::size_t t = 0; t < pred.rows(); ++t) {
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            csv << t << "," << cd.series.column_names[c] << "," << s.target(t, c) << "," << pred(t, c) << "\n";
        }
    }
    const fs::path path = out ? fs::path(*out) : fs::path(checkpoint).parent_path() / "predictions.csv";
    ltsf::write_file_atomic(path, csv.str());
    std::printf("wrote %zu rows to %s\n", pred.size(), path.string().c_str());
    return 0;
}

int cmd_benchmark(const std::string& grid_path, const std::optional<std::string>& out) {
    const ltsf::ExperimentGrid grid = ltsf::ExperimentGrid::from_json(read_json_file(grid_path, "grid"));
    const auto registry = registry_or_empty();
    const ltsf::MetricsReport report =
        ltsf::run_grid(grid, registry, ltsf::default_data_dir(), [](const ltsf::Cell& c) {
            if (c.ok()) {
                std::fprintf(stderr, "%s %s L=%zu T=%zu  mse %.4f  mae %.4f\n", c.model.c_str(), c.dataset.c_str(),
                             c.input_len, c.horizon, c.metrics->mse, c.metrics->mae);
            } else {
                std::fprintf(stderr, "%s %s L=%zu T=%zu  failed: %s\n", c.model.c_str(), c.dataset.c_str(), c.input_len,
                             c.horizon, c.error.c_str());
            }
        });
    const auto rows = ltsf::compare_to_reference(report, ltsf::ReferenceTable::builtin());
    const fs::path dir = fs::path(out ? *out : "runs") / (grid.name.empty() ? grid.dataset : grid.name);
    write_json(dir / "metrics.json", report.to_json());
    ltsf::write_file_atomic(dir / "metrics.md", report.to_markdown());
    write_json(dir / "comparison.json", ltsf::comparison_to_json(rows));
    ltsf::write_file_atomic(dir / "comparison.md", ltsf::comparison_to_markdown(rows));
    std::cout << report.to_markdown() << "\n" << ltsf::comparison_to_markdown(rows);
    std::printf("wrote %s\n", dir.string().c_str());
    if (report.succeeded() == 0) {
        std::cerr << "error: no cell succeeded\n";
        return 3;
    }
    return 0;
}

int exit_code(ltsf::ErrorCategory c) {
    switch (c) {
        case ltsf::ErrorCategory::input: return 2;
        case ltsf::ErrorCategory::config: return 3;
        case ltsf::ErrorCategory::numeric: return 4;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear-family long-horizon forecasting toolkit"};
    app.require_subcommand(1);

    Flags flags;
    std::string checkpoint, split = "test", grid;
    std::size_t window = 0;
    std::optional<std::string> out_file;

    auto* inspect = app.add_subcommand("inspect", "Summarize a dataset and check it against the registry");
    inspect->add_option("--dataset", flags.dataset, "Registered dataset name or CSV path")->required();

    auto* train = app.add_subcommand("train", "Train one model and write checkpoint, report and metrics");
    add_run_flags(train, flags);

    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a split");
    evaluate->add_option("--checkpoint", checkpoint)->required();
    evaluate->add_option("--dataset", flags.dataset, "Defaults to the dataset recorded in the checkpoint");
    evaluate->add_option("--split", split, "train | val | test");
    evaluate->add_option("--out", out_file, "Also write the metrics JSON here");

    auto* benchmark = app.add_subcommand("benchmark", "Run an experiment grid and compare with reference numbers");
    benchmark->add_option("--grid", grid, "Grid JSON file")->required();
    benchmark->add_option("--out", out_file, "Output root (default runs)");

    auto* predict = app.add_subcommand("predict", "Export one window's forecast as long-format CSV");
    predict->add_option("--checkpoint", checkpoint)->required();
    predict->add_option("--dataset", flags.dataset, "Defaults to the dataset recorded in the checkpoint");
    predict->add_option("--window", window, "Window index within the split");
    predict->add_option("--split", split, "train | val | test");
    predict->add_option("--out", out_file, "CSV path (default next to the checkpoint)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        if (*inspect) return cmd_inspect(flags);
        if (*train) return cmd_train(flags);
        if (*evaluate) return cmd_evaluate(checkpoint, flags.dataset, split, out_file);
        if (*benchmark) return cmd_benchmark(grid, out_file);
        if (*predict) return cmd_predict(checkpoint, flags.dataset, window, split, out_file);
    } catch (const ltsf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

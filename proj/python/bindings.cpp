#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>

#include "ltsf/checkpoint.hpp"
#include "ltsf/error.hpp"
#include "ltsf/evaluation.hpp"
#include "ltsf/layers.hpp"
#include "ltsf/matrix.hpp"
#include "ltsf/model.hpp"
#include "ltsf/series.hpp"
#include "ltsf/trainer.hpp"

namespace py = pybind11;
using ltsf::Matrix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() == 1) {
        std::vector<double> v(a.data(), a.data() + a.shape(0));
        return Matrix(static_cast<std::size_t>(a.shape(0)), 1, std::move(v));
    }
    if (a.ndim() != 2) throw ltsf::ShapeError("expected a 1-D or 2-D array, got " + std::to_string(a.ndim()) + "-D");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    std::vector<double> v(a.data(), a.data() + rows * cols);
    return Matrix(rows, cols, std::move(v));
}

Array to_array(const Matrix& m) {
    Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
    if (m.size()) std::memcpy(out.mutable_data(), m.data().data(), m.size() * sizeof(double));
    return out;
}

ltsf::GeluVariant parse_variant(const std::string& name) {
    if (name == "exact") return ltsf::GeluVariant::exact;
    if (name == "tanh") return ltsf::GeluVariant::tanh;
    throw ltsf::ConfigError("unknown GeLU variant '" + name + "'");
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict series_to_dict(const ltsf::RawSeries& s) {
    py::dict d;
    d["name"] = s.name;
    d["timestamps"] = s.timestamps;
    d["values"] = to_array(s.values);
    d["columns"] = s.column_names;
    return d;
}

ltsf::RawSeries series_from_values(const Array& values) {
    ltsf::RawSeries s;
    s.name = "array";
    s.values = to_matrix(values);
    s.timestamps.resize(s.values.rows());
    for (std::size_t i = 0; i < s.timestamps.size(); ++i) s.timestamps[i] = static_cast<std::int64_t>(i) * 3600;
    for (std::size_t c = 0; c < s.values.cols(); ++c) s.column_names.push_back("c" + std::to_string(c));
    return s;
}

// Spec plus parameters; the Python-facing handle for a model.
struct Model {
    ltsf::ModelSpec spec;
    ltsf::ModelState state;
    nlohmann::json metadata = nlohmann::json::object();
};

Model make_model(const std::string& kind, std::size_t input_len, std::size_t horizon, std::size_t channels,
                 std::size_t depth, double dropout, std::size_t kernel, std::uint64_t seed) {
    Model m;
    m.spec.kind = ltsf::parse_model_kind(kind);
    m.spec.input_len = input_len;
    m.spec.horizon = horizon;
    m.spec.channels = channels;
    m.spec.depth = depth;
    m.spec.dropout_rate = dropout;
    m.spec.ma_kernel = kernel;
    m.spec.validate();
    m.state = ltsf::init_model(m.spec, seed);
    return m;
}

py::dict metrics_dict(const ltsf::Metrics& m) {
    py::dict d;
    d["mse"] = m.mse;
    d["mae"] = m.mae;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ltsf, m) {
    m.doc() = "Linear long-horizon forecasting models";

    auto base = py::register_exception<ltsf::Error>(m, "LtsfError", PyExc_RuntimeError);
    py::register_exception<ltsf::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ltsf::ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<ltsf::WindowError>(m, "WindowError", base.ptr());
    py::register_exception<ltsf::ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ltsf::LoadError>(m, "LoadError", base.ptr());
    py::register_exception<ltsf::NumericError>(m, "NumericError", base.ptr());

    m.def("matmul", [](const Array& a, const Array& b) { return to_array(ltsf::matmul(to_matrix(a), to_matrix(b))); });
    m.def("gelu", [](const Array& x, const std::string& variant) {
        return to_array(ltsf::gelu(to_matrix(x), parse_variant(variant)));
    }, py::arg("x"), py::arg("variant") = "exact");
    m.def("moving_average", [](const Array& x, std::size_t kernel) {
        return to_array(ltsf::moving_average(to_matrix(x), kernel));
    });
    m.def("decompose", [](const Array& x, std::size_t kernel) {
        auto d = ltsf::decompose(to_matrix(x), kernel);
        return py::make_tuple(to_array(d.seasonal), to_array(d.trend));
    }, py::arg("x"), py::arg("kernel") = 25, "Returns (seasonal, trend).");

    m.def("splitmix64_mix", &ltsf::splitmix64_mix);
    m.def("rng_u64", [](std::uint64_t seed, std::size_t count) {
        ltsf::Rng rng(seed);
        std::vector<std::uint64_t> out(count);
        for (auto& v : out) v = rng.next_u64();
        return out;
    });
    m.def("cell_seed", [](std::uint64_t seed, const std::string& dataset, const std::string& model,
                          std::size_t input_len, std::size_t horizon) {
        return ltsf::cell_seed(seed, dataset, ltsf::parse_model_kind(model), input_len, horizon);
    });

    m.def("load_csv", [](const std::string& path) { return series_to_dict(ltsf::load_csv(path)); });
    m.def("parse_csv", [](const std::string& text, const std::string& name) {
        return series_to_dict(ltsf::parse_csv(text, name));
    }, py::arg("text"), py::arg("name") = "inline");
    m.def("split_lengths", [](std::size_t length, double train, double val, double test) {
        auto s = ltsf::split_lengths(length, {train, val, test});
        return py::make_tuple(s.train, s.val, s.test);
    }, py::arg("length"), py::arg("train") = 0.6, py::arg("val") = 0.2, py::arg("test") = 0.2);

    py::class_<Model>(m, "Model")
        .def(py::init(&make_model), py::arg("kind"), py::arg("input_len"), py::arg("horizon"),
             py::arg("channels") = 1, py::arg("depth") = 4, py::arg("dropout") = 0.1, py::arg("kernel") = 25,
             py::arg("seed") = 1)
        .def_property_readonly("kind", [](const Model& s) { return ltsf::to_string(s.spec.kind); })
        .def_property_readonly("input_len", [](const Model& s) { return s.spec.input_len; })
        .def_property_readonly("horizon", [](const Model& s) { return s.spec.horizon; })
        .def_property_readonly("channels", [](const Model& s) { return s.spec.channels; })
        .def_property_readonly("metadata", [](const Model& s) { return json_to_py(s.metadata); })
        .def("parameter_names", [](const Model& s) { return s.state.params.names(); })
        .def("parameter", [](const Model& s, const std::string& name) { return to_array(s.state.params.at(name)); })
        .def("predict", [](const Model& s, const Array& x) {
            return to_array(ltsf::predict(s.spec, s.state, to_matrix(x)));
        }, "Eval-mode forward on packed L x (B*N) windows.")
        .def("fit", [](Model& s, const Array& values, double lr, std::size_t batch, std::size_t epochs,
                       std::size_t patience, std::uint64_t seed) {
            auto series = series_from_values(values);
            auto data = ltsf::prepare_data(series, s.spec.input_len, s.spec.horizon);
            ltsf::TrainConfig cfg;
            cfg.learning_rate = lr;
            cfg.batch_size = batch;
            cfg.max_epochs = epochs;
            cfg.patience = patience;
            cfg.seed = seed;
            cfg.validate();
            ltsf::TrainReport train_report;
            ltsf::Metrics test;
            {
                py::gil_scoped_release release;
                auto result = ltsf::fit(s.spec, s.state, data.train, data.val, cfg);
                s.state = std::move(result.best);
                train_report = std::move(result.report);
                test = ltsf::evaluate(s.spec, s.state, data.test);
            }
            auto report = json_to_py(train_report.to_json()).cast<py::dict>();
            report["test"] = metrics_dict(test);
            py::dict scaler;
            scaler["mean"] = data.scaler.mean;
            scaler["std"] = data.scaler.std;
            report["scaler"] = scaler;
            return report;
        }, py::arg("values"), py::arg("lr") = 1e-3, py::arg("batch") = 32, py::arg("epochs") = 10,
           py::arg("patience") = 3, py::arg("seed") = 1,
           "Trains on a (length x channels) array split 6:2:2 and scaled on the train part.\n"
           "Returns the training report plus test metrics and the fitted scaler.")
        .def("evaluate", [](const Model& s, const Array& values) {
            auto series = series_from_values(values);
            return metrics_dict(ltsf::evaluate(s.spec, s.state, ltsf::make_windows(series, s.spec.input_len, s.spec.horizon)));
        }, "Metrics over every window of an already scaled (length x channels) array.")
        .def("save", [](const Model& s, const std::string& path) {
            ltsf::save_checkpoint(path, {s.spec, s.state, s.metadata});
        })
        .def_static("load", [](const std::string& path) {
            auto ck = ltsf::load_checkpoint(path);
            Model out;
            out.spec = ck.spec;
            out.state = std::move(ck.state);
            out.metadata = std::move(ck.metadata);
            return out;
        });

    m.def("run_grid", [](const py::object& grid, const Array& values) {
        auto g = ltsf::ExperimentGrid::from_json(py_to_json(grid));
        auto series = series_from_values(values);
        series.name = g.dataset;
        ltsf::MetricsReport report;
        {
            py::gil_scoped_release release;
            report = ltsf::run_grid(g, series);
        }
        return json_to_py(report.to_json());
    }, py::arg("grid"), py::arg("values"), "Runs an experiment grid on an in-memory series; returns the metrics JSON.");
}

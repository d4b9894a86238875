#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ltsf/error.hpp"
#include "ltsf/evaluation.hpp"
#include "ltsf/numeric.hpp"

using namespace ltsf;

namespace {

RawSeries synthetic(std::size_t n, std::size_t channels) {
    RawSeries s;
    s.name = "toy";
    s.values = Matrix(n, channels);
    for (std::size_t r = 0; r < n; ++r) {
        s.timestamps.push_back(static_cast<std::int64_t>(r) * 3600);
        for (std::size_t c = 0; c < channels; ++c) {
            s.values(r, c) = std::sin(static_cast<double>(r) / (3.0 + static_cast<double>(c))) + 0.01 * static_cast<double>(r);
        }
    }
    s.column_names.assign(channels, "v");
    return s;
}

ExperimentGrid toy_grid() {
    ExperimentGrid g;
    g.name = "toy";
    g.dataset = "toy";
    g.input_len = 16;
    g.horizons = {4, 8};
    g.models = {ModelKind::linear, ModelKind::rs_glinear};
    g.train.max_epochs = 2;
    return g;
}

}  // namespace

TEST_CASE("evaluate examples") {
    ModelSpec s;
    s.kind = ModelKind::linear;
    s.input_len = 3;
    s.horizon = 3;
    s.channels = 2;
    ModelState st = init_model(s, 1);
    RawSeries flat;
    flat.values = Matrix(10, 2, 0.7);
    const WindowSet w = make_windows(flat.values, 3, 3);
    st.params.at("W") = Matrix::identity(3);
    st.params.at("b") = Matrix(3, 1);
    const Metrics perfect = evaluate(s, st, w);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.mae == 0.0);

    Rng rng(2);
    const Matrix noise = init_uniform(rng, 40, 2, 1.0);
    const WindowSet nw = make_windows(noise, 3, 3);
    st.params.at("W") = Matrix(3, 3);
    double var = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < nw.size(); ++k) {
        const WindowSample x = nw.sample(k);
        for (double v : x.target.data()) {
            var += v * v;
            ++count;
        }
    }
    const Metrics zero = evaluate(s, st, nw, 5);
    CHECK(zero.mse == doctest::Approx(var / static_cast<double>(count)).epsilon(1e-12));
    CHECK(evaluate(s, st, nw, 1).mse == doctest::Approx(zero.mse).epsilon(1e-12));
    CHECK_THROWS_AS(evaluate(s, st, WindowSet{}), ConfigError);
}

TEST_CASE("cell seeds are stable and cell-scoped") {
    const std::uint64_t a = cell_seed(1, "ili", ModelKind::rs_glinear, 96, 60);
    CHECK(a == cell_seed(1, "ili", ModelKind::rs_glinear, 96, 60));
    CHECK(a != cell_seed(2, "ili", ModelKind::rs_glinear, 96, 60));
    CHECK(a != cell_seed(1, "ili", ModelKind::rs_glinear, 96, 48));
    CHECK(a != cell_seed(1, "ili", ModelKind::glinear, 96, 60));
}

TEST_CASE("grid json") {
    const auto g = ExperimentGrid::from_json(
        {{"dataset", "ili"}, {"input", 96}, {"horizons", {24, 36, 48, 60}}, {"models", {"rs_glinear"}}, {"lr", 0.01}});
    CHECK(g.horizons.size() == 4);
    CHECK(g.train.learning_rate == 0.01);
    CHECK(g.name == "ili");
    CHECK(ExperimentGrid::from_json(g.to_json()).to_json() == g.to_json());
    CHECK(ExperimentGrid::from_json({{"dataset", "etth1"}, {"horizons", {720}}, {"models", {"glinear"}},
                                     {"lr_profile", "etth1"}})
              .train.learning_rate == 0.01);
    CHECK_THROWS_AS(ExperimentGrid::from_json(nlohmann::json::object()), ConfigError);
    CHECK_THROWS_AS(ExperimentGrid::from_json({{"dataset", "x"}, {"horizons", {24, 24}}, {"models", {"linear"}}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentGrid::from_json({{"dataset", "x"}, {"horizons", {0}}, {"models", {"linear"}}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentGrid::from_json({{"dataset", "x"}, {"horizons", "24"}, {"models", {"linear"}}}),
                    ConfigError);
}

TEST_CASE("run_grid fills cells, records failures and is reproducible") {
    const RawSeries s = synthetic(200, 2);
    ExperimentGrid g = toy_grid();
    g.horizons.push_back(30);  // val segment of 40 rows cannot hold 16 + 30
    const MetricsReport a = run_grid(g, s);
    REQUIRE(a.cells.size() == 6);
    CHECK(a.succeeded() == 4);
    const Cell* bad = a.find("linear", "toy", 16, 30);
    REQUIRE(bad != nullptr);
    CHECK_FALSE(bad->ok());
    CHECK(bad->error.find("window too long") != std::string::npos);
    const MetricsReport b = run_grid(g, s);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.to_markdown().find("| rs_glinear | toy | 16 | 8 |") != std::string::npos);
}

TEST_CASE("a cell does not depend on the rest of the grid") {
    const RawSeries s = synthetic(200, 2);
    const MetricsReport full = run_grid(toy_grid(), s);
    ExperimentGrid one = toy_grid();
    one.models = {ModelKind::rs_glinear};
    one.horizons = {8};
    const MetricsReport single = run_grid(one, s);
    CHECK(single.cells[0].metrics->mse == full.find("rs_glinear", "toy", 16, 8)->metrics->mse);
}

TEST_CASE("median over seeds") {
    const RawSeries s = synthetic(200, 1);
    ExperimentGrid g = toy_grid();
    g.models = {ModelKind::linear};
    g.horizons = {4};
    g.seeds = {1, 2, 3};
    const Cell c = run_cell(g, s, ModelKind::linear, 4);
    REQUIRE(c.runs.size() == 3);
    std::vector<double> m{c.runs[0].test.mse, c.runs[1].test.mse, c.runs[2].test.mse};
    std::sort(m.begin(), m.end());
    CHECK(c.metrics->mse == m[1]);
}

TEST_CASE("comparison against reference numbers") {
    ReferenceTable ref;
    ref.entries.push_back({"glinear", "electricity", 336, 12, 0.0883, 0.1860, "Table 2-a"});
    ref.entries.push_back({"zero", "electricity", 336, 12, 0.0, 0.0, "test"});
    MetricsReport ours;
    ours.cells.push_back({"rs_glinear", "electricity", 336, 12, Metrics{0.0836, 0.1802}, {}, ""});
    const auto rows = compare_to_reference(ours, ref);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].metric == "mse");
    CHECK(std::round(*rows[0].percent * 10.0) / 10.0 == -5.3);
    CHECK(rows[0].delta == doctest::Approx(-0.0047));
    CHECK(rows[0].ours_lower);
    CHECK_FALSE(rows[2].percent.has_value());
    CHECK(comparison_to_markdown(rows).find("n/a") != std::string::npos);
    CHECK(comparison_to_json(rows)[2]["percent"].is_null());

    ReferenceTable same;
    same.entries.push_back({"glinear", "electricity", 336, 12, 0.0836, 0.1802, "x"});
    const auto eq = compare_to_reference(ours, same);
    CHECK(eq[0].delta == 0.0);
    CHECK(*eq[0].percent == 0.0);

    MetricsReport swapped;
    swapped.cells.push_back({"glinear", "electricity", 336, 12, Metrics{0.0883, 0.1860}, {}, ""});
    ReferenceTable swapped_ref;
    swapped_ref.entries.push_back({"rs_glinear", "electricity", 336, 12, 0.0836, 0.1802, "x"});
    CHECK(compare_to_reference(swapped, swapped_ref)[0].delta == -rows[0].delta);
}

TEST_CASE("shipped reference table") {
    const ReferenceTable t = ReferenceTable::builtin();
    CHECK(t.version == "1");
    const ReferenceEntry* rs = t.find("rs_glinear", "ili", 96, 60);
    REQUIRE(rs != nullptr);
    CHECK(rs->mse == 1.7728);
    CHECK(rs->mae == 0.9840);
    CHECK(rs->source == "Table 3-a");
    const ReferenceEntry* auto60 = t.find("autoformer", "ili", 96, 60);
    REQUIRE(auto60 != nullptr);
    CHECK(auto60->mse == 2.7700);

    MetricsReport ours;
    ours.cells.push_back({"rs_glinear", "ili", 96, 60, Metrics{rs->mse, rs->mae}, {}, ""});
    for (const auto& row : compare_to_reference(ours, t)) {
        if (row.reference_model == "autoformer") CHECK(row.ours_lower);
    }
    CHECK(t.find("glinear", "electricity", 336, 12)->mse == 0.0883);
    CHECK(t.find("rs_glinear", "exchange_rate", 96, 96)->mse == 0.0985);
    CHECK(t.find("nlinear", "electricity", 336, 48)->mse == 0.1255);
    CHECK(t.find("nlinear", "electricity", 336, 12) == nullptr);
    for (const auto& e : t.entries) CHECK_FALSE(e.source.empty());
    CHECK(t.notes.contains("table_2a_unattributed_rows"));
}

TEST_CASE("shipped dataset registry") {
    const DatasetRegistry r = DatasetRegistry::builtin();
    const DatasetInfo* ili = r.find("ili");
    REQUIRE(ili != nullptr);
    CHECK(ili->length == 966);
    CHECK(ili->channels == 7);
    CHECK(ili->sample_rate == "weekly");
    CHECK(r.find("etth1")->length == 17420);
    CHECK(r.resolve("ili", "/data") == std::filesystem::path("/data/national_illness.csv"));
    CHECK(r.resolve("my.csv", "/data") == std::filesystem::path("my.csv"));
}

TEST_CASE("ETTh1-sized splits hold L=336, T=720 windows") {
    const auto len = split_lengths(17420, {});
    for (std::size_t n : {len.train, len.val, len.test}) CHECK(n >= 336 + 720);
}

TEST_CASE("registry checks report mismatches") {
    const RawSeries s = synthetic(50, 2);
    CHECK(check_against_registry(s, {"toy", "toy.csv", 2, 50, "1 hour"}).empty());
    CHECK(check_against_registry(s, {"toy", "toy.csv", 3, 51, "weekly"}).size() == 3);
}

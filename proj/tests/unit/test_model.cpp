#include <cmath>

#include "doctest.h"
#include "ltsf/checkpoint.hpp"
#include "ltsf/error.hpp"
#include "ltsf/model.hpp"
#include "ltsf/trainer.hpp"
#include "oracles.hpp"

using namespace ltsf;

namespace {

ModelSpec small(ModelKind kind, std::size_t L = 8, std::size_t T = 4, std::size_t N = 2) {
    ModelSpec s;
    s.kind = kind;
    s.input_len = L;
    s.horizon = T;
    s.channels = N;
    s.ma_kernel = 3;
    return s;
}

void zero_all(ModelState& st) {
    for (std::size_t i = 0; i < st.params.size(); ++i) {
        const std::string& n = st.params.name(i);
        if (n != "alpha" && n != "beta") st.params.value(i) = Matrix(st.params.value(i).rows(), st.params.value(i).cols());
    }
}

}  // namespace

TEST_CASE("spec validation") {
    ModelSpec s = small(ModelKind::dlinear);
    s.ma_kernel = 4;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small(ModelKind::rs_glinear);
    s.dropout_rate = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small(ModelKind::linear, 0);
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK(parse_model_kind("rs_glinear") == ModelKind::rs_glinear);
    CHECK_THROWS_AS(parse_model_kind("transformer"), ConfigError);
}

TEST_CASE("linear with identity weights copies the input") {
    const ModelSpec s = small(ModelKind::linear, 5, 5, 3);
    ModelState st = init_model(s, 1);
    st.params.at("W") = Matrix::identity(5);
    st.params.at("b") = Matrix(5, 1);
    Rng rng(2);
    const Matrix x = init_uniform(rng, 5, 6, 2.0);
    CHECK(predict(s, st, x) == x);
}

TEST_CASE("nlinear with zero weights carries the last value") {
    const ModelSpec s = small(ModelKind::nlinear, 6, 3, 1);
    ModelState st = init_model(s, 1);
    zero_all(st);
    const Matrix x{{1}, {4}, {-2}, {0}, {7}, {5}};
    CHECK(predict(s, st, x) == Matrix(3, 1, 5.0));
}

TEST_CASE("rs_glinear with zero blocks equals the head on normalized input") {
    const ModelSpec rs = small(ModelKind::rs_glinear);
    ModelSpec rl = rs;
    rl.kind = ModelKind::rlinear;
    ModelState a = init_model(rs, 4);
    ModelState b = init_model(rl, 4);
    for (std::size_t i = 1; i <= rs.depth; ++i) {
        a.params.at("W_" + std::to_string(i)) = Matrix(8, 8);
        a.params.at("b_" + std::to_string(i)) = Matrix(8, 1);
    }
    b.params.at("W") = a.params.at("W_out");
    b.params.at("b") = a.params.at("b_out");
    a.params.at("alpha") = Matrix{{1.2}, {0.8}};
    a.params.at("beta") = Matrix{{0.1}, {-0.3}};
    b.params.at("alpha") = a.params.at("alpha");
    b.params.at("beta") = a.params.at("beta");
    Rng rng(9);
    const Matrix x = init_uniform(rng, 8, 10, 2.0);
    CHECK(predict(rs, a, x) == predict(rl, b, x));
}

TEST_CASE("gradient sweep over every model kind") {
    for (ModelKind kind : all_model_kinds()) {
        CAPTURE(to_string(kind));
        const oracle::GradientCheck g = oracle::check_gradients(small(kind), 17);
        CAPTURE(g.worst_parameter);
        CHECK(g.worst < 1e-4);
        CHECK(g.input_ok);
    }
}

TEST_CASE("zero upstream gives zero gradients") {
    for (ModelKind kind : all_model_kinds()) {
        const ModelSpec s = small(kind);
        ModelState st = init_model(s, 3);
        Rng rng(1);
        const ForwardResult f = forward(s, st, init_uniform(rng, 8, 4, 2.0));
        const Gradients g = backward(s, st, f.cache, Matrix(4, 4));
        for (std::size_t i = 0; i < g.params.size(); ++i) CHECK(g.params.value(i) == Matrix(g.params.value(i).rows(), g.params.value(i).cols()));
    }
}

TEST_CASE("linear weight gradient is upstream times input transpose") {
    const ModelSpec s = small(ModelKind::linear, 6, 3, 2);
    ModelState st = init_model(s, 5);
    Rng rng(3);
    const Matrix x = init_uniform(rng, 6, 8, 2.0);
    const Matrix up = init_uniform(rng, 3, 8, 1.0);
    const ForwardResult f = forward(s, st, x);
    const Gradients g = backward(s, st, f.cache, up);
    Matrix expected(3, 6);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t l = 0; l < 6; ++l)
            for (std::size_t j = 0; j < 8; ++j) expected(t, l) += up(t, j) * x(l, j);
    CHECK(max_abs_diff(g.params.at("W"), expected) < 1e-13);
}

TEST_CASE("channels are independent with shared weights") {
    for (ModelKind kind : all_model_kinds()) {
        const ModelSpec s = small(kind, 8, 4, 3);
        ModelState st = init_model(s, 12);
        if (s.uses_revin()) {
            st.params.at("alpha") = Matrix{{1}, {1}, {1}};
        }
        Rng rng(4);
        const Matrix x = init_uniform(rng, 8, 3, 2.0);
        Matrix swapped(8, 3);
        const std::size_t perm[3] = {2, 0, 1};
        for (std::size_t r = 0; r < 8; ++r)
            for (std::size_t c = 0; c < 3; ++c) swapped(r, c) = x(r, perm[c]);
        const Matrix p = predict(s, st, x);
        const Matrix q = predict(s, st, swapped);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 3; ++c) CHECK(q(r, c) == p(r, perm[c]));
    }
}

TEST_CASE("eval forward is deterministic and leaves the dropout stream alone") {
    const ModelSpec s = small(ModelKind::rs_glinear);
    ModelState st = init_model(s, 2);
    st.mode = Mode::eval;
    Rng rng(1);
    const Matrix x = init_uniform(rng, 8, 4, 2.0);
    const Rng before = st.dropout_rng;
    const Matrix a = forward(s, st, x).prediction;
    CHECK(forward(s, st, x).prediction == a);
    CHECK(st.dropout_rng == before);
    CHECK(predict(s, st, x) == a);
}

TEST_CASE("backward rejects stale or foreign caches") {
    const ModelSpec s = small(ModelKind::rlinear);
    ModelState st = init_model(s, 2);
    Rng rng(1);
    const ForwardResult f = forward(s, st, init_uniform(rng, 8, 2, 2.0));
    CHECK_THROWS_AS(backward(s, st, ForwardCache{}, Matrix(4, 2)), ContractError);
    ModelState bumped = st;
    ++bumped.version;
    CHECK_THROWS_AS(backward(s, bumped, f.cache, Matrix(4, 2)), ContractError);
    ModelSpec other = s;
    other.kind = ModelKind::linear;
    CHECK_THROWS(backward(other, init_model(other, 2), f.cache, Matrix(4, 2)));
}

TEST_CASE("forward rejects wrong input shapes") {
    const ModelSpec s = small(ModelKind::linear);
    ModelState st = init_model(s, 1);
    CHECK_THROWS_AS(forward(s, st, Matrix(7, 2)), ShapeError);
    CHECK_THROWS_AS(forward(s, st, Matrix(8, 3)), ShapeError);
}

TEST_CASE("parameter layout per kind") {
    CHECK(init_model(small(ModelKind::linear), 1).params.names() == std::vector<std::string>{"W", "b"});
    CHECK(init_model(small(ModelKind::dlinear), 1).params.names() ==
          std::vector<std::string>{"W_s", "b_s", "W_t", "b_t"});
    const ModelState rs = init_model(small(ModelKind::rs_glinear), 1);
    CHECK(rs.params.size() == 12);
    CHECK(rs.params.at("W_4").rows() == 8);
    CHECK(rs.params.at("W_out").rows() == 4);
    CHECK(rs.params.at("alpha") == Matrix{{1}, {1}});
    for (std::size_t i = 0; i < rs.params.size(); ++i) {
        for (double v : rs.params.value(i).data()) CHECK(std::abs(v) <= 1.0 / std::sqrt(8.0) + (rs.params.name(i) == "alpha"));
    }
    ModelState broken = rs;
    broken.params.at("W_out") = Matrix(3, 8);
    CHECK_THROWS_AS(validate_state(small(ModelKind::rs_glinear), broken), ShapeError);
}

TEST_CASE("checkpoint round trip") {
    const ModelSpec s = small(ModelKind::rs_glinear);
    Checkpoint ck{s, init_model(s, 42), {{"dataset", "toy"}}};
    const std::string bytes = encode_checkpoint(ck);
    CHECK(bytes.substr(0, 8) == "LTSFCKPT");
    const Checkpoint back = decode_checkpoint(bytes);
    CHECK(back.state.params == ck.state.params);
    CHECK(back.spec.depth == s.depth);
    CHECK(back.metadata["dataset"] == "toy");
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), ParseError);
    CHECK_THROWS_AS(decode_checkpoint("not a checkpoint at all"), ParseError);
    std::string wrong = bytes;
    wrong[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(wrong), ParseError);
}

#include "ltsf/model.hpp"

#include <algorithm>
#include <cmath>

#include "ltsf/error.hpp"
#include "ltsf/numeric.hpp"

namespace ltsf {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::linear: return "linear";
        case ModelKind::nlinear: return "nlinear";
        case ModelKind::dlinear: return "dlinear";
        case ModelKind::rlinear: return "rlinear";
        case ModelKind::glinear: return "glinear";
        case ModelKind::rs_glinear: return "rs_glinear";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    for (ModelKind k : all_model_kinds()) {
        if (to_string(k) == name) return k;
    }
    if (name == "rs-glinear" || name == "rsglinear") return ModelKind::rs_glinear;
    throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds{ModelKind::linear,  ModelKind::nlinear, ModelKind::dlinear,
                                              ModelKind::rlinear, ModelKind::glinear, ModelKind::rs_glinear};
    return kinds;
}

void ModelSpec::validate() const {
    if (input_len < 1 || horizon < 1 || channels < 1) throw ConfigError("input length, horizon and channels must be >= 1");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (ma_kernel < 1 || ma_kernel % 2 == 0) throw ConfigError("moving average kernel must be odd and >= 1");
    if (!(revin_epsilon >= 0.0)) throw ConfigError("RevIN epsilon must be non-negative");
}

bool ModelSpec::uses_revin() const noexcept {
    return kind == ModelKind::rlinear || kind == ModelKind::glinear || kind == ModelKind::rs_glinear;
}

void Parameters::add(std::string name, Matrix value) {
    if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
}

Matrix& Parameters::at(std::string_view name) {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ConfigError("no parameter named '" + std::string(name) + "'");
    return values_[static_cast<std::size_t>(it - names_.begin())];
}

const Matrix& Parameters::at(std::string_view name) const {
    return const_cast<Parameters*>(this)->at(name);
}

bool Parameters::contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t Parameters::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

bool Parameters::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](const Matrix& m) { return m.all_finite(); });
}

std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> parameter_layout(const ModelSpec& spec) {
    const std::size_t L = spec.input_len;
    const std::size_t T = spec.horizon;
    std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> layout;
    switch (spec.kind) {
        case ModelKind::linear:
        case ModelKind::nlinear:
        case ModelKind::rlinear:
            layout = {{"W", {T, L}}, {"b", {T, 1}}};
            break;
        case ModelKind::dlinear:
            layout = {{"W_s", {T, L}}, {"b_s", {T, 1}}, {"W_t", {T, L}}, {"b_t", {T, 1}}};
            break;
        case ModelKind::glinear:
            layout = {{"W_1", {L, L}}, {"b_1", {L, 1}}, {"W_out", {T, L}}, {"b_out", {T, 1}}};
            break;
        case ModelKind::rs_glinear:
            for (std::size_t i = 1; i <= spec.depth; ++i) {
                layout.push_back({"W_" + std::to_string(i), {L, L}});
                layout.push_back({"b_" + std::to_string(i), {L, 1}});
            }
            layout.push_back({"W_out", {T, L}});
            layout.push_back({"b_out", {T, 1}});
            break;
    }
    if (spec.uses_revin()) {
        layout.push_back({"alpha", {spec.channels, 1}});
        layout.push_back({"beta", {spec.channels, 1}});
    }
    return layout;
}

ModelState init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ModelState state;
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.input_len));
    for (const auto& [name, shape] : parameter_layout(spec)) {
        if (name == "alpha") {
            state.params.add(name, Matrix(shape.first, shape.second, 1.0));
        } else if (name == "beta") {
            state.params.add(name, Matrix(shape.first, shape.second, 0.0));
        } else {
            state.params.add(name, init_uniform(rng, shape.first, shape.second, bound));
        }
    }
    // Dropout draws from a stream independent of the initialization draws.
    state.dropout_rng = Rng(splitmix64_mix(seed ^ 0xD1B54A32D192ED03ULL));
    return state;
}

void validate_state(const ModelSpec& spec, const ModelState& state) {
    const auto layout = parameter_layout(spec);
    if (layout.size() != state.params.size()) {
        throw ShapeError(to_string(spec.kind) + " expects " + std::to_string(layout.size()) + " parameters, state has " +
                         std::to_string(state.params.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& [name, shape] = layout[i];
        const Matrix& m = state.params.value(i);
        if (state.params.name(i) != name || m.rows() != shape.first || m.cols() != shape.second) {
            throw ShapeError("parameter " + std::to_string(i) + " is '" + state.params.name(i) + "' " + m.shape_string() +
                             ", expected '" + name + "' " + std::to_string(shape.first) + "x" +
                             std::to_string(shape.second));
        }
    }
}

namespace {

Matrix affine(const Matrix& w, const Matrix& b, const Matrix& x) {
    Matrix y = matmul(w, x);
    add_column_bias(y, b);
    return y;
}

void check_input(const ModelSpec& spec, const Matrix& input) {
    if (input.rows() != spec.input_len || input.cols() == 0 || input.cols() % spec.channels != 0) {
        throw ShapeError("model input " + input.shape_string() + " does not match L=" + std::to_string(spec.input_len) +
                         " with a multiple of N=" + std::to_string(spec.channels) + " columns");
    }
}

// Shared forward path. `rng` may only be null in eval mode; `cache` may be null.
Matrix run(const ModelSpec& spec, const Parameters& p, const Matrix& input, Mode mode, Rng* rng, ForwardCache* cache) {
    check_input(spec, input);
    const std::size_t cols = input.cols();
    if (cache) {
        cache->kind = spec.kind;
        cache->input = input;
    }

    switch (spec.kind) {
        case ModelKind::linear:
            return affine(p.at("W"), p.at("b"), input);

        case ModelKind::nlinear: {
            Matrix centered = input;
            const std::size_t last = input.rows() - 1;
            for (std::size_t r = 0; r < input.rows(); ++r)
                for (std::size_t c = 0; c < cols; ++c) centered(r, c) = input(r, c) - input(last, c);
            Matrix y = affine(p.at("W"), p.at("b"), centered);
            for (std::size_t r = 0; r < y.rows(); ++r)
                for (std::size_t c = 0; c < cols; ++c) y(r, c) += input(last, c);
            if (cache) cache->centered = std::move(centered);
            return y;
        }

        case ModelKind::dlinear: {
            Decomposition parts = decompose(input, spec.ma_kernel);
            Matrix y = elementwise(affine(p.at("W_s"), p.at("b_s"), parts.seasonal),
                                   affine(p.at("W_t"), p.at("b_t"), parts.trend), ElementOp::add);
            if (cache) {
                cache->seasonal = std::move(parts.seasonal);
                cache->trend = std::move(parts.trend);
            }
            return y;
        }

        case ModelKind::rlinear:
        case ModelKind::glinear:
        case ModelKind::rs_glinear: {
            const Matrix& alpha = p.at("alpha");
            const Matrix& beta = p.at("beta");
            RevInNormalized norm = revin_normalize(input, alpha, beta, spec.revin_epsilon);
            Matrix z = norm.output;

            if (spec.kind == ModelKind::glinear) {
                Matrix h = affine(p.at("W_1"), p.at("b_1"), z);
                Matrix a = gelu(h);
                if (cache) {
                    cache->block_inputs.push_back(z);
                    cache->pre_activations.push_back(std::move(h));
                }
                z = std::move(a);
            } else if (spec.kind == ModelKind::rs_glinear) {
                for (std::size_t i = 1; i <= spec.depth; ++i) {
                    const std::string idx = std::to_string(i);
                    Matrix h = affine(p.at("W_" + idx), p.at("b_" + idx), z);
                    Matrix mask;
                    Matrix branch = gelu(h);
                    if (mode == Mode::train && spec.dropout_rate > 0.0) {
                        DropoutResult dropped = dropout(branch, spec.dropout_rate, mode, *rng);
                        branch = std::move(dropped.output);
                        mask = std::move(dropped.mask);
                    }
                    Matrix next = elementwise(branch, z, ElementOp::add);
                    if (cache) {
                        cache->block_inputs.push_back(std::move(z));
                        cache->pre_activations.push_back(std::move(h));
                        cache->dropout_masks.push_back(std::move(mask));
                    }
                    z = std::move(next);
                }
            }

            const std::string w = spec.kind == ModelKind::rlinear ? "W" : "W_out";
            const std::string b = spec.kind == ModelKind::rlinear ? "b" : "b_out";
            Matrix yhat = affine(p.at(w), p.at(b), z);
            Matrix out = revin_denormalize(yhat, norm.stats, alpha, beta);
            if (cache) {
                cache->normalized = std::move(norm.output);
                cache->stats = std::move(norm.stats);
                cache->head_input = std::move(z);
                cache->head_output = std::move(yhat);
            }
            return out;
        }
    }
    throw ConfigError("unhandled model kind");
}

struct LinearGrad {
    Matrix w, b, x;
};

LinearGrad affine_backward(const Matrix& w, const Matrix& x, const Matrix& upstream) {
    return {matmul_bt(upstream, x), row_sums(upstream), matmul_at(w, upstream)};
}

void accumulate(Matrix& into, const Matrix& g) {
    for (std::size_t i = 0; i < into.size(); ++i) into.data()[i] += g.data()[i];
}

}  // namespace

ForwardResult forward(const ModelSpec& spec, ModelState& state, const Matrix& input) {
    ForwardResult result;
    result.prediction = run(spec, state.params, input, state.mode, &state.dropout_rng, &result.cache);
    result.cache.version = state.version;
    result.cache.valid = true;
    return result;
}

Matrix predict(const ModelSpec& spec, const ModelState& state, const Matrix& input) {
    return run(spec, state.params, input, Mode::eval, nullptr, nullptr);
}

Gradients backward(const ModelSpec& spec, const ModelState& state, const ForwardCache& cache, const Matrix& loss_grad) {
    if (!cache.valid) throw ContractError("backward called without a forward cache");
    if (cache.kind != spec.kind) throw ContractError("cache was produced by a different model kind");
    if (cache.version != state.version) throw ContractError("cache is stale: parameters changed since forward");
    if (loss_grad.rows() != spec.horizon || loss_grad.cols() != cache.input.cols()) {
        throw ShapeError("loss gradient " + loss_grad.shape_string() + " for prediction " + std::to_string(spec.horizon) +
                         "x" + std::to_string(cache.input.cols()));
    }

    const Parameters& p = state.params;
    Gradients g;
    for (std::size_t i = 0; i < p.size(); ++i) g.params.add(p.name(i), Matrix(p.value(i).rows(), p.value(i).cols()));

    switch (spec.kind) {
        case ModelKind::linear: {
            auto lg = affine_backward(p.at("W"), cache.input, loss_grad);
            g.params.at("W") = std::move(lg.w);
            g.params.at("b") = std::move(lg.b);
            g.input = std::move(lg.x);
            break;
        }

        case ModelKind::nlinear: {
            auto lg = affine_backward(p.at("W"), cache.centered, loss_grad);
            g.params.at("W") = std::move(lg.w);
            g.params.at("b") = std::move(lg.b);
            g.input = std::move(lg.x);
            // The last input row is subtracted from every input row and added
            // back to every output row.
            const std::size_t last = g.input.rows() - 1;
            for (std::size_t c = 0; c < g.input.cols(); ++c) {
                double out_sum = 0.0;
                for (std::size_t r = 0; r < loss_grad.rows(); ++r) out_sum += loss_grad(r, c);
                double in_sum = 0.0;
                for (std::size_t r = 0; r < g.input.rows(); ++r) in_sum += g.input(r, c);
                g.input(last, c) += out_sum - in_sum;
            }
            break;
        }

        case ModelKind::dlinear: {
            auto gs = affine_backward(p.at("W_s"), cache.seasonal, loss_grad);
            auto gt = affine_backward(p.at("W_t"), cache.trend, loss_grad);
            g.params.at("W_s") = std::move(gs.w);
            g.params.at("b_s") = std::move(gs.b);
            g.params.at("W_t") = std::move(gt.w);
            g.params.at("b_t") = std::move(gt.b);
            // seasonal = x - MA(x), trend = MA(x)
            Matrix through_ma = moving_average_backward(elementwise(gt.x, gs.x, ElementOp::sub), spec.ma_kernel);
            g.input = elementwise(gs.x, through_ma, ElementOp::add);
            break;
        }

        case ModelKind::rlinear:
        case ModelKind::glinear:
        case ModelKind::rs_glinear: {
            const Matrix& alpha = p.at("alpha");
            const Matrix& beta = p.at("beta");
            RevInDenormGrad dg = revin_denormalize_backward(loss_grad, cache.head_output, cache.stats, alpha, beta);

            const std::string w = spec.kind == ModelKind::rlinear ? "W" : "W_out";
            const std::string b = spec.kind == ModelKind::rlinear ? "b" : "b_out";
            auto head = affine_backward(p.at(w), cache.head_input, dg.yhat);
            g.params.at(w) = std::move(head.w);
            g.params.at(b) = std::move(head.b);
            Matrix upstream = std::move(head.x);

            if (spec.kind == ModelKind::glinear) {
                Matrix gh = gelu_backward(cache.pre_activations[0], upstream);
                auto lg = affine_backward(p.at("W_1"), cache.block_inputs[0], gh);
                g.params.at("W_1") = std::move(lg.w);
                g.params.at("b_1") = std::move(lg.b);
                upstream = std::move(lg.x);
            } else if (spec.kind == ModelKind::rs_glinear) {
                for (std::size_t i = spec.depth; i >= 1; --i) {
                    const std::string idx = std::to_string(i);
                    // z_i = dropout(gelu(W_i z_{i-1} + b_i)) + z_{i-1}
                    Matrix g_branch = dropout_backward(upstream, cache.dropout_masks[i - 1]);
                    Matrix gh = gelu_backward(cache.pre_activations[i - 1], g_branch);
                    auto lg = affine_backward(p.at("W_" + idx), cache.block_inputs[i - 1], gh);
                    g.params.at("W_" + idx) = std::move(lg.w);
                    g.params.at("b_" + idx) = std::move(lg.b);
                    accumulate(upstream, lg.x);
                }
            }

            RevInNormGrad ng = revin_normalize_backward(upstream, cache.input, cache.normalized, cache.stats, alpha,
                                                        beta, dg.mu, dg.scale);
            g.params.at("alpha") = elementwise(dg.alpha, ng.alpha, ElementOp::add);
            g.params.at("beta") = elementwise(dg.beta, ng.beta, ElementOp::add);
            g.input = std::move(ng.input);
            break;
        }
    }
    return g;
}

}  // namespace ltsf

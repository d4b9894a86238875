#include "ltsf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "ltsf/error.hpp"
#include "ltsf/evaluation.hpp"

namespace ltsf {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (max_epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in (0, 1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

double learning_rate_for_profile(std::string_view profile) {
    if (profile == "default") return 1e-3;
    if (profile == "etth1") return 1e-2;
    throw ConfigError("unknown learning-rate profile '" + std::string(profile) + "'");
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "mse_loss");
    if (pred.empty()) throw ShapeError("mse_loss on empty matrices");
    const auto m = static_cast<double>(pred.size());
    LossResult out{0.0, Matrix(pred.rows(), pred.cols())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        out.value += d * d;
        out.grad.data()[i] = 2.0 * d / m;
    }
    out.value /= m;
    return out;
}

double mae_metric(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "mae_metric");
    if (pred.empty()) throw ShapeError("mae_metric on empty matrices");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred.data()[i] - target.data()[i]);
    return acc / static_cast<double>(pred.size());
}

AdamState make_adam_state(const Parameters& params) {
    AdamState s;
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m.emplace_back(params.value(i).rows(), params.value(i).cols());
        s.v.emplace_back(params.value(i).rows(), params.value(i).cols());
    }
    return s;
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& opt, const TrainConfig& cfg) {
    if (grads.size() != params.size()) throw ShapeError("gradient set does not match parameters");
    if (opt.m.empty()) opt = make_adam_state(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params.value(i), grads.value(i), "adam_step");
        if (!grads.value(i).all_finite()) throw NumericError("non-finite gradient for parameter '" + params.name(i) + "'");
    }
    opt.t += 1;
    const double t = static_cast<double>(opt.t);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto w = params.value(i).data();
        auto g = grads.value(i).data();
        auto m = opt.m[i].data();
        auto v = opt.v[i].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            w[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

nlohmann::json TrainReport::to_json() const {
    return {{"train_loss", train_loss},
            {"val_loss", val_loss},
            {"best_epoch", best_epoch},
            {"best_val_loss", best_epoch > 0 ? nlohmann::json(val_loss[best_epoch - 1]) : nlohmann::json()},
            {"stopped_early", stopped_early},
            {"wall_time_seconds", wall_time_seconds}};
}

FitResult fit(const ModelSpec& spec, ModelState state, const WindowSet& train, const WindowSet& val,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
    spec.validate();
    cfg.validate();
    validate_state(spec, state);
    if (train.empty() || val.empty()) throw ConfigError("training and validation window sets must be nonempty");
    if (train.input_len() != spec.input_len || train.horizon() != spec.horizon || train.channels() != spec.channels ||
        val.input_len() != spec.input_len || val.horizon() != spec.horizon || val.channels() != spec.channels) {
        throw ShapeError("window sets do not match the model's L, T and N");
    }

    const auto started = std::chrono::steady_clock::now();
    Rng shuffle_rng(splitmix64_mix(cfg.seed ^ 0x5851F42D4C957F2DULL));
    AdamState opt = make_adam_state(state.params);

    FitResult result{state, {}};
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t epochs_without_gain = 0;
    Matrix inputs, targets;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        state.mode = Mode::train;
        double loss_sum = 0.0;
        const auto groups = batches(train.size(), cfg.batch_size, true, shuffle_rng);
        for (const auto& group : groups) {
            train.gather(group, inputs, targets);
            ForwardResult fwd = forward(spec, state, inputs);
            LossResult loss = mse_loss(fwd.prediction, targets);
            if (!std::isfinite(loss.value)) {
                throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
            }
            Gradients grads = backward(spec, state, fwd.cache, loss.grad);
            adam_step(state.params, grads.params, opt, cfg);
            ++state.version;
            loss_sum += loss.value;
        }
        state.mode = Mode::eval;
        const double train_loss = loss_sum / static_cast<double>(groups.size());
        const double val_loss = evaluate(spec, state, val).mse;
        result.report.train_loss.push_back(train_loss);
        result.report.val_loss.push_back(val_loss);
        if (on_epoch) on_epoch(epoch, train_loss, val_loss);

        if (val_loss < best_val) {
            best_val = val_loss;
            result.report.best_epoch = epoch;
            result.best = state;
            epochs_without_gain = 0;
        } else if (++epochs_without_gain >= cfg.patience && cfg.patience > 0) {
            result.report.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }

    if (result.report.best_epoch == 0) {
        throw NumericError("validation loss never became finite");
    }
    result.best.mode = Mode::eval;
    result.report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace ltsf

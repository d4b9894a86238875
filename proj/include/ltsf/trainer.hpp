#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "ltsf/model.hpp"
#include "ltsf/series.hpp"

namespace ltsf {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 10;
    std::size_t patience = 3;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const;
};

// Named learning-rate profiles: "default" (1e-3) and "etth1" (1e-2).
double learning_rate_for_profile(std::string_view profile);

struct LossResult {
    double value = 0.0;
    Matrix grad;  // 2 (pred - target) / m
};

LossResult mse_loss(const Matrix& pred, const Matrix& target);
double mae_metric(const Matrix& pred, const Matrix& target);

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::uint64_t t = 0;
};

AdamState make_adam_state(const Parameters& params);

// One bias-corrected Adam update. A non-finite gradient aborts the step
// before anything is modified and names the offending parameter.
void adam_step(Parameters& params, const Parameters& grads, AdamState& opt, const TrainConfig& cfg);

struct TrainReport {
    std::vector<double> train_loss;  // mean batch MSE per epoch
    std::vector<double> val_loss;    // full validation MSE per epoch, eval mode
    std::size_t best_epoch = 0;      // 1-based
    bool stopped_early = false;
    double wall_time_seconds = 0.0;

    nlohmann::json to_json() const;
};

struct FitResult {
    ModelState best;
    TrainReport report;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

/// Mini-batch Adam on MSE with early stopping on validation MSE.
///
/// Stops after `patience` consecutive epochs without improvement or at
/// `max_epochs`, and returns the parameters of the best validation epoch.
FitResult fit(const ModelSpec& spec, ModelState state, const WindowSet& train, const WindowSet& val,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace ltsf

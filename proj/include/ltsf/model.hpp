#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ltsf/layers.hpp"
#include "ltsf/matrix.hpp"
#include "ltsf/rng.hpp"

namespace ltsf {

enum class ModelKind { linear, nlinear, dlinear, rlinear, glinear, rs_glinear };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
const std::vector<ModelKind>& all_model_kinds();

struct ModelSpec {
    ModelKind kind = ModelKind::rs_glinear;
    std::size_t input_len = 96;  // L
    std::size_t horizon = 24;    // T
    std::size_t channels = 1;    // N
    std::size_t depth = 4;       // residual blocks, rs_glinear only
    double dropout_rate = 0.1;
    std::size_t ma_kernel = 25;  // dlinear only
    double revin_epsilon = 1e-5;

    void validate() const;
    bool uses_revin() const noexcept;
};

/// Named parameter matrices in a fixed, kind-specific order.
class Parameters {
public:
    void add(std::string name, Matrix value);

    std::size_t size() const noexcept { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    Matrix& value(std::size_t i) { return values_.at(i); }
    const Matrix& value(std::size_t i) const { return values_.at(i); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    Matrix& at(std::string_view name);
    const Matrix& at(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::size_t scalar_count() const;
    bool all_finite() const;

    friend bool operator==(const Parameters&, const Parameters&) = default;

private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
};

// Names and shapes the given spec requires, in canonical order.
std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> parameter_layout(const ModelSpec& spec);

struct ModelState {
    Parameters params;
    Rng dropout_rng{0};
    Mode mode = Mode::train;
    // Bumped on every parameter update so backward can reject stale caches.
    std::uint64_t version = 0;
};

// Weights uniform in ±1/sqrt(fan_in) drawn from `seed`; RevIN alpha = 1, beta = 0.
ModelState init_model(const ModelSpec& spec, std::uint64_t seed);

// Throws ShapeError unless `state` holds exactly the parameters `spec` needs.
void validate_state(const ModelSpec& spec, const ModelState& state);

struct ForwardCache {
    bool valid = false;
    ModelKind kind = ModelKind::linear;
    std::uint64_t version = 0;
    Matrix input;
    Matrix centered;              // nlinear: x - x_last
    Matrix seasonal, trend;       // dlinear
    Matrix normalized;            // RevIN output x''
    RevInStats stats;
    std::vector<Matrix> block_inputs;  // glinear/rs_glinear: input of each hidden layer
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> dropout_masks;
    Matrix head_input;
    Matrix head_output;           // prediction before RevIN denormalization
};

struct ForwardResult {
    Matrix prediction;
    ForwardCache cache;
};

struct Gradients {
    Parameters params;  // same names and shapes as the model parameters
    Matrix input;
};

/// Runs the model on packed windows.
///
/// `input` is L x (B*N); column j holds channel j % N of some window. All
/// channels share the same temporal weights. In train mode the dropout
/// stream of `state` advances; eval mode leaves `state` untouched.
ForwardResult forward(const ModelSpec& spec, ModelState& state, const Matrix& input);

// Eval-mode forward that never touches the dropout stream.
Matrix predict(const ModelSpec& spec, const ModelState& state, const Matrix& input);

Gradients backward(const ModelSpec& spec, const ModelState& state, const ForwardCache& cache, const Matrix& loss_grad);

}  // namespace ltsf

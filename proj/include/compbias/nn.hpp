#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace compbias {

enum class Activation { ReLU, Tanh };
enum class LossKind { CE, L2 };
enum class OptimizerKind { SGD, Adam };

std::string_view activation_name(Activation a);
std::string_view loss_name(LossKind k);
std::string_view optimizer_name(OptimizerKind k);

// Row-major dense matrix; rows are examples when used as a batch.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::span<double> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
};

inline constexpr int kNumHeads = 2;
inline constexpr int kHeadClasses = 2;

using Labels = std::array<int, kNumHeads>;  // (y1, y2), each in {0, 1}

struct Prediction {
    std::array<std::array<double, kHeadClasses>, kNumHeads> head_probs{};
};

struct NetShape {
    int input_dim = 16;
    int hidden_width = 128;
    int hidden_layers = 3;
    Activation activation = Activation::ReLU;
};

// MLP backbone followed by two independent linear heads of hidden_width x 2.
// All parameters live in one flat vector; gradients share the same layout.
class DenseNet {
public:
    struct Layer {
        int in = 0;
        int out = 0;
        std::size_t weight_offset = 0;  // in x out, row-major
        std::size_t bias_offset = 0;
    };

    DenseNet() = default;
    explicit DenseNet(const NetShape& shape);

    const NetShape& shape() const { return shape_; }
    // Backbone layers first, then head 0 and head 1.
    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& head(int h) const { return layers_[shape_.hidden_layers + h]; }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    std::span<double> weights(const Layer& l) { return {params_.data() + l.weight_offset, weight_count(l)}; }
    std::span<const double> weights(const Layer& l) const { return {params_.data() + l.weight_offset, weight_count(l)}; }
    std::span<double> bias(const Layer& l) { return {params_.data() + l.bias_offset, static_cast<std::size_t>(l.out)}; }
    std::span<const double> bias(const Layer& l) const {
        return {params_.data() + l.bias_offset, static_cast<std::size_t>(l.out)};
    }

    // FNV-1a over the raw parameter bytes.
    std::uint64_t checksum() const;
    bool all_finite() const;

private:
    static std::size_t weight_count(const Layer& l) { return static_cast<std::size_t>(l.in) * l.out; }

    NetShape shape_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
};

// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) for every weight and bias.
DenseNet init(std::uint64_t seed, const NetShape& shape);
inline DenseNet init(std::uint64_t seed, int input_dim) { return init(seed, NetShape{.input_dim = input_dim}); }

std::vector<Prediction> forward(const DenseNet& net, const Matrix& inputs);

// Mean over examples and heads of -ln p(true) (CE) or ||p - onehot||^2 (L2).
double loss(std::span<const Prediction> preds, std::span<const Labels> labels, LossKind kind);

struct Gradients {
    double loss = 0.0;  // scaled loss at the evaluated parameters
    std::vector<double> values;
};

// Exact gradient of scale * loss with respect to every parameter.
Gradients backward(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels, LossKind kind,
                   double scale = 1.0);

// Loss only; cheaper than backward, used by finite differences and evaluation.
double evaluate_loss(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels, LossKind kind);

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::SGD;
    double learning_rate = 1e-3;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t steps = 0;

    static OptimizerState make(OptimizerKind kind, double learning_rate = 1e-3, double weight_decay = 5e-4);
};

// SGD: p -= lr (g + wd p). Adam: the weight-decay term is added to g before
// the moment updates, then the bias-corrected step is applied.
void apply_update(std::span<double> params, std::span<const double> grad, OptimizerState& state);

inline void step(DenseNet& net, std::span<const double> grad, OptimizerState& state) {
    apply_update(net.parameters(), grad, state);
}

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t worst_index = 0;
    std::size_t refined = 0;  // parameters that needed a smaller step to avoid a ReLU kink
    std::size_t kinks = 0;    // parameters still straddling a kink at the smallest step; not compared
};

inline constexpr int kMaxStepRefinements = 4;

// Relative error |a - n| / max(|a|, |n|, floor) of analytic vs central
// finite-difference gradients. `indices` selects the parameters to probe;
// empty means all of them. At step 1e-5 the difference of two double losses
// carries about 1e-11 of rounding noise, so the floor keeps gradients of that
// size from being scored on noise alone.
GradientCheck check_gradients(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels,
                              LossKind kind, double step = 1e-5, double floor = 1e-5,
                              std::span<const std::size_t> indices = {});

}  // namespace compbias

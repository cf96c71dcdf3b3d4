#include "compbias/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "compbias/errors.hpp"
#include "compbias/rng.hpp"

namespace compbias {

std::string_view activation_name(Activation a) { return a == Activation::ReLU ? "relu" : "tanh"; }
std::string_view loss_name(LossKind k) { return k == LossKind::CE ? "ce" : "l2"; }
std::string_view optimizer_name(OptimizerKind k) { return k == OptimizerKind::SGD ? "sgd" : "adam"; }

DenseNet::DenseNet(const NetShape& shape) : shape_(shape) {
    if (shape.input_dim < 1 || shape.hidden_width < 1 || shape.hidden_layers < 1)
        throw ShapeMismatch("network dimensions must be positive");
    std::size_t offset = 0;
    auto add = [&](int in, int out) {
        Layer l{in, out, offset, offset + static_cast<std::size_t>(in) * out};
        offset = l.bias_offset + static_cast<std::size_t>(out);
        layers_.push_back(l);
    };
    int in = shape.input_dim;
    for (int i = 0; i < shape.hidden_layers; ++i) {
        add(in, shape.hidden_width);
        in = shape.hidden_width;
    }
    for (int h = 0; h < kNumHeads; ++h) add(shape.hidden_width, kHeadClasses);
    params_.assign(offset, 0.0);
}

std::uint64_t DenseNet::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double p : params_) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &p, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

bool DenseNet::all_finite() const {
    return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
}

DenseNet init(std::uint64_t seed, const NetShape& shape) {
    DenseNet net(shape);
    Xoshiro256 rng(seed);
    for (const auto& layer : net.layers()) {
        const double bound = std::sqrt(1.0 / layer.in);
        for (double& w : net.weights(layer)) w = rng.uniform(-bound, bound);
        for (double& b : net.bias(layer)) b = rng.uniform(-bound, bound);
    }
    return net;
}

namespace {

struct Cache {
    std::vector<Matrix> pre;   // backbone pre-activations
    std::vector<Matrix> post;  // backbone activations
    std::array<Matrix, kNumHeads> probs;
};

// out = in * W + b, skipping zero inputs (image rasters are mostly black).
void affine(const Matrix& in, std::span<const double> w, std::span<const double> b, Matrix& out) {
    const int n_out = out.cols;
    for (int r = 0; r < in.rows; ++r) {
        double* o = &out(r, 0);
        std::copy(b.begin(), b.end(), o);
        for (int k = 0; k < in.cols; ++k) {
            const double x = in(r, k);
            if (x == 0.0) continue;
            const double* wk = w.data() + static_cast<std::size_t>(k) * n_out;
            for (int j = 0; j < n_out; ++j) o[j] += x * wk[j];
        }
    }
}

void run_forward(const DenseNet& net, const Matrix& inputs, Cache& cache) {
    const auto& shape = net.shape();
    if (inputs.cols != shape.input_dim) throw ShapeMismatch("input width does not match the network");
    const int batch = inputs.rows;
    cache.pre.resize(shape.hidden_layers);
    cache.post.resize(shape.hidden_layers);
    const Matrix* in = &inputs;
    for (int l = 0; l < shape.hidden_layers; ++l) {
        const auto& layer = net.layers()[l];
        cache.pre[l] = Matrix(batch, layer.out);
        affine(*in, net.weights(layer), net.bias(layer), cache.pre[l]);
        cache.post[l] = cache.pre[l];
        for (double& v : cache.post[l].data)
            v = shape.activation == Activation::ReLU ? (v > 0.0 ? v : 0.0) : std::tanh(v);
        in = &cache.post[l];
    }
    for (int h = 0; h < kNumHeads; ++h) {
        const auto& layer = net.head(h);
        Matrix& p = cache.probs[h];
        p = Matrix(batch, kHeadClasses);
        affine(*in, net.weights(layer), net.bias(layer), p);
        for (int r = 0; r < batch; ++r) {
            auto row = p.row(r);
            const double m = *std::max_element(row.begin(), row.end());
            double sum = 0.0;
            for (double& v : row) {
                v = std::exp(v - m);
                sum += v;
            }
            for (double& v : row) v /= sum;
        }
    }
}

double cache_loss(const Cache& cache, std::span<const Labels> labels, LossKind kind) {
    const int batch = cache.probs[0].rows;
    if (static_cast<int>(labels.size()) != batch) throw ShapeMismatch("label count does not match the batch");
    double total = 0.0;
    for (int r = 0; r < batch; ++r)
        for (int h = 0; h < kNumHeads; ++h) {
            const int y = labels[r][h];
            if (kind == LossKind::CE) {
                total -= std::log(cache.probs[h](r, y));
            } else {
                for (int c = 0; c < kHeadClasses; ++c) {
                    const double d = cache.probs[h](r, c) - (c == y ? 1.0 : 0.0);
                    total += d * d;
                }
            }
        }
    return total / (static_cast<double>(batch) * kNumHeads);
}

}  // namespace

std::vector<Prediction> forward(const DenseNet& net, const Matrix& inputs) {
    Cache cache;
    run_forward(net, inputs, cache);
    std::vector<Prediction> out(inputs.rows);
    for (int r = 0; r < inputs.rows; ++r)
        for (int h = 0; h < kNumHeads; ++h)
            for (int c = 0; c < kHeadClasses; ++c) out[r].head_probs[h][c] = cache.probs[h](r, c);
    return out;
}

double loss(std::span<const Prediction> preds, std::span<const Labels> labels, LossKind kind) {
    if (preds.size() != labels.size()) throw ShapeMismatch("prediction and label counts differ");
    if (preds.empty()) throw ShapeMismatch("empty batch");
    Cache cache;
    for (int h = 0; h < kNumHeads; ++h) {
        cache.probs[h] = Matrix(static_cast<int>(preds.size()), kHeadClasses);
        for (std::size_t r = 0; r < preds.size(); ++r)
            for (int c = 0; c < kHeadClasses; ++c) cache.probs[h](static_cast<int>(r), c) = preds[r].head_probs[h][c];
    }
    return cache_loss(cache, labels, kind);
}

double evaluate_loss(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels, LossKind kind) {
    Cache cache;
    run_forward(net, inputs, cache);
    return cache_loss(cache, labels, kind);
}

Gradients backward(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels, LossKind kind,
                   double scale) {
    Cache cache;
    run_forward(net, inputs, cache);
    Gradients g;
    g.loss = scale * cache_loss(cache, labels, kind);
    g.values.assign(net.parameter_count(), 0.0);

    const auto& shape = net.shape();
    const int batch = inputs.rows;
    const double norm = scale / (static_cast<double>(batch) * kNumHeads);
    const int width = shape.hidden_width;
    const int last = shape.hidden_layers - 1;

    Matrix d_act(batch, width);
    for (int h = 0; h < kNumHeads; ++h) {
        const auto& layer = net.head(h);
        const auto w = net.weights(layer);
        double* dw = g.values.data() + layer.weight_offset;
        double* db = g.values.data() + layer.bias_offset;
        for (int r = 0; r < batch; ++r) {
            std::array<double, kHeadClasses> dz{};
            const auto p = cache.probs[h].row(r);
            const int y = labels[r][h];
            if (kind == LossKind::CE) {
                for (int c = 0; c < kHeadClasses; ++c) dz[c] = norm * (p[c] - (c == y ? 1.0 : 0.0));
            } else {
                std::array<double, kHeadClasses> dp{};
                double dot = 0.0;
                for (int c = 0; c < kHeadClasses; ++c) {
                    dp[c] = 2.0 * norm * (p[c] - (c == y ? 1.0 : 0.0));
                    dot += p[c] * dp[c];
                }
                for (int c = 0; c < kHeadClasses; ++c) dz[c] = p[c] * (dp[c] - dot);
            }
            const auto a = cache.post[last].row(r);
            for (int k = 0; k < width; ++k) {
                double acc = 0.0;
                for (int c = 0; c < kHeadClasses; ++c) {
                    dw[k * kHeadClasses + c] += a[k] * dz[c];
                    acc += w[static_cast<std::size_t>(k) * kHeadClasses + c] * dz[c];
                }
                d_act(r, k) += acc;
            }
            for (int c = 0; c < kHeadClasses; ++c) db[c] += dz[c];
        }
    }

    Matrix d_pre;
    for (int l = last; l >= 0; --l) {
        const auto& layer = net.layers()[l];
        d_pre = d_act;
        for (std::size_t i = 0; i < d_pre.data.size(); ++i) {
            if (shape.activation == Activation::ReLU) {
                if (!(cache.pre[l].data[i] > 0.0)) d_pre.data[i] = 0.0;
            } else {
                const double a = cache.post[l].data[i];
                d_pre.data[i] *= 1.0 - a * a;
            }
        }
        const Matrix& in = l == 0 ? inputs : cache.post[l - 1];
        double* dw = g.values.data() + layer.weight_offset;
        double* db = g.values.data() + layer.bias_offset;
        for (int r = 0; r < batch; ++r) {
            const double* dz = &d_pre(r, 0);
            for (int k = 0; k < layer.in; ++k) {
                const double x = in(r, k);
                if (x == 0.0) continue;
                double* dwk = dw + static_cast<std::size_t>(k) * layer.out;
                for (int j = 0; j < layer.out; ++j) dwk[j] += x * dz[j];
            }
            for (int j = 0; j < layer.out; ++j) db[j] += dz[j];
        }
        if (l == 0) break;
        const auto w = net.weights(layer);
        d_act = Matrix(batch, layer.in);
        for (int r = 0; r < batch; ++r) {
            const double* dz = &d_pre(r, 0);
            for (int k = 0; k < layer.in; ++k) {
                const double* wk = w.data() + static_cast<std::size_t>(k) * layer.out;
                double acc = 0.0;
                for (int j = 0; j < layer.out; ++j) acc += wk[j] * dz[j];
                d_act(r, k) = acc;
            }
        }
    }
    return g;
}

OptimizerState OptimizerState::make(OptimizerKind kind, double learning_rate, double weight_decay) {
    OptimizerState s;
    s.kind = kind;
    s.learning_rate = learning_rate;
    s.weight_decay = weight_decay;
    return s;
}

void apply_update(std::span<double> params, std::span<const double> grad, OptimizerState& state) {
    if (params.size() != grad.size()) throw ShapeMismatch("gradient and parameter sizes differ");
    const double lr = state.learning_rate;
    const double wd = state.weight_decay;
    if (state.kind == OptimizerKind::SGD) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * (grad[i] + wd * params[i]);
        ++state.steps;
        return;
    }
    if (state.first_moment.empty()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
    } else if (state.first_moment.size() != params.size()) {
        throw ShapeMismatch("optimizer moments do not match the parameters");
    }
    ++state.steps;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double eps = state.epsilon;
    const double inv_correction1 = 1.0 / (1.0 - std::pow(b1, static_cast<double>(state.steps)));
    const double inv_correction2 = 1.0 / (1.0 - std::pow(b2, static_cast<double>(state.steps)));
    double* __restrict p = params.data();
    const double* __restrict gr = grad.data();
    double* __restrict m = state.first_moment.data();
    double* __restrict v = state.second_moment.data();
    const std::size_t n = params.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = gr[i] + wd * p[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double m_hat = m[i] * inv_correction1;
        const double v_hat = v[i] * inv_correction2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

namespace {

// Loss plus the on/off state of every ReLU unit; the state stays empty for tanh.
double loss_and_pattern(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels, LossKind kind,
                        std::vector<char>& pattern) {
    Cache cache;
    run_forward(net, inputs, cache);
    pattern.clear();
    if (net.shape().activation == Activation::ReLU)
        for (const auto& m : cache.pre)
            for (double v : m.data) pattern.push_back(v > 0.0);
    return cache_loss(cache, labels, kind);
}

}  // namespace

GradientCheck check_gradients(const DenseNet& net, const Matrix& inputs, std::span<const Labels> labels,
                              LossKind kind, double step, double floor, std::span<const std::size_t> indices) {
    const auto analytic = backward(net, inputs, labels, kind).values;
    std::vector<char> base;
    loss_and_pattern(net, inputs, labels, kind, base);
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(net.parameter_count());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        indices = all;
    }
    std::vector<double> errors(indices.size(), 0.0);
    std::vector<char> kinked(indices.size(), 0);
    std::vector<char> refined(indices.size(), 0);
    const auto n = static_cast<std::int64_t>(indices.size());
#pragma omp parallel
    {
        DenseNet probe = net;
        std::vector<char> up_pattern, down_pattern;
#pragma omp for schedule(static)
        for (std::int64_t t = 0; t < n; ++t) {
            const std::size_t i = indices[t];
            auto params = probe.parameters();
            const double saved = params[i];
            // A difference across a ReLU kink is not a derivative estimate;
            // shrink the step until both sides keep the base activation pattern.
            double h = step;
            for (int attempt = 0;; ++attempt) {
                params[i] = saved + h;
                const double up = loss_and_pattern(probe, inputs, labels, kind, up_pattern);
                params[i] = saved - h;
                const double down = loss_and_pattern(probe, inputs, labels, kind, down_pattern);
                params[i] = saved;
                if (up_pattern != base || down_pattern != base) {
                    if (attempt < kMaxStepRefinements) {
                        h *= 0.1;
                        refined[t] = 1;
                        continue;
                    }
                    kinked[t] = 1;
                    break;
                }
                const double numeric = (up - down) / (2.0 * h);
                const double a = analytic[i];
                errors[t] = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
                break;
            }
        }
    }
    GradientCheck out;
    for (std::size_t t = 0; t < errors.size(); ++t) {
        out.refined += refined[t];
        if (kinked[t]) {
            ++out.kinks;
            continue;
        }
        ++out.checked;
        if (errors[t] > out.max_relative_error) {
            out.max_relative_error = errors[t];
            out.worst_index = indices[t];
        }
    }
    return out;
}

}  // namespace compbias

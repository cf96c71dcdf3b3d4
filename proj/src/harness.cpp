#include "compbias/harness.hpp"

#include <cmath>
#include <memory>

#include "compbias/errors.hpp"
#include "compbias/grammar.hpp"
#include "compbias/rng.hpp"

namespace compbias {

void ExperimentConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight_decay must be >= 0");
    if (image_size < 8) throw ConfigError("image_size must be at least 8");
    if (projection_dim < 1) throw ConfigError("projection_dim must be positive");
}

NetShape ExperimentConfig::net_shape() const {
    NetShape s;
    s.input_dim = input_dim(encoding, dataset_options());
    s.activation = activation;
    return s;
}

std::uint64_t init_seed(std::uint64_t experiment_seed) { return derive_seed(experiment_seed, 2); }

std::uint64_t run_seed(std::uint64_t experiment_seed, std::uint64_t mapping_id) {
    return derive_seed(derive_seed(experiment_seed, 3), mapping_id);
}

namespace {

SpacePtr toy_space() { return std::make_shared<const AttributeSpace>(AttributeSpace::toy256()); }

RunResult train_from(const Mapping& mapping, const ExperimentConfig& config, const DenseNet& initial) {
    const Dataset ds = build_dataset(mapping, config.encoding, config.seed, config.dataset_options());
    RunResult r;
    r.mapping_id = mapping.id();
    r.cls = classify(mapping);
    r.cl_bits = cl(mapping);
    r.topsim = topsim(mapping);
    r.input_hash = hash_inputs(ds.inputs);

    DenseNet net = initial;
    auto opt = OptimizerState::make(config.optimizer, config.learning_rate, config.weight_decay);
    r.curve.losses.reserve(config.epochs);
    for (int e = 0; e < config.epochs; ++e) {
        const auto g = backward(net, ds.inputs, ds.labels, config.loss);
        if (!std::isfinite(g.loss)) {
            r.diverged = true;
            break;
        }
        r.curve.losses.push_back(g.loss);
        step(net, g.values, opt);
    }
    if (!r.diverged) {
        r.final_loss = evaluate_loss(net, ds.inputs, ds.labels, config.loss);
        if (!std::isfinite(r.final_loss)) r.diverged = true;
    }
    if (r.diverged) r.final_loss = r.curve.losses.empty() ? 0.0 : r.curve.losses.back();
    r.convergence_time = r.curve.losses.empty() ? 0.0 : convergence_time(r.curve);
    return r;
}

}  // namespace

RunResult train_run(const Mapping& mapping, const ExperimentConfig& config) {
    config.validate();
    return train_from(mapping, config, init(init_seed(config.seed), config.net_shape()));
}

std::vector<RunResult> run_sweep(const ExperimentConfig& config) {
    config.validate();
    const auto mappings = enumerate_mappings(toy_space());
    const DenseNet initial = init(init_seed(config.seed), config.net_shape());
    std::vector<RunResult> results(mappings.size());
    const auto n = static_cast<std::int64_t>(mappings.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) results[i] = train_from(mappings[i], config, initial);
    return results;
}

std::vector<RunResult> run_sweep_serial(const ExperimentConfig& config) {
    config.validate();
    const auto mappings = enumerate_mappings(toy_space());
    const DenseNet initial = init(init_seed(config.seed), config.net_shape());
    std::vector<RunResult> results;
    results.reserve(mappings.size());
    for (const auto& m : mappings) results.push_back(train_from(m, config, initial));
    return results;
}

InfluenceReport influence_probe(const Mapping& mapping, const ExperimentConfig& config, int probe_example,
                                double step_lr) {
    config.validate();
    if (probe_example < 0 || probe_example >= mapping.size() || mapping.size() != 4)
        throw std::out_of_range("probe example must be one of the four objects");
    const Dataset ds = build_dataset(mapping, config.encoding, config.seed, config.dataset_options());
    DenseNet net = init(init_seed(config.seed), config.net_shape());

    auto log_true = [&](const DenseNet& n) {
        const auto preds = forward(n, ds.inputs);
        std::array<std::array<double, kNumHeads>, 4> out{};
        for (int i = 0; i < 4; ++i)
            for (int h = 0; h < kNumHeads; ++h) out[i][h] = std::log(preds[i].head_probs[h][ds.labels[i][h]]);
        return out;
    };
    const auto before = log_true(net);

    Matrix single(1, ds.inputs.cols);
    const auto src = ds.inputs.row(probe_example);
    std::copy(src.begin(), src.end(), single.row(0).begin());
    const std::array<Labels, 1> label{ds.labels[probe_example]};
    const auto g = backward(net, single, label, config.loss);
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= step_lr * g.values[i];

    const auto after = log_true(net);
    InfluenceReport rep;
    rep.probe_example = probe_example;
    double off = 0.0;
    int count = 0;
    for (int i = 0; i < 4; ++i)
        for (int h = 0; h < kNumHeads; ++h) {
            rep.deltas[i][h] = after[i][h] - before[i][h];
            if (i != probe_example) {
                off += rep.deltas[i][h];
                ++count;
            }
        }
    rep.alignment_score = off / count;
    return rep;
}

double mean_alignment(const Mapping& mapping, const ExperimentConfig& config, double step_lr) {
    double total = 0.0;
    for (int p = 0; p < 4; ++p) total += influence_probe(mapping, config, p, step_lr).alignment_score;
    return total / 4.0;
}

SweepCorrelation correlate_sweep(std::span<const RunResult> results, XMetric metric, std::size_t shuffles,
                                 std::uint64_t seed) {
    std::vector<double> xs;
    std::vector<double> ys;
    SweepCorrelation c;
    for (const auto& r : results) {
        if (r.diverged) {
            ++c.excluded;
            continue;
        }
        xs.push_back(metric == XMetric::CL ? r.cl_bits : r.topsim);
        ys.push_back(r.convergence_time);
    }
    c.used = xs.size();
    const auto p = pearson(xs, ys);
    c.rho = p.rho;
    c.p_analytic = p.p_value;
    c.p_permutation = shuffles > 0 ? pearson_permutation_p(xs, ys, shuffles, seed) : 1.0;
    return c;
}

}  // namespace compbias

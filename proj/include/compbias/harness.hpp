#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "compbias/datagen.hpp"
#include "compbias/mapping.hpp"
#include "compbias/metrics.hpp"
#include "compbias/nn.hpp"

namespace compbias {

struct ExperimentConfig {
    Encoding encoding = Encoding::OHT2;
    LossKind loss = LossKind::CE;
    OptimizerKind optimizer = OptimizerKind::SGD;
    double learning_rate = 1e-3;
    double weight_decay = 5e-4;
    int epochs = 3000;
    std::uint64_t seed = 0;
    int image_size = 32;
    int projection_dim = 16;
    Activation activation = Activation::ReLU;

    void validate() const;
    DatasetOptions dataset_options() const { return {projection_dim, image_size}; }
    NetShape net_shape() const;
};

// Network initialisation is shared by every run of a sweep.
std::uint64_t init_seed(std::uint64_t experiment_seed);
// Private stream of one run, for anything beyond the shared initialisation.
std::uint64_t run_seed(std::uint64_t experiment_seed, std::uint64_t mapping_id);

struct RunResult {
    std::uint64_t mapping_id = 0;
    MappingClass cls;
    double cl_bits = 0.0;
    double topsim = 0.0;
    double convergence_time = 0.0;
    double final_loss = 0.0;
    bool diverged = false;  // a non-finite loss stopped the run; curve is truncated
    std::uint64_t input_hash = 0;
    LearningCurve curve;
};

// Full-batch training of one mapping from the shared initialisation.
RunResult train_run(const Mapping& mapping, const ExperimentConfig& config);

// All V^L^(V^L) Toy256 mappings, ordered by mapping_id. run_sweep spreads the
// runs over OpenMP threads; run_sweep_serial is the single-threaded reference.
std::vector<RunResult> run_sweep(const ExperimentConfig& config);
std::vector<RunResult> run_sweep_serial(const ExperimentConfig& config);

struct InfluenceReport {
    int probe_example = 0;
    // deltas[example][head]: change in log p(true label) after one plain
    // gradient step of size step_lr on the probe example alone.
    std::array<std::array<double, kNumHeads>, 4> deltas{};
    double alignment_score = 0.0;  // mean over the off-probe entries
};

InfluenceReport influence_probe(const Mapping& mapping, const ExperimentConfig& config, int probe_example,
                                double step_lr);

// Alignment averaged over all four probe choices.
double mean_alignment(const Mapping& mapping, const ExperimentConfig& config, double step_lr);

enum class XMetric { CL, Topsim };

struct SweepCorrelation {
    double rho = 0.0;
    double p_analytic = 1.0;
    double p_permutation = 1.0;
    std::size_t used = 0;
    std::size_t excluded = 0;  // diverged runs
};

SweepCorrelation correlate_sweep(std::span<const RunResult> results, XMetric metric,
                                 std::size_t shuffles = kDefaultShuffles, std::uint64_t seed = 0);

}  // namespace compbias

// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "compbias/datagen.hpp"
#include "compbias/grammar.hpp"
#include "compbias/harness.hpp"
#include "compbias/mapping.hpp"
#include "compbias/metrics.hpp"
#include "compbias/nn.hpp"
#include "compbias/report.hpp"
#include "compbias/rng.hpp"

using namespace compbias;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_seconds, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_seconds > 0.0) v.require(secs < budget_seconds, "runtime " + fmt("%.2f", secs) + " s over budget");
    if (!v.pass) ++failures;
    std::printf("[%s] %2d %s (%.2f s): %s\n", v.pass ? "PASS" : "FAIL", id, name, secs, v.detail.c_str());
    std::fflush(stdout);
}

SpacePtr toy() { return std::make_shared<const AttributeSpace>(AttributeSpace::toy256()); }

// Independent evaluation of -sum_i log2(Cnt(s_i)/n) by direct counting.
double cl_oracle(const std::string& s) {
    double bits = 0.0;
    for (char c : s) {
        const auto cnt = std::count(s.begin(), s.end(), c);
        bits -= std::log2(static_cast<double>(cnt) / static_cast<double>(s.size()));
    }
    return bits;
}

struct SweepOutcome {
    std::string label;
    std::vector<RunResult> runs;
    double seconds = 0.0;
};

std::string runs_bytes(const std::vector<RunResult>& runs) {
    std::ostringstream os;
    write_runs_csv(os, runs);
    write_curves_csv(os, runs);
    return os.str();
}

}  // namespace

int main() {
    criterion(1, "enumeration exactness", 1.0, [](Verdict& v) {
        const auto maps = enumerate_mappings(toy());
        std::map<MappingKind, int> counts;
        int bijections = 0;
        for (const auto& m : maps) {
            ++counts[classify(m).kind];
            bijections += is_bijection(m);
        }
        v.require(maps.size() == 256, "mapping count " + std::to_string(maps.size()));
        v.require(bijections == 24, "bijection count " + std::to_string(bijections));
        v.require(counts[MappingKind::CompositionalBijection] == 8, "compositional count");
        v.require(counts[MappingKind::FullyDegenerate] == 4, "degenerate count");
        v.note("256 / " + std::to_string(bijections) + " / " + std::to_string(counts[MappingKind::CompositionalBijection]) +
               " / " + std::to_string(counts[MappingKind::FullyDegenerate]));
    });

    criterion(2, "complexity bounds", 1.0, [](Verdict& v) {
        v.require(k_bound_bijection(2, 2) == 8.0, "k_bound_bijection(2,2) = " + fmt("%.17g", k_bound_bijection(2, 2)));
        v.require(k_bound_comp(2, 2) == 4.0, "k_bound_comp(2,2) = " + fmt("%.17g", k_bound_comp(2, 2)));
        int checked = 0;
        std::string violations;
        for (int L = 2; L <= 6; ++L)
            for (int V = 2; V <= 6; ++V) {
                const auto g = gamma_ratio(L, V);
                // Independent recomputation of the ratio and the regime bound.
                const double gamma = std::pow(V, L) * L * std::log2(V) / (V * std::log2(V) + L * std::log2(L));
                const double bound = L <= V ? std::pow(V, L - 1) * L / 2.0
                                            : std::pow(V, L) * std::log2(V) / (2.0 * std::log2(L));
                v.require(std::fabs(g.gamma - gamma) <= 1e-12 * gamma, "gamma(" + std::to_string(L) + "," +
                                                                           std::to_string(V) + ")");
                v.require(std::fabs(g.lower_bound - bound) <= 1e-12 * bound, "bound(" + std::to_string(L) + "," +
                                                                                 std::to_string(V) + ")");
                if (!(gamma >= bound)) violations += " (" + std::to_string(L) + "," + std::to_string(V) + ")";
                ++checked;
            }
        v.require(violations.empty(), "gamma below bound at" + violations);
        v.note("8.0 / 4.0 bits; gamma >= bound on " + std::to_string(checked) + " grid points, violations: " +
               (violations.empty() ? "none" : violations));
    });

    criterion(3, "coding-length ordering", 1.0, [](Verdict& v) {
        std::vector<double> comp, hol, degen, all;
        for (const auto& m : enumerate_mappings(toy())) {
            const double bits = cl(m);
            all.push_back(bits);
            switch (classify(m).kind) {
                case MappingKind::CompositionalBijection: comp.push_back(bits); break;
                case MappingKind::HolisticBijection: hol.push_back(bits); break;
                case MappingKind::FullyDegenerate: degen.push_back(bits); break;
                default: break;
            }
        }
        const double comp_max = *std::max_element(comp.begin(), comp.end());
        const double hol_min = *std::min_element(hol.begin(), hol.end());
        const double global_min = *std::min_element(all.begin(), all.end());
        v.require(comp_max < hol_min, "max compositional CL " + fmt("%.4f", comp_max) + " >= min holistic " +
                                          fmt("%.4f", hol_min));
        int at_min = 0;
        for (double d : degen) at_min += d == global_min;
        v.require(at_min == 4, std::to_string(at_min) + " of 4 degenerate mappings at the global minimum " +
                                   fmt("%.4f", global_min) + " (CLs " + fmt("%.4f", degen[0]) + " " +
                                   fmt("%.4f", degen[1]) + " " + fmt("%.4f", degen[2]) + " " +
                                   fmt("%.4f", degen[3]) + ")");
        std::vector<double> sorted = all;
        std::sort(sorted.begin(), sorted.end());
        const double degen_max = *std::max_element(degen.begin(), degen.end());
        v.note("degenerate mappings are the 4 cheapest: " + std::string(degen_max < sorted[4] ? "yes" : "no"));
        const double got = coding_length("Sbx,rx,bc,rc01");
        const double want = cl_oracle("Sbx,rx,bc,rc01");
        v.require(std::fabs(got - want) <= 1e-9, "CL(Sbx,rx,bc,rc01) " + fmt("%.12f", got) + " vs oracle " +
                                                     fmt("%.12f", want));
        v.note("comp max " + fmt("%.4f", comp_max) + " < hol min " + fmt("%.4f", hol_min) + "; CL(Sbx,rx,bc,rc01) = " +
               fmt("%.6f", got));
    });

    criterion(4, "topsim identities", 1.0, [](Verdict& v) {
        int comp = 0, hol = 0, degen = 0;
        double hol_max = -2.0;
        for (const auto& m : enumerate_mappings(toy())) {
            const double t = topsim(m);
            switch (classify(m).kind) {
                case MappingKind::CompositionalBijection:
                    ++comp;
                    v.require(std::fabs(t - 1.0) <= 1e-12, "compositional " + std::to_string(m.id()) + " topsim " +
                                                               fmt("%.17g", t));
                    break;
                case MappingKind::HolisticBijection:
                    ++hol;
                    hol_max = std::max(hol_max, t);
                    v.require(t < 1.0, "holistic " + std::to_string(m.id()) + " topsim 1");
                    break;
                case MappingKind::FullyDegenerate:
                    ++degen;
                    v.require(t == 1.0, "degenerate " + std::to_string(m.id()) + " topsim " + fmt("%.17g", t));
                    break;
                default: break;
            }
        }
        v.note(std::to_string(comp) + " compositional at 1, " + std::to_string(hol) + " holistic max " +
               fmt("%.4f", hol_max) + ", " + std::to_string(degen) + " degenerate at 1");
    });

    criterion(5, "gradient correctness", 30.0, [](Verdict& v) {
        const auto mapping = mapping_from_table(toy(), {0, 1, 3, 2});
        double worst = 0.0;
        std::size_t total = 0, refined = 0, kinks = 0;
        for (auto enc : {Encoding::OHT2, Encoding::Image})
            for (auto kind : {LossKind::CE, LossKind::L2})
                for (std::uint64_t seed = 0; seed < 3; ++seed) {
                    ExperimentConfig c;
                    c.encoding = enc;
                    c.seed = seed;
                    const auto ds = build_dataset(mapping, enc, seed, c.dataset_options());
                    const auto net = init(init_seed(seed), c.net_shape());
                    // Every bias and head weight, plus a seeded sample of each
                    // backbone weight matrix.
                    std::vector<std::size_t> idx;
                    Xoshiro256 rng(derive_seed(seed, 99));
                    const auto& layers = net.layers();
                    for (std::size_t li = 0; li < layers.size(); ++li) {
                        const auto& l = layers[li];
                        const std::size_t nw = static_cast<std::size_t>(l.in) * l.out;
                        const bool full = li >= static_cast<std::size_t>(net.shape().hidden_layers) || nw <= 2048;
                        if (full)
                            for (std::size_t k = 0; k < nw; ++k) idx.push_back(l.weight_offset + k);
                        else
                            for (int k = 0; k < 2048; ++k) idx.push_back(l.weight_offset + rng.below(nw));
                        for (int k = 0; k < l.out; ++k) idx.push_back(l.bias_offset + k);
                    }
                    const auto r = check_gradients(net, ds.inputs, ds.labels, kind, 1e-5, 1e-5, idx);
                    worst = std::max(worst, r.max_relative_error);
                    total += r.checked;
                    refined += r.refined;
                    kinks += r.kinks;
                    v.require(r.max_relative_error < 1e-5,
                              std::string(encoding_name(enc)) + "/" + std::string(loss_name(kind)) + " seed " +
                                  std::to_string(seed) + " rel err " + fmt("%.3g", r.max_relative_error));
                }
        v.note(std::to_string(total) + " parameters checked over 12 cases, max rel err " + fmt("%.3g", worst) + ", " +
               std::to_string(refined) + " needed a smaller step at a ReLU kink, " + std::to_string(kinks) +
               " left unresolved");
    });

    criterion(6, "optimizer unit oracles", 0.0, [](Verdict& v) {
        auto near = [&](double got, double want, const std::string& what) {
            v.require(std::fabs(got - want) <= 1e-10, what + " " + fmt("%.17g", got) + " vs " + fmt("%.17g", want));
        };
        {
            std::vector<double> p{1.0};
            const std::vector<double> g{0.5};
            auto s = OptimizerState::make(OptimizerKind::SGD, 0.1, 0.01);
            apply_update(p, g, s);
            near(p[0], 0.949, "sgd step");
        }
        {
            std::vector<double> p{1.0};
            auto s = OptimizerState::make(OptimizerKind::Adam, 0.1, 0.0);
            const std::vector<double> g1{0.5}, g2{0.25};
            apply_update(p, g1, s);
            near(p[0], 0.90000000199999996, "adam step 1");
            apply_update(p, g2, s);
            near(p[0], 0.80678204047746166896, "adam step 2");
        }
        {
            std::vector<double> p{2.0};
            auto s = OptimizerState::make(OptimizerKind::Adam, 0.01, 0.01);
            const std::vector<double> g{-0.3};
            apply_update(p, g, s);
            near(p[0], 2.0099999996428571556, "adam with decay");
        }
        v.note("SGD and Adam scalar steps within 1e-10");
    });

    std::vector<SweepOutcome> sweeps;
    for (auto [enc, opt, label] : {std::tuple{Encoding::OHT2, OptimizerKind::SGD, "oht2/sgd/ce"},
                                   std::tuple{Encoding::OHT3, OptimizerKind::SGD, "oht3/sgd/ce"},
                                   std::tuple{Encoding::OHT2, OptimizerKind::Adam, "oht2/adam/ce"}}) {
        ExperimentConfig c;
        c.encoding = enc;
        c.optimizer = opt;
        SweepOutcome s{label, {}, 0.0};
        const auto t0 = std::chrono::steady_clock::now();
        s.runs = run_sweep(c);
        s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("       sweep %s: %d epochs, %.1f s\n", label, c.epochs, s.seconds);
        std::fflush(stdout);
        sweeps.push_back(std::move(s));
    }

    std::vector<SweepCorrelation> cl_corr, top_corr;
    for (const auto& s : sweeps) {
        cl_corr.push_back(correlate_sweep(s.runs, XMetric::CL, kDefaultShuffles, 1));
        top_corr.push_back(correlate_sweep(s.runs, XMetric::Topsim, kDefaultShuffles, 2));
    }

    criterion(7, "sweep correlations", 0.0, [&](Verdict& v) {
        for (std::size_t i = 0; i < sweeps.size(); ++i) {
            const auto& cl_c = cl_corr[i];
            const auto& top_c = top_corr[i];
            const auto& name = sweeps[i].label;
            v.require(cl_c.rho >= 0.4, name + " CL rho " + fmt("%.4f", cl_c.rho));
            v.require(cl_c.p_analytic <= 1e-5, name + " CL p " + fmt("%.3g", cl_c.p_analytic));
            v.require(top_c.rho <= -0.4, name + " topsim rho " + fmt("%.4f", top_c.rho));
            v.require(sweeps[i].seconds <= 300.0, name + " took " + fmt("%.1f", sweeps[i].seconds) + " s");
            v.note(name + ": CL " + fmt("%+.4f", cl_c.rho) + " (p " + fmt("%.2g", cl_c.p_analytic) + "), topsim " +
                   fmt("%+.4f", top_c.rho) + " (p " + fmt("%.2g", top_c.p_analytic) + "), " +
                   std::to_string(cl_c.excluded) + " diverged, " + fmt("%.0f", sweeps[i].seconds) + " s");
        }
    });

    criterion(8, "class ordering", 0.0, [&](Verdict& v) {
        // The default sweep decides; the other two are reported alongside.
        for (std::size_t i = 0; i < sweeps.size(); ++i) {
            const auto& s = sweeps[i];
            const bool gating = i == 0;
            double comp = 0.0, hol = 0.0;
            int nc = 0, nh = 0;
            std::vector<const RunResult*> order;
            for (const auto& r : s.runs) {
                order.push_back(&r);
                if (r.cls.kind == MappingKind::CompositionalBijection) comp += r.convergence_time, ++nc;
                if (r.cls.kind == MappingKind::HolisticBijection) hol += r.convergence_time, ++nh;
            }
            std::sort(order.begin(), order.end(),
                      [](const RunResult* a, const RunResult* b) { return a->convergence_time < b->convergence_time; });
            int degen_first = 0;
            for (int k = 0; k < 4; ++k) degen_first += order[k]->cls.kind == MappingKind::FullyDegenerate;
            if (gating) {
                v.require(comp / nc < hol / nh, s.label + " compositional mean not below holistic");
                v.require(degen_first == 4,
                          s.label + " only " + std::to_string(degen_first) + " degenerate runs in the 4 fastest");
            }
            v.note(s.label + (gating ? "" : " (info)") + ": comp " + fmt("%.1f", comp / nc) +
                   (comp / nc < hol / nh ? " < " : " >= ") + "hol " + fmt("%.1f", hol / nh) +
                   ", degenerate in top 4: " + std::to_string(degen_first));
        }
    });

    criterion(9, "determinism", 0.0, [&](Verdict& v) {
        const auto first = runs_bytes(sweeps.front().runs);
        const auto again = runs_bytes(run_sweep(ExperimentConfig{}));
        const auto serial = runs_bytes(run_sweep_serial(ExperimentConfig{}));
        v.require(first == again, "repeated sweep differs");
        v.require(first == serial, "serial sweep differs");
        v.note("runs.csv + curves.csv identical across repeat and serial reference (" + std::to_string(first.size()) +
               " bytes)");
    });

    criterion(10, "influence probe", 60.0, [](Verdict& v) {
        std::vector<Mapping> comp, hol;
        for (const auto& m : enumerate_mappings(toy())) {
            const auto k = classify(m).kind;
            if (k == MappingKind::CompositionalBijection) comp.push_back(m);
            if (k == MappingKind::HolisticBijection) hol.push_back(m);
        }
        const int seeds = 10;
        const double step_lr = 0.01;
        double comp_sum = 0.0, hol_sum = 0.0;
        int seeds_positive = 0;
        for (int s = 0; s < seeds; ++s) {
            ExperimentConfig c;
            c.seed = static_cast<std::uint64_t>(s);
            double cs = 0.0, hs = 0.0;
            for (const auto& m : comp) cs += mean_alignment(m, c, step_lr);
            for (const auto& m : hol) hs += mean_alignment(m, c, step_lr);
            cs /= comp.size();
            hs /= hol.size();
            comp_sum += cs;
            hol_sum += hs;
            seeds_positive += cs > hs;
        }
        const double diff = (comp_sum - hol_sum) / seeds;
        v.require(diff > 0.0, "mean difference " + fmt("%.3g", diff));
        v.note("compositional " + fmt("%.4g", comp_sum / seeds) + " vs holistic " + fmt("%.4g", hol_sum / seeds) +
               ", difference " + fmt("%.3g", diff) + ", positive on " + std::to_string(seeds_positive) + "/" +
               std::to_string(seeds) + " seeds");
    });

    criterion(11, "analytic vs permutation p", 0.0, [&](Verdict& v) {
        const double resolution = 1.0 / static_cast<double>(kDefaultShuffles + 1);
        auto compare = [&](const std::string& name, double analytic, double perm) {
            if (analytic >= 1e-4) {
                const double gap = std::fabs(std::log10(analytic) - std::log10(perm));
                v.require(gap <= 1.0, name + " analytic " + fmt("%.3g", analytic) + " vs permutation " + fmt("%.3g", perm));
                v.note(name + " " + fmt("%.3g", analytic) + " ~ " + fmt("%.3g", perm));
            } else {
                // Below the shuffle resolution the permutation test can only
                // report that no shuffle reached the observed correlation.
                v.require(perm <= 2.0 * resolution, name + " analytic " + fmt("%.3g", analytic) +
                                                        " but permutation p " + fmt("%.3g", perm));
            }
        };
        for (std::size_t i = 0; i < sweeps.size(); ++i) {
            compare(sweeps[i].label + " CL", cl_corr[i].p_analytic, cl_corr[i].p_permutation);
            compare(sweeps[i].label + " topsim", top_corr[i].p_analytic, top_corr[i].p_permutation);
        }
        v.note("sweep p-values all below the 1e-4 resolution and matched by the permutation floor");
        // Seeded synthetic data with moderate correlation, where both tests resolve.
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Xoshiro256 rng(derive_seed(seed, 7));
            std::vector<double> xs(256), ys(256);
            for (std::size_t k = 0; k < xs.size(); ++k) {
                xs[k] = rng.normal();
                ys[k] = 0.15 * xs[k] + rng.normal();
            }
            const auto p = pearson(xs, ys);
            const double perm = pearson_permutation_p(xs, ys, kDefaultShuffles, seed);
            compare("synthetic " + std::to_string(seed) + " (rho " + fmt("%.3f", p.rho) + ")", p.p_value, perm);
        }
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

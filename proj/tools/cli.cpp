#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "compbias/datagen.hpp"
#include "compbias/errors.hpp"
#include "compbias/grammar.hpp"
#include "compbias/harness.hpp"
#include "compbias/mapping.hpp"
#include "compbias/metrics.hpp"
#include "compbias/report.hpp"

namespace fs = std::filesystem;

namespace compbias {
namespace {

// Raised for problems the user can fix on the command line (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigFlags {
    std::optional<std::string> config_file;
    std::optional<std::string> encoding;
    std::optional<std::string> loss;
    std::optional<std::string> optimizer;
    std::optional<std::string> activation;
    std::optional<double> learning_rate;
    std::optional<double> weight_decay;
    std::optional<int> epochs;
    std::optional<std::uint64_t> seed;
    std::optional<int> image_size;
    std::optional<int> projection_dim;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "JSON file with ExperimentConfig fields")->check(CLI::ExistingFile);
        app.add_option("--encoding", encoding, "oht2 | oht3 | image")->check(CLI::IsMember({"oht2", "oht3", "image"}));
        app.add_option("--loss", loss, "ce | l2")->check(CLI::IsMember({"ce", "l2"}));
        app.add_option("--optimizer", optimizer, "sgd | adam")->check(CLI::IsMember({"sgd", "adam"}));
        app.add_option("--activation", activation, "relu | tanh")->check(CLI::IsMember({"relu", "tanh"}));
        app.add_option("--learning-rate", learning_rate);
        app.add_option("--weight-decay", weight_decay);
        app.add_option("--epochs", epochs);
        app.add_option("--seed", seed);
        app.add_option("--image-size", image_size);
        app.add_option("--projection-dim", projection_dim);
    }

    // File values, then COMP_BIAS_SEED, then explicit flags.
    ExperimentConfig resolve() const {
        ExperimentConfig c;
        nlohmann::json j = nlohmann::json::object();
        if (config_file) {
            std::ifstream in(*config_file);
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw UsageError("cannot parse " + *config_file + ": " + e.what());
            }
        }
        if (const char* env = std::getenv("COMP_BIAS_SEED")) {
            std::uint64_t s = 0;
            const std::string_view text(env);
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), s);
            if (ec != std::errc{} || ptr != text.data() + text.size())
                throw UsageError("COMP_BIAS_SEED is not an unsigned integer: '" + std::string(text) + "'");
            if (j.is_object()) j["seed"] = s;
        }
        if (encoding) j["encoding"] = *encoding;
        if (loss) j["loss"] = *loss;
        if (optimizer) j["optimizer"] = *optimizer;
        if (activation) j["activation"] = *activation;
        if (learning_rate) j["learning_rate"] = *learning_rate;
        if (weight_decay) j["weight_decay"] = *weight_decay;
        if (epochs) j["epochs"] = *epochs;
        if (seed) j["seed"] = *seed;
        if (image_size) j["image_size"] = *image_size;
        if (projection_dim) j["projection_dim"] = *projection_dim;
        try {
            return config_from_json(j, c);
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(std::string("bad config value: ") + e.what());
        }
    }
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return in;
}

SpacePtr make_space(int L, int V) {
    try {
        if (L == 2 && V == 2) return std::make_shared<const AttributeSpace>(AttributeSpace::toy256());
        return std::make_shared<const AttributeSpace>(AttributeSpace::make(L, V));
    } catch (const InvalidSpace& e) {
        throw UsageError(e.what());
    }
}

std::vector<Mapping> all_mappings(const SpacePtr& space) {
    try {
        return enumerate_mappings(space);
    } catch (const CountExceedsLimit& e) {
        throw UsageError(e.what());
    }
}

std::string table_text(const Mapping& m) {
    std::string s;
    for (int obj = 0; obj < m.size(); ++obj) {
        if (obj > 0) s += '|';
        s += m.code_string(obj);
    }
    return s;
}

int cmd_enumerate(int L, int V, std::ostream& out) {
    const auto space = make_space(L, V);
    const auto maps = all_mappings(space);
    std::map<MappingKind, std::size_t> counts;
    out << "mapping_id,table,class,image_size\n";
    for (const auto& m : maps) {
        const auto c = classify(m);
        ++counts[c.kind];
        out << m.id() << ',' << table_text(m) << ',' << kind_name(c.kind) << ',' << c.degenerate_image_size << '\n';
    }
    const auto degenerate = counts[MappingKind::FullyDegenerate];
    out << "# total " << maps.size() << ": compositional " << counts[MappingKind::CompositionalBijection]
        << ", holistic " << counts[MappingKind::HolisticBijection] << ", non_bijection "
        << counts[MappingKind::NonBijection] + degenerate << " (fully degenerate " << degenerate << ")\n";
    return 0;
}

int cmd_complexity(int L, int V, const std::string& out_path, std::ostream& out) {
    const auto space = make_space(L, V);
    std::vector<ComplexityRow> rows;
    for (const auto& m : all_mappings(space)) rows.push_back(complexity_row(m));
    auto file = open_out(out_path);
    write_complexity_csv(file, rows);
    const auto violations = simplicity_violations(rows);
    out << "wrote " << rows.size() << " rows to " << out_path << '\n';
    out << "non-bijections costlier than the cheapest bijection: " << violations.size() << '\n';
    for (const auto& v : violations)
        out << "  " << v.mapping_id << ' ' << v.sequence << ' ' << format_double(v.cl_bits) << '\n';
    return 0;
}

void print_correlations(std::span<const RunResult> runs, std::size_t shuffles, std::uint64_t seed, std::ostream& out) {
    out << "metric,rho,p_analytic,p_permutation,used,excluded\n";
    for (auto [metric, name] : {std::pair{XMetric::CL, "cl"}, std::pair{XMetric::Topsim, "topsim"}}) {
        const auto c = correlate_sweep(runs, metric, shuffles, seed);
        out << name << ',' << format_double(c.rho) << ',' << format_double(c.p_analytic) << ','
            << format_double(c.p_permutation) << ',' << c.used << ',' << c.excluded << '\n';
    }
}

void write_dataset_dump(const fs::path& dir, const ExperimentConfig& config) {
    const auto maps = enumerate_mappings(std::make_shared<const AttributeSpace>(AttributeSpace::toy256()));
    const auto ds = build_dataset(maps.front(), config.encoding, config.seed, config.dataset_options());
    auto inputs = open_out(dir / "inputs.csv");
    inputs << "object";
    for (int j = 0; j < ds.inputs.cols; ++j) inputs << ",x" << j;
    inputs << '\n';
    for (int i = 0; i < ds.inputs.rows; ++i) {
        inputs << i;
        for (double v : ds.inputs.row(i)) inputs << ',' << format_double(v);
        inputs << '\n';
    }
    auto labels = open_out(dir / "labels.csv");
    labels << "mapping_id,object,y1,y2\n";
    for (const auto& m : maps) {
        const auto d = build_dataset(m, config.encoding, config.seed, config.dataset_options());
        for (int i = 0; i < 4; ++i) labels << m.id() << ',' << i << ',' << d.labels[i][0] << ',' << d.labels[i][1] << '\n';
    }
}

int cmd_train(const ConfigFlags& flags, const std::string& out_dir, bool serial, bool dump, std::ostream& out) {
    const auto config = flags.resolve();
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const auto runs = serial ? run_sweep_serial(config) : run_sweep(config);
    std::size_t diverged = 0;
    for (const auto& r : runs) diverged += r.diverged;
    {
        auto f = open_out(dir / "runs.csv");
        write_runs_csv(f, runs);
    }
    {
        auto f = open_out(dir / "curves.csv");
        write_curves_csv(f, runs);
    }
    {
        auto f = open_out(dir / "manifest.json");
        f << manifest_json(config, runs.size(), diverged).dump(2) << '\n';
    }
    if (dump) write_dataset_dump(dir, config);
    out << "trained " << runs.size() << " mappings (" << diverged << " diverged), results in " << dir.string() << '\n';
    print_correlations(runs, kDefaultShuffles, config.seed, out);
    return 0;
}

std::vector<RunResult> load_runs(const fs::path& dir, bool with_curves) {
    auto in = open_in(dir / "runs.csv");
    auto runs = read_runs_csv(in);
    if (with_curves) {
        auto cin = open_in(dir / "curves.csv");
        read_curves_csv(cin, runs);
    }
    return runs;
}

int cmd_correlate(const std::string& in_dir, std::size_t shuffles, std::uint64_t seed, std::ostream& out) {
    const auto runs = load_runs(in_dir, false);
    print_correlations(runs, shuffles, seed, out);
    return 0;
}

int cmd_probe(const ConfigFlags& flags, int seeds, double step_lr, std::ostream& out) {
    if (seeds < 1) throw UsageError("--seeds must be positive");
    auto config = flags.resolve();
    const auto space = std::make_shared<const AttributeSpace>(AttributeSpace::toy256());
    std::vector<Mapping> comp, hol;
    for (const auto& m : enumerate_mappings(space)) {
        const auto kind = classify(m).kind;
        if (kind == MappingKind::CompositionalBijection) comp.push_back(m);
        if (kind == MappingKind::HolisticBijection) hol.push_back(m);
    }
    auto mean_over = [&](const std::vector<Mapping>& ms) {
        double total = 0.0;
        for (const auto& m : ms) total += mean_alignment(m, config, step_lr);
        return total / static_cast<double>(ms.size());
    };
    const std::uint64_t first = config.seed;
    double comp_total = 0.0, hol_total = 0.0;
    out << "seed,compositional,holistic,difference\n";
    for (int s = 0; s < seeds; ++s) {
        config.seed = first + static_cast<std::uint64_t>(s);
        const double c = mean_over(comp);
        const double h = mean_over(hol);
        comp_total += c;
        hol_total += h;
        out << config.seed << ',' << format_double(c) << ',' << format_double(h) << ',' << format_double(c - h) << '\n';
    }
    out << "mean," << format_double(comp_total / seeds) << ',' << format_double(hol_total / seeds) << ','
        << format_double((comp_total - hol_total) / seeds) << '\n';
    return 0;
}

int cmd_plot(const std::string& in_dir, const std::string& out_dir, std::ostream& out) {
    const auto runs = load_runs(in_dir, true);
    const fs::path dir(out_dir.empty() ? in_dir : out_dir);
    fs::create_directories(dir);

    std::vector<CurveSeries> series;
    std::vector<ScatterPoint> cl_points, topsim_points;
    std::vector<double> cls, tops, conv;
    for (const auto& r : runs) {
        series.push_back({r.mapping_id, r.cls.kind, r.curve.losses});
        if (r.diverged) continue;
        cl_points.push_back({r.mapping_id, r.cls.kind, r.cl_bits, r.convergence_time});
        topsim_points.push_back({r.mapping_id, r.cls.kind, r.topsim, r.convergence_time});
        cls.push_back(r.cl_bits);
        tops.push_back(r.topsim);
        conv.push_back(r.convergence_time);
    }
    auto rho_or_none = [&](const std::vector<double>& xs) -> std::optional<double> {
        try {
            return pearson(xs, conv).rho;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    auto write = [&](const std::string& name, const std::string& svg) {
        auto f = open_out(dir / name);
        f << svg;
        out << "wrote " << (dir / name).string() << '\n';
    };
    write("curves.svg", emit_svg(PlotSpec{PlotKind::Curves, "Training loss per mapping", "epoch", "loss"}, series));
    write("cl_scatter.svg", emit_svg(PlotSpec{PlotKind::Scatter, "Coding length vs convergence time",
                                              "coding length (bits)", "convergence time"},
                                     cl_points, rho_or_none(cls)));
    write("topsim_scatter.svg",
          emit_svg(PlotSpec{PlotKind::Scatter, "Topsim vs convergence time", "topsim", "convergence time"},
                   topsim_points, rho_or_none(tops)));
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Compositionality and learning-speed experiments on the Toy256 language", "compbias"};
    app.set_version_flag("--version", COMPBIAS_VERSION);
    app.require_subcommand(1);

    int L = 2, V = 2;
    auto* enumerate = app.add_subcommand("enumerate", "List every mapping with its class");
    enumerate->add_option("--L", L, "number of attributes");
    enumerate->add_option("--V", V, "values per attribute");

    std::string cl_out;
    auto* complexity = app.add_subcommand("complexity", "Grammar coding length of every mapping");
    complexity->add_option("--L", L, "number of attributes");
    complexity->add_option("--V", V, "values per attribute");
    complexity->add_option("--out", cl_out, "CSV destination")->required();

    ConfigFlags train_flags;
    std::string train_out;
    bool serial = false, dump = false;
    auto* train = app.add_subcommand("train", "Train one network per Toy256 mapping");
    train_flags.attach(*train);
    train->add_option("--out", train_out, "output directory")->required();
    train->add_flag("--serial", serial, "run the single-threaded reference sweep");
    train->add_flag("--dump-dataset", dump, "also write inputs.csv and labels.csv");

    std::string corr_in;
    std::size_t shuffles = kDefaultShuffles;
    std::uint64_t perm_seed = 0;
    auto* correlate = app.add_subcommand("correlate", "Pearson correlations of a finished sweep");
    correlate->add_option("--in", corr_in, "sweep directory")->required();
    correlate->add_option("--shuffles", shuffles, "permutation-test shuffles");
    correlate->add_option("--perm-seed", perm_seed, "permutation-test seed");

    ConfigFlags probe_flags;
    int seeds = 10;
    double step_lr = 0.01;
    auto* probe = app.add_subcommand("probe", "One-step influence of each example on the others");
    probe_flags.attach(*probe);
    probe->add_option("--seeds", seeds, "number of consecutive seeds starting at the config seed");
    probe->add_option("--step", step_lr, "size of the single gradient step");

    std::string plot_in, plot_out;
    auto* plot = app.add_subcommand("plot", "SVG learning curves and scatter plots");
    plot->add_option("--in", plot_in, "sweep directory")->required();
    plot->add_option("--out", plot_out, "output directory (defaults to --in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << COMPBIAS_VERSION << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        if (argc > 1) err << "error: " << e.what() << '\n';
        err << app.help();
        return 2;
    }

    try {
        if (*enumerate) return cmd_enumerate(L, V, out);
        if (*complexity) return cmd_complexity(L, V, cl_out, out);
        if (*train) return cmd_train(train_flags, train_out, serial, dump, out);
        if (*correlate) return cmd_correlate(corr_in, shuffles, perm_seed, out);
        if (*probe) return cmd_probe(probe_flags, seeds, step_lr, out);
        if (*plot) return cmd_plot(plot_in, plot_out, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace compbias

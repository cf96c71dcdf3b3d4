#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "compbias/harness.hpp"
#include "compbias/mapping.hpp"

namespace compbias {

// Shortest text that parses back to the identical double.
std::string format_double(double value);

std::vector<std::string> split_csv_line(std::string_view line);

// runs.csv: one row per run. The learning curve goes to curves.csv.
void write_runs_csv(std::ostream& out, std::span<const RunResult> results);
std::vector<RunResult> read_runs_csv(std::istream& in);

// curves.csv: long format mapping_id,epoch,loss.
void write_curves_csv(std::ostream& out, std::span<const RunResult> results);
// Attaches curves to the runs with matching mapping_id.
void read_curves_csv(std::istream& in, std::vector<RunResult>& results);

struct ComplexityRow {
    std::uint64_t mapping_id = 0;
    MappingKind kind = MappingKind::NonBijection;
    int image_size = 0;
    std::string sequence;
    std::size_t sequence_length = 0;
    double cl_bits = 0.0;
    std::uint64_t huffman_bits = 0;
};

ComplexityRow complexity_row(const Mapping& mapping);
// Sequences contain ',' and ';', so that column is always double-quoted.
void write_complexity_csv(std::ostream& out, std::span<const ComplexityRow> rows);
std::vector<ComplexityRow> read_complexity_csv(std::istream& in);

// Non-bijections whose coding length exceeds the cheapest bijection.
std::vector<ComplexityRow> simplicity_violations(std::span<const ComplexityRow> rows);

// Missing keys keep the values of `base`; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
nlohmann::json manifest_json(const ExperimentConfig& config, std::size_t runs, std::size_t diverged);

enum class PlotKind { Curves, Scatter };

struct PlotSpec {
    PlotKind kind = PlotKind::Scatter;
    std::string title;
    std::string x_label;
    std::string y_label;
};

struct CurveSeries {
    std::uint64_t mapping_id = 0;
    MappingKind kind = MappingKind::NonBijection;
    std::vector<double> values;
};

struct ScatterPoint {
    std::uint64_t mapping_id = 0;
    MappingKind kind = MappingKind::NonBijection;
    double x = 0.0;
    double y = 0.0;
};

std::string_view class_color(MappingKind kind);

std::string emit_svg(const PlotSpec& spec, std::span<const CurveSeries> series);
std::string emit_svg(const PlotSpec& spec, std::span<const ScatterPoint> points,
                     std::optional<double> pearson_rho = std::nullopt);

}  // namespace compbias

#include "compbias/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "compbias/errors.hpp"
#include "compbias/grammar.hpp"

namespace compbias {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad number in CSV: '" + std::string(s) + "'");
    return v;
}

template <typename T>
T parse_int(std::string_view s, int base = 10) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("bad integer in CSV: '" + std::string(s) + "'");
    return v;
}

void expect_header(std::istream& in, std::string_view header) {
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw std::runtime_error("unexpected CSV header, wanted: " + std::string(header));
}

MappingKind parse_kind(std::string_view s) {
    const auto k = kind_from_name(s);
    if (!k) throw std::runtime_error("unknown mapping class '" + std::string(s) + "'");
    return *k;
}

SpacePtr toy_space() { return std::make_shared<const AttributeSpace>(AttributeSpace::toy256()); }

constexpr std::string_view kRunsHeader =
    "mapping_id,table,class,image_size,cl_bits,topsim,convergence_time,final_loss,diverged,input_hash";
constexpr std::string_view kCurvesHeader = "mapping_id,epoch,loss";
constexpr std::string_view kComplexityHeader =
    "mapping_id,class,image_size,sequence,sequence_length,cl_bits,huffman_bits";

std::string table_string(const Mapping& m) {
    std::string s;
    for (int i = 0; i < m.size(); ++i) {
        if (i > 0) s.push_back('|');
        s += m.code_string(i);
    }
    return s;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

void write_runs_csv(std::ostream& out, std::span<const RunResult> results) {
    const auto space = toy_space();
    out << kRunsHeader << '\n';
    for (const auto& r : results) {
        char hash[20];
        std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(r.input_hash));
        out << r.mapping_id << ',' << table_string(mapping_from_id(space, r.mapping_id)) << ','
            << kind_name(r.cls.kind) << ',' << r.cls.degenerate_image_size << ',' << format_double(r.cl_bits) << ','
            << format_double(r.topsim) << ',' << format_double(r.convergence_time) << ','
            << format_double(r.final_loss) << ',' << (r.diverged ? 1 : 0) << ',' << hash << '\n';
    }
}

std::vector<RunResult> read_runs_csv(std::istream& in) {
    expect_header(in, kRunsHeader);
    const auto space = toy_space();
    std::vector<RunResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) throw std::runtime_error("runs.csv row has " + std::to_string(f.size()) + " fields");
        RunResult r;
        r.mapping_id = parse_int<std::uint64_t>(f[0]);
        r.cls.kind = parse_kind(f[2]);
        r.cls.degenerate_image_size = parse_int<int>(f[3]);
        if (r.cls.kind == MappingKind::CompositionalBijection)
            r.cls.witness = classify(mapping_from_id(space, r.mapping_id)).witness;
        r.cl_bits = parse_double(f[4]);
        r.topsim = parse_double(f[5]);
        r.convergence_time = parse_double(f[6]);
        r.final_loss = parse_double(f[7]);
        r.diverged = f[8] == "1";
        r.input_hash = parse_int<std::uint64_t>(f[9], 16);
        out.push_back(std::move(r));
    }
    return out;
}

void write_curves_csv(std::ostream& out, std::span<const RunResult> results) {
    out << kCurvesHeader << '\n';
    for (const auto& r : results)
        for (std::size_t e = 0; e < r.curve.losses.size(); ++e)
            out << r.mapping_id << ',' << e << ',' << format_double(r.curve.losses[e]) << '\n';
}

void read_curves_csv(std::istream& in, std::vector<RunResult>& results) {
    expect_header(in, kCurvesHeader);
    std::map<std::uint64_t, RunResult*> by_id;
    for (auto& r : results) {
        r.curve.losses.clear();
        by_id[r.mapping_id] = &r;
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 3) throw std::runtime_error("curves.csv row must have 3 fields");
        const auto it = by_id.find(parse_int<std::uint64_t>(f[0]));
        if (it == by_id.end()) throw std::runtime_error("curves.csv references an unknown mapping_id");
        auto& losses = it->second->curve.losses;
        if (parse_int<std::size_t>(f[1]) != losses.size()) throw std::runtime_error("curves.csv epochs out of order");
        losses.push_back(parse_double(f[2]));
    }
}

ComplexityRow complexity_row(const Mapping& mapping) {
    const auto cls = classify(mapping);
    const auto seq = serialize(build_grammar(mapping));
    ComplexityRow row;
    row.mapping_id = mapping.id();
    row.kind = cls.kind;
    row.image_size = cls.degenerate_image_size;
    row.sequence = seq.symbols;
    row.sequence_length = seq.size();
    row.cl_bits = coding_length(seq);
    row.huffman_bits = huffman_bits(seq);
    return row;
}

void write_complexity_csv(std::ostream& out, std::span<const ComplexityRow> rows) {
    out << kComplexityHeader << '\n';
    for (const auto& r : rows)
        out << r.mapping_id << ',' << kind_name(r.kind) << ',' << r.image_size << ",\"" << r.sequence << "\","
            << r.sequence_length << ',' << format_double(r.cl_bits) << ',' << r.huffman_bits << '\n';
}

std::vector<ComplexityRow> read_complexity_csv(std::istream& in) {
    expect_header(in, kComplexityHeader);
    std::vector<ComplexityRow> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw std::runtime_error("complexity row must have 7 fields");
        ComplexityRow r;
        r.mapping_id = parse_int<std::uint64_t>(f[0]);
        r.kind = parse_kind(f[1]);
        r.image_size = parse_int<int>(f[2]);
        r.sequence = f[3];
        r.sequence_length = parse_int<std::size_t>(f[4]);
        r.cl_bits = parse_double(f[5]);
        r.huffman_bits = parse_int<std::uint64_t>(f[6]);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ComplexityRow> simplicity_violations(std::span<const ComplexityRow> rows) {
    double min_bijection = std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
        if (r.kind == MappingKind::HolisticBijection || r.kind == MappingKind::CompositionalBijection)
            min_bijection = std::min(min_bijection, r.cl_bits);
    std::vector<ComplexityRow> out;
    for (const auto& r : rows)
        if ((r.kind == MappingKind::NonBijection || r.kind == MappingKind::FullyDegenerate) &&
            r.cl_bits > min_bijection)
            out.push_back(r);
    return out;
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "encoding") {
            const auto e = encoding_from_name(value.get<std::string>());
            if (!e) throw ConfigError("unknown encoding '" + value.get<std::string>() + "'");
            c.encoding = *e;
        } else if (key == "loss") {
            const auto s = value.get<std::string>();
            if (s != "ce" && s != "l2") throw ConfigError("unknown loss '" + s + "'");
            c.loss = s == "ce" ? LossKind::CE : LossKind::L2;
        } else if (key == "optimizer") {
            const auto s = value.get<std::string>();
            if (s != "sgd" && s != "adam") throw ConfigError("unknown optimizer '" + s + "'");
            c.optimizer = s == "sgd" ? OptimizerKind::SGD : OptimizerKind::Adam;
        } else if (key == "activation") {
            const auto s = value.get<std::string>();
            if (s != "relu" && s != "tanh") throw ConfigError("unknown activation '" + s + "'");
            c.activation = s == "relu" ? Activation::ReLU : Activation::Tanh;
        } else if (key == "learning_rate") {
            c.learning_rate = value.get<double>();
        } else if (key == "weight_decay") {
            c.weight_decay = value.get<double>();
        } else if (key == "epochs") {
            c.epochs = value.get<int>();
        } else if (key == "seed") {
            c.seed = value.get<std::uint64_t>();
        } else if (key == "image_size") {
            c.image_size = value.get<int>();
        } else if (key == "projection_dim") {
            c.projection_dim = value.get<int>();
        } else {
            throw ConfigError("unknown config field '" + key + "'");
        }
    }
    c.validate();
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    return {
        {"encoding", encoding_name(c.encoding)},
        {"loss", loss_name(c.loss)},
        {"optimizer", optimizer_name(c.optimizer)},
        {"learning_rate", c.learning_rate},
        {"weight_decay", c.weight_decay},
        {"epochs", c.epochs},
        {"seed", c.seed},
        {"image_size", c.image_size},
        {"projection_dim", c.projection_dim},
        {"activation", activation_name(c.activation)},
    };
}

nlohmann::json manifest_json(const ExperimentConfig& c, std::size_t runs, std::size_t diverged) {
    const auto space = AttributeSpace::toy256();
    nlohmann::json alphabet = nlohmann::json::object();
    for (int a = 0; a < space.num_attributes; ++a)
        for (int v = 0; v < space.values_per_attribute; ++v)
            alphabet[space.attribute_names[a][v]] = std::string(1, space.value_symbols[a][v]);
    const auto shape = c.net_shape();
    return {
        {"code_version", COMPBIAS_VERSION},
        {"config", config_to_json(c)},
        {"seeds",
         {{"experiment", c.seed},
          {"projection", projection_seed(c.seed)},
          {"init", init_seed(c.seed)},
          {"per_run", "derive_seed(derive_seed(experiment, 3), mapping_id)"}}},
        {"rng", "xoshiro256** seeded through splitmix64"},
        {"network",
         {{"input_dim", shape.input_dim},
          {"hidden_width", shape.hidden_width},
          {"hidden_layers", shape.hidden_layers},
          {"heads", "2 x linear(hidden_width, 2) + softmax"},
          {"batch", "full batch, 4 examples"}}},
        {"symbol_alphabet", alphabet},
        {"runs", runs},
        {"diverged", diverged},
    };
}

// ---------------------------------------------------------------------------
// SVG

std::string_view class_color(MappingKind kind) {
    switch (kind) {
        case MappingKind::CompositionalBijection: return "#1f4fd8";
        case MappingKind::HolisticBijection: return "#d62728";
        case MappingKind::NonBijection: return "#a0a0a0";
        case MappingKind::FullyDegenerate: return "#2ca02c";
    }
    return "#000000";
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
    void widen() {
        if (hi - lo <= 0.0) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

struct Frame {
    Range x, y;
    double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
    double py(double v) const { return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom); }
};

// Draw order puts the bijections on top of the grey non-bijection cloud.
constexpr MappingKind kDrawOrder[] = {MappingKind::NonBijection, MappingKind::FullyDegenerate,
                                      MappingKind::HolisticBijection, MappingKind::CompositionalBijection};

void open_document(std::ostringstream& os, const PlotSpec& spec, const Frame& f) {
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(kWidth, 0) << "\" height=\""
       << fixed(kHeight, 0) << "\" viewBox=\"0 0 " << fixed(kWidth, 0) << ' ' << fixed(kHeight, 0) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"15\">"
       << escape(spec.title) << "</text>\n";
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    os << "<g stroke=\"black\" stroke-width=\"1\">"
       << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x1) << "\" y2=\"" << fixed(y0)
       << "\"/>"
       << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(y0) << "\" x2=\"" << fixed(x0) << "\" y2=\"" << fixed(y1)
       << "\"/></g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = f.x.lo + (f.x.hi - f.x.lo) * t / 4.0;
        const double yv = f.y.lo + (f.y.hi - f.y.lo) * t / 4.0;
        os << "<text x=\"" << fixed(f.px(xv)) << "\" y=\"" << fixed(y0 + 16) << "\" text-anchor=\"middle\">"
           << fixed(xv, 3) << "</text>\n";
        os << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(f.py(yv) + 4) << "\" text-anchor=\"end\">"
           << fixed(yv, 3) << "</text>\n";
    }
    os << "<text x=\"" << fixed((x0 + x1) / 2) << "\" y=\"" << fixed(kHeight - 10)
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(spec.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << fixed((y0 + y1) / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
       << "transform=\"rotate(-90 16 " << fixed((y0 + y1) / 2) << ")\">" << escape(spec.y_label) << "</text>\n";
    os << "</g>\n";
}

void close_document(std::ostringstream& os) {
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    double y = kTop + 6;
    for (auto kind : {MappingKind::CompositionalBijection, MappingKind::HolisticBijection, MappingKind::NonBijection,
                      MappingKind::FullyDegenerate}) {
        const double x = kWidth - kRight - 120;
        os << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"10\" height=\"10\" fill=\""
           << class_color(kind) << "\"/><text x=\"" << fixed(x + 16) << "\" y=\"" << fixed(y + 9) << "\">"
           << kind_name(kind) << "</text>\n";
        y += 15;
    }
    os << "</g>\n</svg>\n";
}

}  // namespace

std::string emit_svg(const PlotSpec& spec, std::span<const CurveSeries> series) {
    if (series.empty()) throw EmptyData("no curves to plot");
    Frame f;
    f.y = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    std::size_t longest = 0;
    for (const auto& s : series) {
        longest = std::max(longest, s.values.size());
        for (double v : s.values) {
            f.y.lo = std::min(f.y.lo, v);
            f.y.hi = std::max(f.y.hi, v);
        }
    }
    if (longest == 0) throw EmptyData("curves have no points");
    f.x = {0.0, static_cast<double>(longest - 1)};
    f.x.widen();
    f.y.widen();
    std::ostringstream os;
    open_document(os, spec, f);
    // At most ~400 vertices per polyline keeps 256-curve plots small.
    const std::size_t stride = std::max<std::size_t>(1, longest / 400);
    for (auto kind : kDrawOrder) {
        os << "<g fill=\"none\" stroke=\"" << class_color(kind) << "\" stroke-width=\"1\" stroke-opacity=\"0.7\">\n";
        for (const auto& s : series) {
            if (s.kind != kind || s.values.empty()) continue;
            os << "<polyline data-id=\"" << s.mapping_id << "\" data-class=\"" << kind_name(kind) << "\" points=\"";
            for (std::size_t e = 0; e < s.values.size(); e += stride) {
                if (e > 0) os << ' ';
                os << fixed(f.px(static_cast<double>(e))) << ',' << fixed(f.py(s.values[e]));
            }
            if ((s.values.size() - 1) % stride != 0) {
                const std::size_t e = s.values.size() - 1;
                os << ' ' << fixed(f.px(static_cast<double>(e))) << ',' << fixed(f.py(s.values[e]));
            }
            os << "\"/>\n";
        }
        os << "</g>\n";
    }
    close_document(os);
    return os.str();
}

std::string emit_svg(const PlotSpec& spec, std::span<const ScatterPoint> points, std::optional<double> pearson_rho) {
    if (points.empty()) throw EmptyData("no points to plot");
    Frame f;
    const double inf = std::numeric_limits<double>::infinity();
    f.x = {inf, -inf};
    f.y = {inf, -inf};
    for (const auto& p : points) {
        f.x.lo = std::min(f.x.lo, p.x);
        f.x.hi = std::max(f.x.hi, p.x);
        f.y.lo = std::min(f.y.lo, p.y);
        f.y.hi = std::max(f.y.hi, p.y);
    }
    f.x.widen();
    f.y.widen();
    std::ostringstream os;
    open_document(os, spec, f);
    for (auto kind : kDrawOrder) {
        os << "<g fill=\"" << class_color(kind) << "\" fill-opacity=\"0.8\">\n";
        for (const auto& p : points) {
            if (p.kind != kind) continue;
            os << "<circle data-id=\"" << p.mapping_id << "\" data-class=\"" << kind_name(kind) << "\" cx=\""
               << fixed(f.px(p.x)) << "\" cy=\"" << fixed(f.py(p.y)) << "\" r=\"3\"/>\n";
        }
        os << "</g>\n";
    }
    if (pearson_rho)
        os << "<text x=\"" << fixed(kLeft + 10) << "\" y=\"" << fixed(kTop + 14)
           << "\" font-family=\"sans-serif\" font-size=\"12\">Pearson rho = " << fixed(*pearson_rho, 4)
           << "</text>\n";
    close_document(os);
    return os.str();
}

}  // namespace compbias

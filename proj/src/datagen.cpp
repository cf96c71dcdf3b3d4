#include "compbias/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "compbias/errors.hpp"
#include "compbias/rng.hpp"

namespace compbias {

std::string_view encoding_name(Encoding e) {
    switch (e) {
        case Encoding::OHT2: return "oht2";
        case Encoding::OHT3: return "oht3";
        case Encoding::Image: return "image";
    }
    return "?";
}

std::optional<Encoding> encoding_from_name(std::string_view name) {
    for (auto e : {Encoding::OHT2, Encoding::OHT3, Encoding::Image})
        if (encoding_name(e) == name) return e;
    return std::nullopt;
}

ProjectionMatrix ProjectionMatrix::sample(int rows, int cols, std::uint64_t seed) {
    ProjectionMatrix w{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
    Xoshiro256 rng(seed);
    for (double& x : w.entries) x = rng.normal();
    return w;
}

ProjectionMatrix ProjectionMatrix::identity(int n) {
    ProjectionMatrix w{n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
    for (int i = 0; i < n; ++i) w.entries[static_cast<std::size_t>(i) * n + i] = 1.0;
    return w;
}

namespace {

std::vector<double> encode_one_hot(const AttributeSpace& space, int object, const ProjectionMatrix& w, int block) {
    const int rows = space.num_attributes * block;
    if (w.rows != rows) throw ShapeMismatch("projection matrix needs " + std::to_string(rows) + " rows");
    const auto values = space.digits(object);
    std::vector<double> out(w.cols, 0.0);
    for (int a = 0; a < space.num_attributes; ++a) {
        const int hot = a * block + (space.values_per_attribute - 1 - values[a]);
        const double* row = w.entries.data() + static_cast<std::size_t>(hot) * w.cols;
        for (int j = 0; j < w.cols; ++j) out[j] += row[j];
    }
    return out;
}

}  // namespace

std::vector<double> encode_oht2(const AttributeSpace& space, int object, const ProjectionMatrix& w) {
    return encode_one_hot(space, object, w, space.values_per_attribute);
}

std::vector<double> encode_oht3(const AttributeSpace& space, int object, const ProjectionMatrix& w) {
    return encode_one_hot(space, object, w, space.values_per_attribute + 1);
}

std::vector<double> render_image(int object, int size) {
    if (size < 8) throw InvalidSize("image size must be at least 8");
    if (object < 0 || object >= 4) throw InvalidSize("image rendering covers the four Toy256 objects");
    const bool red = object / 2 == 1;
    const bool circle = object % 2 == 1;
    const double half = 0.5 * kShapeSideFraction * size;
    const double radius = kShapeSideFraction * size / std::sqrt(std::numbers::pi);
    const double centre = 0.5 * size;
    std::vector<double> img(static_cast<std::size_t>(size) * size * 3, 0.0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double dx = x + 0.5 - centre;
            const double dy = y + 0.5 - centre;
            const bool inside = circle ? dx * dx + dy * dy <= radius * radius
                                       : std::fabs(dx) <= half && std::fabs(dy) <= half;
            if (!inside) continue;
            double* px = img.data() + (static_cast<std::size_t>(y) * size + x) * 3;
            px[red ? 0 : 2] = 1.0;
        }
    return img;
}

std::uint64_t projection_seed(std::uint64_t experiment_seed) { return derive_seed(experiment_seed, 1); }

int input_dim(Encoding encoding, const DatasetOptions& options) {
    return encoding == Encoding::Image ? options.image_size * options.image_size * 3 : options.projection_dim;
}

std::uint64_t hash_inputs(const Matrix& inputs) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : inputs.data) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

void require_distinct_rows(const Matrix& inputs) {
    for (int i = 0; i < inputs.rows; ++i)
        for (int j = i + 1; j < inputs.rows; ++j) {
            const auto a = inputs.row(i);
            const auto b = inputs.row(j);
            if (std::equal(a.begin(), a.end(), b.begin()))
                throw InputCollision("objects " + std::to_string(i) + " and " + std::to_string(j) +
                                     " share an input vector");
        }
}

Dataset build_dataset(const Mapping& mapping, Encoding encoding, std::uint64_t seed, const DatasetOptions& options) {
    mapping.validate();
    const auto& space = *mapping.space;
    if (space.num_attributes != kNumHeads || space.values_per_attribute != kHeadClasses)
        throw InvalidSpace("datasets are defined for the two-attribute, two-value space");
    if (options.projection_dim < 1) throw ShapeMismatch("projection_dim must be positive");

    const int n = mapping.size();
    Dataset ds;
    ds.encoding = encoding;
    ds.mapping_id = mapping.id();
    ds.inputs = Matrix(n, input_dim(encoding, options));

    ProjectionMatrix w;
    if (encoding != Encoding::Image) {
        const int block = space.values_per_attribute + (encoding == Encoding::OHT3 ? 1 : 0);
        w = ProjectionMatrix::sample(space.num_attributes * block, options.projection_dim, projection_seed(seed));
    }
    for (int obj = 0; obj < n; ++obj) {
        std::vector<double> x;
        switch (encoding) {
            case Encoding::OHT2: x = encode_oht2(space, obj, w); break;
            case Encoding::OHT3: x = encode_oht3(space, obj, w); break;
            case Encoding::Image: x = render_image(obj, options.image_size); break;
        }
        std::copy(x.begin(), x.end(), ds.inputs.row(obj).begin());
        const auto code = space.digits(mapping.table[obj]);
        ds.labels.push_back({code[0], code[1]});
    }
    require_distinct_rows(ds.inputs);
    return ds;
}

}  // namespace compbias

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "compbias/mapping.hpp"
#include "compbias/nn.hpp"

namespace compbias {

enum class Encoding { OHT2, OHT3, Image };

std::string_view encoding_name(Encoding e);
std::optional<Encoding> encoding_from_name(std::string_view name);

struct ProjectionMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> entries;  // row-major, standard normal

    static ProjectionMatrix sample(int rows, int cols, std::uint64_t seed);
    static ProjectionMatrix identity(int n);
};

// One-hot blocks per attribute (value v sets slot V-1-v, so blue = 01 and
// red = 10), concatenated in attribute order and multiplied by W.
std::vector<double> encode_oht2(const AttributeSpace& space, int object, const ProjectionMatrix& w);
// As encode_oht2 with one extra, never-set slot at the end of every block.
std::vector<double> encode_oht3(const AttributeSpace& space, int object, const ProjectionMatrix& w);

inline std::vector<double> encode_oht2(int object, const ProjectionMatrix& w) {
    return encode_oht2(AttributeSpace::toy256(), object, w);
}
inline std::vector<double> encode_oht3(int object, const ProjectionMatrix& w) {
    return encode_oht3(AttributeSpace::toy256(), object, w);
}

inline constexpr double kShapeSideFraction = 0.6;

// size x size x 3 raster (row-major, interleaved RGB) on black. Toy256
// objects only: attribute 0 picks the colour (blue, red), attribute 1 the
// shape (box, circle). The disc has the same area as the box.
std::vector<double> render_image(int object, int size);

struct DatasetOptions {
    int projection_dim = 16;
    int image_size = 32;
};

struct Dataset {
    Matrix inputs;  // one row per object
    std::vector<Labels> labels;
    Encoding encoding = Encoding::OHT2;
    std::uint64_t mapping_id = 0;
};

// Seed stream used for the projection matrix.
std::uint64_t projection_seed(std::uint64_t experiment_seed);

int input_dim(Encoding encoding, const DatasetOptions& options);

void require_distinct_rows(const Matrix& inputs);

// Throws InputCollision when two objects receive identical inputs.
Dataset build_dataset(const Mapping& mapping, Encoding encoding, std::uint64_t seed,
                      const DatasetOptions& options = {});

std::uint64_t hash_inputs(const Matrix& inputs);

}  // namespace compbias

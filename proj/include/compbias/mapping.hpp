#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace compbias {

// Factored attribute space G = G_1 x ... x G_L with V values per attribute.
// The code space Z uses the same L x V grid. Objects and codes are indexed by
// mixed-radix encoding with attribute 0 most significant, so for Toy256:
// blue box = 0, blue circle = 1, red box = 2, red circle = 3.
struct AttributeSpace {
    int num_attributes = 0;
    int values_per_attribute = 0;
    std::vector<std::vector<std::string>> attribute_names;
    // One single-character symbol per attribute value, used by the grammar coder.
    std::vector<std::string> value_symbols;

    static AttributeSpace toy256();
    // Generated names ("a0v1", ...) and a disjoint lowercase/uppercase symbol pool.
    static AttributeSpace make(int num_attributes, int values_per_attribute);

    int object_count() const;
    std::vector<int> digits(int index) const;
    int index_of(std::span<const int> digits) const;
    void validate() const;
};

using SpacePtr = std::shared_ptr<const AttributeSpace>;

struct Mapping {
    std::vector<int> table;  // table[object] = code index
    SpacePtr space;

    int size() const { return static_cast<int>(table.size()); }
    // Position in lexicographic table order (entry 0 most significant).
    std::uint64_t id() const;
    // Code string of one object, e.g. "01".
    std::string code_string(int object) const;
    void validate() const;
};

Mapping mapping_from_id(SpacePtr space, std::uint64_t id);
Mapping mapping_from_table(SpacePtr space, std::vector<int> table);

inline constexpr std::uint64_t kDefaultEnumerationLimit = 1'000'000;

std::vector<Mapping> enumerate_mappings(SpacePtr space,
                                        std::uint64_t limit = kDefaultEnumerationLimit);

enum class MappingKind { FullyDegenerate, NonBijection, HolisticBijection, CompositionalBijection };

std::string_view kind_name(MappingKind kind);
std::optional<MappingKind> kind_from_name(std::string_view name);

// Coordinate i of the code reads attribute attribute_assignment[i] through the
// value bijection value_codes[i].
struct CompositionalWitness {
    std::vector<int> attribute_assignment;
    std::vector<std::vector<int>> value_codes;
};

struct MappingClass {
    MappingKind kind = MappingKind::NonBijection;
    int degenerate_image_size = 0;
    std::optional<CompositionalWitness> witness;
};

int image_size(const Mapping& mapping);
bool is_bijection(const Mapping& mapping);

// If code coordinate `coord` is a function of attribute `attr` alone, returns
// that function as a table over the V values of `attr`.
std::optional<std::vector<int>> coordinate_function(const Mapping& mapping, int coord, int attr);

MappingClass classify(const Mapping& mapping);

// Rebuilds a mapping table from a witness (used to verify witnesses).
std::vector<int> apply_witness(const AttributeSpace& space, const CompositionalWitness& witness);

struct PermutationEncoding {
    std::vector<int> sequence;  // 1-based: sequence[i] = table[i] + 1
};

PermutationEncoding permutation_encoding(const Mapping& mapping);
Mapping decode_permutation(SpacePtr space, const PermutationEncoding& encoding);

// Complexity upper bounds in bits.
double k_bound_bijection(int num_attributes, int values_per_attribute);
double k_bound_comp(int num_attributes, int values_per_attribute);

struct GammaRatio {
    double gamma = 0.0;
    double lower_bound = 0.0;
    bool bound_holds = false;
};

GammaRatio gamma_ratio(int num_attributes, int values_per_attribute);

// Cost of a mapping whose first k_shared code coordinates reuse factored
// rules while the remaining coordinates are tabulated object by object.
double partial_comp_bound(int num_attributes, int values_per_attribute, int k_shared);

}  // namespace compbias

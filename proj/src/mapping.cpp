#include "compbias/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "compbias/errors.hpp"

namespace compbias {

namespace {

constexpr std::string_view kSymbolPool =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRTUVWXYZ";  // no 'S': it starts a rule
constexpr int kMaxObjects = 1 << 20;

int checked_pow(int base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= base;
        if (r > kMaxObjects) throw InvalidSpace("V^L too large");
    }
    return static_cast<int>(r);
}

}  // namespace

AttributeSpace AttributeSpace::toy256() {
    AttributeSpace s;
    s.num_attributes = 2;
    s.values_per_attribute = 2;
    s.attribute_names = {{"blue", "red"}, {"box", "circle"}};
    s.value_symbols = {"br", "xc"};
    return s;
}

AttributeSpace AttributeSpace::make(int num_attributes, int values_per_attribute) {
    if (num_attributes == 2 && values_per_attribute == 2) return toy256();
    AttributeSpace s;
    s.num_attributes = num_attributes;
    s.values_per_attribute = values_per_attribute;
    if (num_attributes < 1 || values_per_attribute < 2) throw InvalidSpace("need L >= 1 and V >= 2");
    if (static_cast<std::size_t>(num_attributes) * values_per_attribute > kSymbolPool.size())
        throw InvalidSpace("L*V exceeds the symbol alphabet");
    std::size_t next = 0;
    for (int a = 0; a < num_attributes; ++a) {
        std::vector<std::string> names;
        std::string symbols;
        for (int v = 0; v < values_per_attribute; ++v) {
            names.push_back("a" + std::to_string(a) + "v" + std::to_string(v));
            symbols.push_back(kSymbolPool[next++]);
        }
        s.attribute_names.push_back(std::move(names));
        s.value_symbols.push_back(std::move(symbols));
    }
    s.validate();
    return s;
}

void AttributeSpace::validate() const {
    if (num_attributes < 1) throw InvalidSpace("num_attributes must be >= 1");
    if (values_per_attribute < 2) throw InvalidSpace("values_per_attribute must be >= 2");
    // Messages are written with one decimal digit per coordinate.
    if (values_per_attribute > 10) throw InvalidSpace("values_per_attribute must be <= 10");
    checked_pow(values_per_attribute, num_attributes);
    if (static_cast<int>(attribute_names.size()) != num_attributes ||
        static_cast<int>(value_symbols.size()) != num_attributes)
        throw InvalidSpace("need one name list and one symbol list per attribute");
    std::string all;
    for (int a = 0; a < num_attributes; ++a) {
        const auto& names = attribute_names[a];
        if (static_cast<int>(names.size()) != values_per_attribute ||
            static_cast<int>(value_symbols[a].size()) != values_per_attribute)
            throw InvalidSpace("attribute " + std::to_string(a) + " must have exactly V values");
        auto sorted = names;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidSpace("attribute value names must be distinct");
        all += value_symbols[a];
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw InvalidSpace("value symbols must be distinct across attributes");
    for (char c : all)
        if (kSymbolPool.find(c) == std::string_view::npos)
            throw InvalidSpace(std::string("symbol '") + c + "' collides with the grammar alphabet");
}

int AttributeSpace::object_count() const { return checked_pow(values_per_attribute, num_attributes); }

std::vector<int> AttributeSpace::digits(int index) const {
    std::vector<int> d(num_attributes);
    for (int a = num_attributes - 1; a >= 0; --a) {
        d[a] = index % values_per_attribute;
        index /= values_per_attribute;
    }
    return d;
}

int AttributeSpace::index_of(std::span<const int> d) const {
    int index = 0;
    for (int v : d) index = index * values_per_attribute + v;
    return index;
}

std::uint64_t Mapping::id() const {
    std::uint64_t id = 0;
    const auto n = static_cast<std::uint64_t>(table.size());
    for (int z : table) id = id * n + static_cast<std::uint64_t>(z);
    return id;
}

std::string Mapping::code_string(int object) const {
    std::string s;
    for (int d : space->digits(table[object])) s.push_back(static_cast<char>('0' + d));
    return s;
}

void Mapping::validate() const {
    if (!space) throw InvalidSpace("mapping has no attribute space");
    const int n = space->object_count();
    if (size() != n) throw InvalidSpace("mapping table length must equal V^L");
    for (int z : table)
        if (z < 0 || z >= n) throw InvalidSpace("mapping entry out of range");
}

Mapping mapping_from_id(SpacePtr space, std::uint64_t id) {
    const int n = space->object_count();
    Mapping m{std::vector<int>(n), std::move(space)};
    for (int i = n - 1; i >= 0; --i) {
        m.table[i] = static_cast<int>(id % static_cast<std::uint64_t>(n));
        id /= static_cast<std::uint64_t>(n);
    }
    return m;
}

Mapping mapping_from_table(SpacePtr space, std::vector<int> table) {
    Mapping m{std::move(table), std::move(space)};
    m.validate();
    return m;
}

std::vector<Mapping> enumerate_mappings(SpacePtr space, std::uint64_t limit) {
    space->validate();
    const int n = space->object_count();
    std::uint64_t count = 1;
    for (int i = 0; i < n; ++i) {
        if (count > limit / static_cast<std::uint64_t>(n))
            throw CountExceedsLimit("(V^L)^(V^L) exceeds the enumeration limit of " + std::to_string(limit));
        count *= static_cast<std::uint64_t>(n);
    }
    std::vector<Mapping> out;
    out.reserve(count);
    for (std::uint64_t id = 0; id < count; ++id) out.push_back(mapping_from_id(space, id));
    return out;
}

std::string_view kind_name(MappingKind kind) {
    switch (kind) {
        case MappingKind::FullyDegenerate: return "degenerate";
        case MappingKind::NonBijection: return "non_bijection";
        case MappingKind::HolisticBijection: return "holistic";
        case MappingKind::CompositionalBijection: return "compositional";
    }
    return "?";
}

std::optional<MappingKind> kind_from_name(std::string_view name) {
    for (auto k : {MappingKind::FullyDegenerate, MappingKind::NonBijection, MappingKind::HolisticBijection,
                   MappingKind::CompositionalBijection})
        if (kind_name(k) == name) return k;
    return std::nullopt;
}

int image_size(const Mapping& mapping) {
    std::vector<char> seen(mapping.table.size(), 0);
    int count = 0;
    for (int z : mapping.table)
        if (!seen[z]) {
            seen[z] = 1;
            ++count;
        }
    return count;
}

bool is_bijection(const Mapping& mapping) { return image_size(mapping) == mapping.size(); }

std::optional<std::vector<int>> coordinate_function(const Mapping& mapping, int coord, int attr) {
    const auto& space = *mapping.space;
    std::vector<int> f(space.values_per_attribute, -1);
    for (int obj = 0; obj < mapping.size(); ++obj) {
        const int value = space.digits(obj)[attr];
        const int digit = space.digits(mapping.table[obj])[coord];
        if (f[value] == -1)
            f[value] = digit;
        else if (f[value] != digit)
            return std::nullopt;
    }
    return f;
}

MappingClass classify(const Mapping& mapping) {
    MappingClass out;
    out.degenerate_image_size = image_size(mapping);
    if (out.degenerate_image_size == 1) {
        out.kind = MappingKind::FullyDegenerate;
        return out;
    }
    if (out.degenerate_image_size < mapping.size()) {
        out.kind = MappingKind::NonBijection;
        return out;
    }
    const auto& space = *mapping.space;
    const int L = space.num_attributes;
    const int V = space.values_per_attribute;
    std::vector<int> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        CompositionalWitness w{perm, {}};
        bool ok = true;
        for (int i = 0; i < L && ok; ++i) {
            auto f = coordinate_function(mapping, i, perm[i]);
            if (!f) {
                ok = false;
                break;
            }
            auto sorted = *f;
            std::sort(sorted.begin(), sorted.end());
            for (int v = 0; v < V; ++v) ok = ok && sorted[v] == v;
            w.value_codes.push_back(std::move(*f));
        }
        if (ok) {
            out.kind = MappingKind::CompositionalBijection;
            out.witness = std::move(w);
            return out;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.kind = MappingKind::HolisticBijection;
    return out;
}

std::vector<int> apply_witness(const AttributeSpace& space, const CompositionalWitness& witness) {
    const int n = space.object_count();
    std::vector<int> table(n);
    std::vector<int> code(space.num_attributes);
    for (int obj = 0; obj < n; ++obj) {
        const auto g = space.digits(obj);
        for (int i = 0; i < space.num_attributes; ++i)
            code[i] = witness.value_codes[i][g[witness.attribute_assignment[i]]];
        table[obj] = space.index_of(code);
    }
    return table;
}

PermutationEncoding permutation_encoding(const Mapping& mapping) {
    if (!is_bijection(mapping)) throw NotABijection("permutation encoding requires a bijection");
    PermutationEncoding e;
    e.sequence.reserve(mapping.table.size());
    for (int z : mapping.table) e.sequence.push_back(z + 1);
    return e;
}

Mapping decode_permutation(SpacePtr space, const PermutationEncoding& encoding) {
    const int n = space->object_count();
    if (static_cast<int>(encoding.sequence.size()) != n) throw NotABijection("sequence length must equal V^L");
    std::vector<char> seen(n, 0);
    std::vector<int> table;
    table.reserve(n);
    for (int s : encoding.sequence) {
        if (s < 1 || s > n || seen[s - 1]) throw NotABijection("sequence is not a permutation of 1..V^L");
        seen[s - 1] = 1;
        table.push_back(s - 1);
    }
    return Mapping{std::move(table), std::move(space)};
}

double k_bound_bijection(int L, int V) {
    return std::pow(static_cast<double>(V), L) * L * std::log2(static_cast<double>(V));
}

double k_bound_comp(int L, int V) {
    return V * std::log2(static_cast<double>(V)) + L * std::log2(static_cast<double>(L));
}

GammaRatio gamma_ratio(int L, int V) {
    GammaRatio r;
    r.gamma = k_bound_bijection(L, V) / k_bound_comp(L, V);
    if (L <= V)
        r.lower_bound = std::pow(static_cast<double>(V), L - 1) * L / 2.0;
    else
        r.lower_bound = std::pow(static_cast<double>(V), L) * std::log2(static_cast<double>(V)) /
                        (2.0 * std::log2(static_cast<double>(L)));
    r.bound_holds = r.gamma >= r.lower_bound;
    return r;
}

double partial_comp_bound(int L, int V, int k) {
    if (k < 0 || k > L) throw InvalidK("k_shared must lie in [0, L]");
    const double log_v = std::log2(static_cast<double>(V));
    const double factored = k == 0 ? 0.0 : V * log_v + k * std::log2(static_cast<double>(k));
    const double tabulated = std::pow(static_cast<double>(V), L) * (L - k) * log_v;
    return factored + tabulated;
}

}  // namespace compbias

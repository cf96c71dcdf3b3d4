#include "compbias/grammar.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <queue>

#include "compbias/errors.hpp"

namespace compbias {

namespace {

// Colexicographic key: attribute 0 varies fastest, which orders the
// alternatives of the all-to-one rule as bx, rx, bc, rc.
int colex_key(const AttributeSpace& space, int object) {
    const auto d = space.digits(object);
    int key = 0;
    for (int a = space.num_attributes - 1; a >= 0; --a) key = key * space.values_per_attribute + d[a];
    return key;
}

// factored_attr[i] = attribute read by coordinate i, or -1 when coordinate i
// is written out by the enumerative rules.
Grammar grammar_for(const Mapping& mapping, const std::vector<int>& factored_attr) {
    const auto& space = *mapping.space;
    const int L = space.num_attributes;
    Grammar g;

    for (int i = 0; i < L; ++i) {
        const int attr = factored_attr[i];
        if (attr < 0) continue;
        const auto f = *coordinate_function(mapping, i, attr);
        std::map<int, GrammarRule> by_digit;
        std::vector<int> digit_order;
        for (int v = 0; v < space.values_per_attribute; ++v) {
            auto [it, inserted] = by_digit.try_emplace(f[v]);
            if (inserted) {
                digit_order.push_back(f[v]);
                it->second.message = std::string(1, static_cast<char>('0' + f[v]));
                it->second.factored = true;
                it->second.coordinate = i;
            }
            it->second.alternatives.emplace_back(1, space.value_symbols[attr][v]);
        }
        for (int d : digit_order) g.rules.push_back(std::move(by_digit[d]));
    }

    const bool any_enumerated = std::any_of(factored_attr.begin(), factored_attr.end(), [](int a) { return a < 0; });
    if (!any_enumerated) return g;

    struct Group {
        int first_object;
        std::vector<int> objects;
    };
    std::map<std::string, Group> groups;
    for (int obj = 0; obj < mapping.size(); ++obj) {
        std::string msg = mapping.code_string(obj);
        for (int i = 0; i < L; ++i)
            if (factored_attr[i] >= 0) msg[i] = kFactoredSlot;
        auto [it, inserted] = groups.try_emplace(msg, Group{obj, {}});
        it->second.objects.push_back(obj);
    }
    std::vector<std::pair<const std::string*, Group*>> ordered;
    for (auto& [msg, group] : groups) ordered.emplace_back(&msg, &group);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.second->first_object < b.second->first_object; });
    for (auto& [msg, group] : ordered) {
        std::sort(group->objects.begin(), group->objects.end(),
                  [&](int a, int b) { return colex_key(space, a) < colex_key(space, b); });
        GrammarRule rule;
        rule.message = *msg;
        for (int obj : group->objects) rule.alternatives.push_back(object_string(space, obj));
        g.rules.push_back(std::move(rule));
    }
    return g;
}

}  // namespace

std::string object_string(const AttributeSpace& space, int object) {
    const auto d = space.digits(object);
    std::string s;
    for (int a = 0; a < space.num_attributes; ++a) s.push_back(space.value_symbols[a][d[a]]);
    return s;
}

Grammar enumerative_grammar(const Mapping& mapping) {
    return grammar_for(mapping, std::vector<int>(mapping.space->num_attributes, -1));
}

Grammar build_grammar(const Mapping& mapping) {
    mapping.validate();
    const int L = mapping.space->num_attributes;

    // options[i]: -1 (enumerate) followed by every attribute that coordinate i
    // depends on exclusively. Constant coordinates depend on no attribute.
    std::vector<std::vector<int>> options(L, std::vector<int>{-1});
    for (int i = 0; i < L; ++i)
        for (int a = 0; a < L; ++a)
            if (auto f = coordinate_function(mapping, i, a);
                f && std::adjacent_find(f->begin(), f->end(), std::not_equal_to<>()) != f->end())
                options[i].push_back(a);
    std::vector<char> attr_used(L, 0);

    Grammar best;
    double best_cl = 0.0;
    bool have_best = false;
    std::vector<int> choice(L, -1);
    std::function<void(int)> search = [&](int i) {
        if (i == L) {
            Grammar g = grammar_for(mapping, choice);
            const double len = coding_length(serialize(g));
            if (!have_best || len < best_cl) {
                best = std::move(g);
                best_cl = len;
                have_best = true;
            }
            return;
        }
        for (int opt : options[i]) {
            if (opt >= 0 && attr_used[opt]) continue;
            if (opt >= 0) attr_used[opt] = 1;
            choice[i] = opt;
            search(i + 1);
            if (opt >= 0) attr_used[opt] = 0;
        }
    };
    search(0);
    return best;
}

CodeSequence serialize(const Grammar& grammar) {
    CodeSequence seq;
    for (std::size_t r = 0; r < grammar.rules.size(); ++r) {
        if (r > 0) seq.symbols.push_back(';');
        const auto& rule = grammar.rules[r];
        seq.symbols.push_back('S');
        for (std::size_t a = 0; a < rule.alternatives.size(); ++a) {
            if (a > 0) seq.symbols.push_back(',');
            seq.symbols += rule.alternatives[a];
        }
        seq.symbols += rule.message;
    }
    return seq;
}

double coding_length(std::string_view symbols) {
    if (symbols.empty()) throw EmptySequence("coding length of an empty sequence");
    std::array<std::size_t, 256> counts{};
    for (unsigned char c : symbols) ++counts[c];
    const double n = static_cast<double>(symbols.size());
    double bits = 0.0;
    for (std::size_t c : counts)
        if (c > 0) bits += static_cast<double>(c) * std::log2(n / static_cast<double>(c));
    return bits;
}

double cl(const Mapping& mapping) { return coding_length(serialize(build_grammar(mapping))); }

std::uint64_t huffman_bits(std::string_view symbols) {
    if (symbols.empty()) throw EmptySequence("huffman length of an empty sequence");
    std::array<std::uint64_t, 256> counts{};
    for (unsigned char c : symbols) ++counts[c];
    std::priority_queue<std::uint64_t, std::vector<std::uint64_t>, std::greater<>> heap;
    for (auto c : counts)
        if (c > 0) heap.push(c);
    if (heap.size() == 1) return symbols.size();
    // Sum of internal node weights equals sum over symbols of count * depth.
    std::uint64_t total = 0;
    while (heap.size() > 1) {
        const auto a = heap.top();
        heap.pop();
        const auto b = heap.top();
        heap.pop();
        total += a + b;
        heap.push(a + b);
    }
    return total;
}

}  // namespace compbias

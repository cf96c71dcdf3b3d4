#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "compbias/mapping.hpp"

namespace compbias {

// Placeholder written in the message of an enumerative rule for a code
// coordinate that is already covered by factored rules.
inline constexpr char kFactoredSlot = '*';

struct GrammarRule {
    // Object strings (one symbol per attribute) for enumerative rules, single
    // value symbols for factored rules.
    std::vector<std::string> alternatives;
    std::string message;
    bool factored = false;
    int coordinate = -1;  // factored rules only
};

struct Grammar {
    std::vector<GrammarRule> rules;
};

struct CodeSequence {
    std::string symbols;
    std::size_t size() const { return symbols.size(); }
};

// Object string of `object`, e.g. "bx" for blue box.
std::string object_string(const AttributeSpace& space, int object);

// Groups objects by identical message; one rule per group.
Grammar enumerative_grammar(const Mapping& mapping);

// Minimum coding length grammar among the enumerative grammar and every
// combination of per-coordinate factored sub-grammars. A coordinate can be
// factored when it depends on exactly one attribute, and no two factored
// coordinates read the same attribute. Ties keep the earlier candidate, with
// the enumerative grammar first.
Grammar build_grammar(const Mapping& mapping);

CodeSequence serialize(const Grammar& grammar);

// Empirical-entropy length: -sum_i log2(Cnt(s_i) / |seq|).
double coding_length(std::string_view symbols);
inline double coding_length(const CodeSequence& seq) { return coding_length(seq.symbols); }

double cl(const Mapping& mapping);

// Total bits of an actual Huffman code built from the sequence's own
// character histogram. A one-symbol alphabet costs one bit per character.
std::uint64_t huffman_bits(std::string_view symbols);
inline std::uint64_t huffman_bits(const CodeSequence& seq) { return huffman_bits(seq.symbols); }

}  // namespace compbias

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parsefuse/errors.hpp"

namespace parsefuse {

struct Token {
    int index = 0;        // 1-based position within the sentence
    std::string surface;  // text form
    int head = 0;         // 0 = root
    std::string deprel;   // carried through, unused by the model
};

/// One parser's directed head->dependent tree over a token sequence.
struct DependencyTree {
    std::vector<Token> tokens;
    std::string parser_id;

    int size() const { return static_cast<int>(tokens.size()); }
};

/// Checks contiguous 1-based indices, a single root, no self-heads, and
/// acyclicity. Throws NonTree / DuplicateIndex.
void validate_tree(const DependencyTree& tree);

/// Parses a CoNLL-U document into (sentence_id, tree) pairs. Multi-word token
/// ranges ("a-b") and empty nodes ("a.b") are skipped; `# sent_id = ...`
/// comments supply the sentence id (falling back to the 1-based block ordinal).
std::vector<std::pair<std::string, DependencyTree>> parse_conllu(std::string_view text,
                                                                 std::string parser_id);

std::string to_conllu(const DependencyTree& tree, const std::string& sentence_id);

/// Unicode NFC normalization (parsers disagree on composed forms more often
/// than on tokens).
std::string nfc_normalize(std::string_view s);

/// Succeeds iff all trees agree in length and NFC-normalized surface forms.
/// Throws TokenizationMismatch naming the first divergent (tree, position).
void align_tokenizations(const std::vector<const DependencyTree*>& trees);
void align_tokenizations(const std::vector<DependencyTree>& trees);

}  // namespace parsefuse

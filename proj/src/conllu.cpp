#include "parsefuse/conllu.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <charconv>
#include <sstream>

namespace parsefuse {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    size_t start = 0;
    while (true) {
        const size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

bool parse_int(std::string_view s, int& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

void validate_tree(const DependencyTree& tree) {
    const int n = tree.size();
    if (n == 0) throw NonTree(tree.parser_id + ": empty sentence");
    int root = -1;
    for (int i = 0; i < n; ++i) {
        const Token& t = tree.tokens[i];
        if (t.index != i + 1)
            throw NonTree(tree.parser_id + ": token indices not contiguous at position " +
                          std::to_string(i + 1));
        if (t.head < 0 || t.head > n)
            throw NonTree(tree.parser_id + ": head " + std::to_string(t.head) + " out of range");
        if (t.head == t.index)
            throw NonTree(tree.parser_id + ": token " + std::to_string(t.index) + " is its own head");
        if (t.head == 0) {
            if (root != -1)
                throw NonTree(tree.parser_id + ": multiple roots (" + std::to_string(root + 1) +
                              " and " + std::to_string(t.index) + ")");
            root = i;
        }
    }
    if (root == -1) throw NonTree(tree.parser_id + ": no root");
    // Every token must reach the root; a walk longer than n tokens means a cycle.
    for (int i = 0; i < n; ++i) {
        int cur = i + 1;
        int steps = 0;
        while (cur != 0) {
            cur = tree.tokens[cur - 1].head;
            if (++steps > n)
                throw NonTree(tree.parser_id + ": cycle involving token " + std::to_string(i + 1));
        }
    }
}

std::vector<std::pair<std::string, DependencyTree>> parse_conllu(std::string_view text,
                                                                 std::string parser_id) {
    std::vector<std::pair<std::string, DependencyTree>> result;
    DependencyTree current;
    current.parser_id = parser_id;
    std::string sent_id;
    int block_ordinal = 0;

    auto flush = [&]() {
        if (current.tokens.empty()) {
            sent_id.clear();
            return;
        }
        ++block_ordinal;
        validate_tree(current);
        std::string id = sent_id.empty() ? "s" + std::to_string(block_ordinal) : sent_id;
        result.emplace_back(std::move(id), std::move(current));
        current = DependencyTree{};
        current.parser_id = parser_id;
        sent_id.clear();
    };

    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const size_t eol = text.find('\n', pos);
        std::string_view line =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (line.empty()) {
            flush();
            continue;
        }
        if (line.front() == '#') {
            std::string_view body = trim(line.substr(1));
            constexpr std::string_view kSentId = "sent_id";
            if (body.substr(0, kSentId.size()) == kSentId) {
                std::string_view rest = trim(body.substr(kSentId.size()));
                if (!rest.empty() && rest.front() == '=') sent_id = std::string(trim(rest.substr(1)));
            }
            continue;
        }

        const auto cols = split_tabs(line);
        if (cols.size() != 10)
            throw MalformedLine("line " + std::to_string(line_no) + ": expected 10 columns, got " +
                                std::to_string(cols.size()));

        // Multi-word token ranges ("a-b") and empty nodes ("a.b") carry no tree edge.
        if (cols[0].find('-') != std::string_view::npos ||
            cols[0].find('.') != std::string_view::npos)
            continue;

        Token tok;
        if (!parse_int(cols[0], tok.index) || tok.index < 1)
            throw MalformedLine("line " + std::to_string(line_no) + ": bad token id '" +
                                std::string(cols[0]) + "'");
        if (!parse_int(cols[6], tok.head) || tok.head < 0)
            throw MalformedLine("line " + std::to_string(line_no) + ": bad head '" +
                                std::string(cols[6]) + "'");
        tok.surface = std::string(cols[1]);
        tok.deprel = std::string(cols[7]);

        for (const Token& existing : current.tokens)
            if (existing.index == tok.index)
                throw DuplicateIndex(parser_id + ": token id " + std::to_string(tok.index) +
                                     " repeated (line " + std::to_string(line_no) + ")");
        current.tokens.push_back(std::move(tok));
    }
    flush();
    return result;
}

std::string to_conllu(const DependencyTree& tree, const std::string& sentence_id) {
    std::ostringstream out;
    out << "# sent_id = " << sentence_id << "\n";
    for (const Token& t : tree.tokens) {
        out << t.index << '\t' << t.surface << "\t_\t_\t_\t_\t" << t.head << '\t'
            << (t.deprel.empty() ? "_" : t.deprel) << "\t_\t_\n";
    }
    out << "\n";
    return out.str();
}

std::string nfc_normalize(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error("ICU NFC instance unavailable");
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString normalized = nfc->normalize(u, status);
    if (U_FAILURE(status)) throw Error("ICU NFC normalization failed");
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

void align_tokenizations(const std::vector<const DependencyTree*>& trees) {
    if (trees.empty()) throw Error("align_tokenizations: no trees");
    const DependencyTree& ref = *trees[0];
    std::vector<std::string> ref_norm;
    ref_norm.reserve(ref.tokens.size());
    for (const Token& t : ref.tokens) ref_norm.push_back(nfc_normalize(t.surface));

    for (size_t m = 1; m < trees.size(); ++m) {
        const DependencyTree& other = *trees[m];
        if (other.size() != ref.size())
            throw TokenizationMismatch("tree '" + other.parser_id + "' has " +
                                       std::to_string(other.size()) + " tokens, '" + ref.parser_id +
                                       "' has " + std::to_string(ref.size()));
        for (int i = 0; i < other.size(); ++i) {
            if (nfc_normalize(other.tokens[i].surface) != ref_norm[i])
                throw TokenizationMismatch("tree '" + other.parser_id + "' position " +
                                           std::to_string(i + 1) + ": '" +
                                           other.tokens[i].surface + "' vs '" +
                                           ref.tokens[i].surface + "'");
        }
    }
}

void align_tokenizations(const std::vector<DependencyTree>& trees) {
    std::vector<const DependencyTree*> ptrs;
    ptrs.reserve(trees.size());
    for (const auto& t : trees) ptrs.push_back(&t);
    align_tokenizations(ptrs);
}

}  // namespace parsefuse

#include <doctest.h>

#include <set>

#include "parsefuse/conllu.hpp"
#include "parsefuse/rng.hpp"

using namespace parsefuse;

namespace {

std::string block(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    out += "\n";
    return out;
}

std::string row(int id, const std::string& form, int head, const std::string& deprel = "dep") {
    return std::to_string(id) + "\t" + form + "\t_\t_\t_\t_\t" + std::to_string(head) + "\t" +
           deprel + "\t_\t_";
}

std::set<std::pair<int, int>> edge_set(const DependencyTree& t) {
    std::set<std::pair<int, int>> edges;
    for (const Token& tok : t.tokens)
        if (tok.head != 0) edges.insert({tok.head, tok.index});
    return edges;
}

DependencyTree random_tree(int n, Rng& rng, const std::string& parser_id) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i + 1;
    rng.shuffle(order);
    std::vector<int> head(n + 1, 0);
    for (int k = 1; k < n; ++k) head[order[k]] = order[rng.uniform_int(k)];
    DependencyTree t;
    t.parser_id = parser_id;
    for (int i = 1; i <= n; ++i)
        t.tokens.push_back({i, "w" + std::to_string(i), head[i], head[i] == 0 ? "root" : "dep"});
    return t;
}

}  // namespace

TEST_CASE("two-line block parses to the expected edge and root") {
    auto parsed = parse_conllu(block({row(1, "The", 2, "det"), row(2, "food", 0, "root")}), "p");
    REQUIRE(parsed.size() == 1);
    const DependencyTree& t = parsed[0].second;
    CHECK(edge_set(t) == std::set<std::pair<int, int>>{{2, 1}});
    CHECK(t.tokens[1].head == 0);
    CHECK(t.tokens[0].deprel == "det");
}

TEST_CASE("self-headed token is rejected") {
    CHECK_THROWS_AS(parse_conllu(block({row(1, "x", 1)}), "p"), NonTree);
}

TEST_CASE("three-token chain transcribes directly") {
    auto parsed =
        parse_conllu(block({row(1, "a", 2), row(2, "b", 3), row(3, "c", 0, "root")}), "p");
    REQUIRE(parsed.size() == 1);
    CHECK(edge_set(parsed[0].second) == std::set<std::pair<int, int>>{{3, 2}, {2, 1}});
}

TEST_CASE("malformed and invalid inputs raise the matching errors") {
    SUBCASE("wrong column count") {
        CHECK_THROWS_AS(parse_conllu("1\tThe\t2\n\n", "p"), MalformedLine);
    }
    SUBCASE("duplicate token index") {
        CHECK_THROWS_AS(parse_conllu(block({row(1, "a", 2), row(1, "b", 0)}), "p"), DuplicateIndex);
    }
    SUBCASE("cycle") {
        CHECK_THROWS_AS(
            parse_conllu(block({row(1, "a", 2), row(2, "b", 1), row(3, "c", 0)}), "p"), NonTree);
    }
    SUBCASE("multiple roots") {
        CHECK_THROWS_AS(parse_conllu(block({row(1, "a", 0), row(2, "b", 0)}), "p"), NonTree);
    }
    SUBCASE("no root") {
        CHECK_THROWS_AS(parse_conllu(block({row(1, "a", 2), row(2, "b", 1)}), "p"), NonTree);
    }
    SUBCASE("non-contiguous indices") {
        CHECK_THROWS_AS(parse_conllu(block({row(1, "a", 3), row(3, "b", 0)}), "p"), NonTree);
    }
    SUBCASE("head out of range") {
        CHECK_THROWS_AS(parse_conllu(block({row(1, "a", 5), row(2, "b", 0)}), "p"), NonTree);
    }
}

TEST_CASE("multiword ranges and comments are skipped, sent_id is honored") {
    const std::string doc = "# sent_id = restaurant-42\n# text = don't care\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n" +
                            row(1, "do", 2, "aux") + "\n" + row(2, "n't", 0, "root") + "\n\n" +
                            block({row(1, "solo", 0, "root")});
    auto parsed = parse_conllu(doc, "p");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].first == "restaurant-42");
    CHECK(parsed[0].second.size() == 2);
    CHECK(parsed[1].first == "s2");  // ordinal fallback
}

TEST_CASE("tokenization alignment") {
    auto t1 = parse_conllu(block({row(1, "the", 2), row(2, "food", 0)}), "a")[0].second;
    auto t2 = parse_conllu(block({row(1, "the", 2, "det"), row(2, "food", 0, "root")}), "b")[0].second;
    auto pair = [](const DependencyTree& x, const DependencyTree& y) {
        return std::vector<const DependencyTree*>{&x, &y};
    };
    SUBCASE("equal surfaces align") { CHECK_NOTHROW(align_tokenizations(pair(t1, t2))); }
    SUBCASE("different lengths mismatch") {
        auto t3 = parse_conllu(block({row(1, "the", 0)}), "c")[0].second;
        CHECK_THROWS_AS(align_tokenizations(pair(t1, t3)), TokenizationMismatch);
    }
    SUBCASE("dont vs do+nt mismatch") {
        auto a = parse_conllu(block({row(1, "don't", 0)}), "a")[0].second;
        auto b = parse_conllu(block({row(1, "do", 2), row(2, "n't", 0)}), "b")[0].second;
        CHECK_THROWS_AS(align_tokenizations(pair(a, b)), TokenizationMismatch);
    }
    SUBCASE("NFC: composed and decomposed e-acute align") {
        // "café" with U+00E9 vs with "e" + U+0301
        auto a = parse_conllu(block({row(1, "caf\xc3\xa9", 0)}), "a")[0].second;
        auto b = parse_conllu(block({row(1, "cafe\xcc\x81", 0)}), "b")[0].second;
        CHECK_NOTHROW(align_tokenizations(pair(a, b)));
    }
}

TEST_CASE("parsed trees satisfy the tree invariants") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + rng.uniform_int(12);
        DependencyTree t = random_tree(n, rng, "r");
        CHECK_NOTHROW(validate_tree(t));
        int roots = 0, edges = 0;
        for (const Token& tok : t.tokens) (tok.head == 0 ? roots : edges)++;
        CHECK(roots == 1);
        CHECK(edges == n - 1);
    }
}

TEST_CASE("conllu round-trip preserves the edge set") {
    Rng rng(202);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + rng.uniform_int(10);
        DependencyTree t = random_tree(n, rng, "rt");
        auto parsed = parse_conllu(to_conllu(t, "roundtrip"), "rt");
        REQUIRE(parsed.size() == 1);
        CHECK(parsed[0].first == "roundtrip");
        CHECK(edge_set(parsed[0].second) == edge_set(t));
        for (int i = 0; i < n; ++i)
            CHECK(parsed[0].second.tokens[i].surface == t.tokens[i].surface);
    }
}

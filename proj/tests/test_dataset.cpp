#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "parsefuse/dataset.hpp"

using namespace parsefuse;

namespace {

DatasetLoad load_lines(const std::string& text) {
    std::istringstream in(text);
    return load_dataset_stream(in, "<test>");
}

std::map<std::string, SubwordRecord> load_feature_lines(const std::string& text) {
    std::istringstream in(text);
    return load_features_stream(in, "<test>");
}

const char* kGoodLine =
    R"({"sentence_id":"s1","tokens":["the","food","rocks"],"aspect":{"start":2,"length":1},"label":"positive"})";

}  // namespace

TEST_CASE("dataset loading validates and counts per class") {
    const std::string text = std::string(kGoodLine) + "\n" +
        R"({"sentence_id":"s2","tokens":["meh"],"aspect":{"start":1,"length":1},"label":"neutral"})" + "\n" +
        R"({"sentence_id":"s3","tokens":["bad","service"],"aspect":{"start":2,"length":1},"label":"negative"})" + "\n" +
        R"({"sentence_id":"s4","tokens":["fine","drinks"],"aspect":{"start":1,"length":2},"label":"positive"})" + "\n";
    DatasetLoad load = load_lines(text);
    CHECK(load.instances.size() == 4);
    CHECK(load.class_counts[0] == 2);
    CHECK(load.class_counts[1] == 1);
    CHECK(load.class_counts[2] == 1);
    CHECK(load.instances[0].aspect.start == 2);
    CHECK(load.instances[0].label == Label::Positive);
}

TEST_CASE("conflict labels are rejected") {
    const std::string text =
        R"({"sentence_id":"s1","tokens":["x"],"aspect":{"start":1,"length":1},"label":"conflict"})";
    CHECK_THROWS_AS(load_lines(text), UnknownLabel);
}

TEST_CASE("span past the sentence end is rejected") {
    const std::string text =
        R"({"sentence_id":"s1","tokens":["a","b","c"],"aspect":{"start":3,"length":2},"label":"positive"})";
    CHECK_THROWS_AS(load_lines(text), SpanOutOfRange);
}

TEST_CASE("missing fields are named") {
    CHECK_THROWS_AS(load_lines(R"({"sentence_id":"s1","tokens":["a"],"label":"positive"})"),
                    MissingField);
    CHECK_THROWS_AS(
        load_lines(R"({"tokens":["a"],"aspect":{"start":1,"length":1},"label":"positive"})"),
        MissingField);
}

TEST_CASE("laptop train split class counts, when the file is supplied") {
    const char* path = std::getenv("PARSEFUSE_LAPTOP_TRAIN");
    if (path == nullptr) return;  // external corpus; exercised only when provided
    DatasetLoad load = load_dataset(path);
    CHECK(load.class_counts[0] == 987);
    CHECK(load.class_counts[1] == 460);
    CHECK(load.class_counts[2] == 866);
}

TEST_CASE("feature records validate alignment and width") {
    SUBCASE("valid two-word record") {
        auto recs = load_feature_lines(
            R"({"sentence_id":"s1","d_in":2,"subword_vectors":[[1,2],[3,4],[5,6]],"word_index":[1,2,2]})");
        REQUIRE(recs.count("s1") == 1);
        CHECK(recs["s1"].word_count() == 2);
    }
    SUBCASE("word with zero subwords") {
        CHECK_THROWS_AS(load_feature_lines(
                            R"({"sentence_id":"s1","d_in":1,"subword_vectors":[[1],[2]],"word_index":[1,3]})"),
                        NonCoveringAlignment);
    }
    SUBCASE("width mismatch inside one record") {
        CHECK_THROWS_AS(load_feature_lines(
                            R"({"sentence_id":"s1","d_in":4,"subword_vectors":[[1,2,3,4],[1,2,3,4,5]],"word_index":[1,2]})"),
                        WidthMismatch);
    }
    SUBCASE("decreasing word index") {
        CHECK_THROWS_AS(load_feature_lines(
                            R"({"sentence_id":"s1","d_in":1,"subword_vectors":[[1],[2]],"word_index":[2,1]})"),
                        NonMonotoneAlignment);
    }
}

TEST_CASE("average_subwords computes per-word means") {
    SUBCASE("stated example") {
        SubwordRecord rec;
        rec.sentence_id = "s";
        rec.d_in = 2;
        rec.subword_vectors = {{2, 0}, {4, 0}, {0, 6}};
        rec.word_index = {1, 1, 2};
        FeatureMatrix fm = average_subwords(rec);
        REQUIRE(fm.word_count() == 2);
        CHECK(fm.rows[0] == std::vector<double>{3, 0});
        CHECK(fm.rows[1] == std::vector<double>{0, 6});
    }
    SUBCASE("identity alignment is the identity") {
        SubwordRecord rec;
        rec.d_in = 3;
        rec.subword_vectors = {{1, 2, 3}, {4, 5, 6}};
        rec.word_index = {1, 2};
        FeatureMatrix fm = average_subwords(rec);
        CHECK(fm.rows == rec.subword_vectors);
        // idempotence: averaging the already-collapsed rows changes nothing
        SubwordRecord again;
        again.d_in = 3;
        again.subword_vectors = fm.rows;
        again.word_index = {1, 2};
        CHECK(average_subwords(again).rows == fm.rows);
    }
    SUBCASE("four subwords onto one word") {
        SubwordRecord rec;
        rec.d_in = 1;
        rec.subword_vectors = {{1}, {2}, {3}, {4}};
        rec.word_index = {1, 1, 1, 1};
        FeatureMatrix fm = average_subwords(rec);
        REQUIRE(fm.word_count() == 1);
        CHECK(fm.rows[0][0] == doctest::Approx(2.5).epsilon(1e-15));
    }
    SUBCASE("means stay inside the min/max envelope") {
        SubwordRecord rec;
        rec.d_in = 2;
        rec.subword_vectors = {{-1, 5}, {3, 1}, {0, 0}, {2, 2}};
        rec.word_index = {1, 1, 2, 2};
        FeatureMatrix fm = average_subwords(rec);
        for (int w = 0; w < 2; ++w)
            for (int j = 0; j < 2; ++j) {
                double lo = 1e9, hi = -1e9;
                for (size_t s = 0; s < rec.word_index.size(); ++s)
                    if (rec.word_index[s] == w + 1) {
                        lo = std::min(lo, rec.subword_vectors[s][j]);
                        hi = std::max(hi, rec.subword_vectors[s][j]);
                    }
                CHECK(fm.rows[w][j] >= lo);
                CHECK(fm.rows[w][j] <= hi);
            }
    }
}

#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parsefuse/conllu.hpp"
#include "parsefuse/errors.hpp"

namespace parsefuse {

struct AspectSpan {
    int start = 1;  // 1-based index of the first aspect token
    int length = 1;
};

enum class Label : int { Positive = 0, Neutral = 1, Negative = 2 };
constexpr int kNumClasses = 3;

Label parse_label(const std::string& s);  // UnknownLabel
const char* label_name(Label l);
const char* label_name(int class_index);

/// Per-word input features after subword collapse.
struct FeatureMatrix {
    int d_in = 0;
    std::vector<std::vector<double>> rows;
    std::string provenance;

    int word_count() const { return static_cast<int>(rows.size()); }
};

struct LabeledInstance {
    std::string sentence_id;
    std::vector<std::string> tokens;
    AspectSpan aspect;
    Label label = Label::Neutral;
    std::vector<DependencyTree> trees;      // filled when joined with parses
    std::optional<FeatureMatrix> features;  // filled when joined with features
};

struct DatasetLoad {
    std::vector<LabeledInstance> instances;
    std::array<int, kNumClasses> class_counts{};
};

/// Reads the dataset JSON-lines format: one object per line with sentence_id,
/// tokens, aspect {start, length} and label. Validates spans and labels.
DatasetLoad load_dataset(const std::string& path);
DatasetLoad load_dataset_stream(std::istream& in, const std::string& origin);

/// One record of the feature JSON-lines format (pre subword collapse).
struct SubwordRecord {
    std::string sentence_id;
    int d_in = 0;
    std::vector<std::vector<double>> subword_vectors;
    std::vector<int> word_index;  // 1-based word per subword, non-decreasing, covering 1..n
    std::string provenance;

    int word_count() const { return word_index.empty() ? 0 : word_index.back(); }
};

std::map<std::string, SubwordRecord> load_features(const std::string& path);
std::map<std::string, SubwordRecord> load_features_stream(std::istream& in,
                                                          const std::string& origin);

/// Row i is the arithmetic mean of the subword rows assigned to word i.
FeatureMatrix average_subwords(const SubwordRecord& record);

/// One parser's CoNLL-U file, indexed by sentence id.
struct ParseFile {
    std::string parser_id;
    std::map<std::string, DependencyTree> by_sentence;
};

ParseFile load_parse_file(const std::string& parser_id, const std::string& path);

/// Attaches one tree per parser and the collapsed features to each instance.
/// Verifies cross-parser tokenization alignment, agreement with the dataset's
/// own tokens, and feature row counts. Hard-fails on any mismatch.
std::vector<LabeledInstance> join_instances(std::vector<LabeledInstance> instances,
                                            const std::vector<ParseFile>& parses,
                                            const std::map<std::string, SubwordRecord>& features);

}  // namespace parsefuse

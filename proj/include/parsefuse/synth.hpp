#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "parsefuse/conllu.hpp"
#include "parsefuse/dataset.hpp"

namespace parsefuse {

/// Desk-scale benchmark where the sentiment label is decodable only through
/// the tree: the aspect token's polarity is carried by a designated opinion
/// token attached as the aspect's child in the gold tree, while distractor
/// opinion tokens sit elsewhere (sometimes as the aspect's head, so edge
/// direction matters). Features are one-hot token identities plus noise.
struct SynthSpec {
    uint64_t seed = 1;
    int n_sentences = 200;  // training sentences; the test set adds test_fraction more
    int sentence_len = 10;
    int num_parsers = 3;
    double corruption_rate = 0.3;
    double test_fraction = 0.25;
    double head_distractor_prob = 0.5;
    int far_distractors = 2;
    double feature_noise = 0.1;

    void validate() const;
};

struct SynthSentence {
    std::string id;
    std::vector<std::string> tokens;
    DependencyTree gold;                  // parser_id "gold"
    std::vector<DependencyTree> parses;   // parser_1 .. parser_M, corrupted
    AspectSpan aspect;                    // single-token span
    Label label = Label::Neutral;
    int opinion_index = 0;                // 1-based designated opinion token
    std::vector<std::vector<double>> features;  // n × d_in
};

struct SynthData {
    SynthSpec spec;
    int d_in = 0;
    std::vector<SynthSentence> train;
    std::vector<SynthSentence> test;
};

SynthData generate_synth(const SynthSpec& spec);

/// Converts generated sentences into joined LabeledInstances (corrupted parses
/// attached, gold tree excluded, features filled).
std::vector<LabeledInstance> to_labeled_instances(const std::vector<SynthSentence>& sentences);

std::vector<std::string> synth_parser_ids(int num_parsers);

/// Writes <dir>/{train,test}/{dataset.jsonl, features.jsonl, gold.conllu,
/// parser_K.conllu}.
void write_synth(const SynthData& data, const std::filesystem::path& dir);

}  // namespace parsefuse

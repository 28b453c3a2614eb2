#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parsefuse/classifier.hpp"
#include "parsefuse/dataset.hpp"
#include "parsefuse/ensemble_graph.hpp"
#include "parsefuse/rgat.hpp"

namespace parsefuse {

enum class ModelKind { RgatFused, RgatSingle, GatBaseline, FeatureEnsemble };
enum class FusionMode { Union, Intersection, Single };

const char* model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& s, std::string* single_parser);
const char* fusion_mode_name(FusionMode f);
FusionMode parse_fusion_mode(const std::string& s, std::string* single_parser);

struct ModelConfig {
    ModelKind kind = ModelKind::RgatFused;
    FusionMode fusion = FusionMode::Union;
    std::string single_parser;             // parser id for Single fusion
    std::vector<std::string> parser_ids;   // configured parser order
    RGATConfig rgat;
    int classifier_dim = 0;  // d_out; 0 -> rgat.hidden_dim
    bool classifier_bias = true;

    int resolved_classifier_dim() const { return classifier_dim > 0 ? classifier_dim : rgat.hidden_dim; }
    void validate() const;

    /// Canonical key=value text; stable across runs, used for checkpoint hashes.
    std::string canonical_string() const;
    static ModelConfig from_canonical_string(const std::string& text);
};

/// One instance ready for the encoder: joined features and the graph(s) the
/// configured model consumes (one fused/single graph, or M per-parser graphs
/// for feature ensembles).
struct PreparedInstance {
    std::string sentence_id;
    Tensor features;  // n × d_in, constant
    std::vector<GraphTensors> graphs;
    AspectSpan aspect;
    int gold = 0;
    int n = 0;
};

/// Builds model inputs from joined instances. Instances must already carry
/// trees (aligned) and features.
std::vector<PreparedInstance> prepare_instances(const std::vector<LabeledInstance>& instances,
                                                const ModelConfig& cfg);

class SentimentModel {
public:
    SentimentModel(ModelConfig cfg, uint64_t init_seed);

    Tensor logits(const PreparedInstance& inst, bool training, Rng* dropout_rng);
    std::array<double, kNumClasses> predict_probs(const PreparedInstance& inst);
    int predict_class(const PreparedInstance& inst);

    std::vector<Parameter*> parameters();
    const ModelConfig& config() const { return cfg_; }
    uint64_t init_seed() const { return init_seed_; }

    std::map<std::string, std::vector<double>> snapshot_parameters();
    void restore_parameters(const std::map<std::string, std::vector<double>>& snapshot);

    /// Encoder access for analysis/tests. Index 0 for single-graph models.
    RGATParams& encoder(int idx = 0) { return encoders_.at(idx); }
    ClassifierParams& classifier() { return clf_; }
    int encoder_count() const { return static_cast<int>(encoders_.size()); }

private:
    ModelConfig cfg_;
    uint64_t init_seed_;
    std::vector<RGATParams> encoders_;
    ClassifierParams clf_;
};

/// Majority vote over argmax labels; ties broken by highest summed probability
/// among the tied labels, then by class order. `soft` averages probabilities
/// instead.
int label_ensemble_vote(const std::vector<std::array<double, kNumClasses>>& member_probs,
                        bool soft = false);

}  // namespace parsefuse

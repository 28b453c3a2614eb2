#include "parsefuse/model.hpp"

#include <algorithm>
#include <sstream>

namespace parsefuse {

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::RgatFused: return "rgat-fused";
        case ModelKind::RgatSingle: return "rgat-single";
        case ModelKind::GatBaseline: return "gat-baseline";
        case ModelKind::FeatureEnsemble: return "feature-ensemble";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& s, std::string* single_parser) {
    if (s == "rgat-fused") return ModelKind::RgatFused;
    if (s == "gat-baseline") return ModelKind::GatBaseline;
    if (s == "feature-ensemble") return ModelKind::FeatureEnsemble;
    if (s.rfind("rgat-single:", 0) == 0) {
        if (single_parser) *single_parser = s.substr(12);
        return ModelKind::RgatSingle;
    }
    if (s == "rgat-single") return ModelKind::RgatSingle;
    throw InvalidConfig("unknown model '" + s + "'");
}

const char* fusion_mode_name(FusionMode f) {
    switch (f) {
        case FusionMode::Union: return "union";
        case FusionMode::Intersection: return "intersection";
        case FusionMode::Single: return "single";
    }
    return "?";
}

FusionMode parse_fusion_mode(const std::string& s, std::string* single_parser) {
    if (s == "union") return FusionMode::Union;
    if (s == "intersection") return FusionMode::Intersection;
    if (s == "single") return FusionMode::Single;
    if (s.rfind("single:", 0) == 0) {
        if (single_parser) *single_parser = s.substr(7);
        return FusionMode::Single;
    }
    throw InvalidConfig("unknown fusion mode '" + s + "'");
}

void ModelConfig::validate() const {
    rgat.validate();
    if (parser_ids.empty()) throw InvalidConfig("no parsers configured");
    if (classifier_dim < 0) throw InvalidConfig("classifier_dim must be >= 0");
    const bool single = fusion == FusionMode::Single;
    if ((kind == ModelKind::RgatSingle || kind == ModelKind::GatBaseline) && !single)
        throw InvalidConfig(std::string(model_kind_name(kind)) + " requires fusion=single:<parser>");
    if (kind == ModelKind::RgatFused && single)
        throw InvalidConfig("rgat-fused requires fusion=union or intersection");
    if (single) {
        if (single_parser.empty()) throw InvalidConfig("fusion=single needs a parser id");
        if (std::find(parser_ids.begin(), parser_ids.end(), single_parser) == parser_ids.end())
            throw InvalidConfig("fusion parser '" + single_parser + "' is not a configured parser");
    }
    if (kind == ModelKind::GatBaseline && rgat.use_edge_types)
        throw InvalidConfig("gat-baseline must run with use_edge_types=false");
}

std::string ModelConfig::canonical_string() const {
    std::ostringstream out;
    out << "model=" << model_kind_name(kind) << "\n";
    out << "fusion=" << fusion_mode_name(fusion);
    if (fusion == FusionMode::Single) out << ":" << single_parser;
    out << "\n";
    out << "parsers=";
    for (size_t i = 0; i < parser_ids.size(); ++i) out << (i ? "," : "") << parser_ids[i];
    out << "\n";
    out << "num_layers=" << rgat.num_layers << "\n";
    out << "num_heads=" << rgat.num_heads << "\n";
    out << "hidden_dim=" << rgat.hidden_dim << "\n";
    out << "per_head_dim=" << rgat.per_head_dim << "\n";
    out << "input_dim=" << rgat.input_dim << "\n";
    out << "edge_type_dim=" << rgat.edge_type_dim << "\n";
    out << "max_position=" << rgat.max_position << "\n";
    out << "use_edge_types=" << (rgat.use_edge_types ? 1 : 0) << "\n";
    out << "use_positions=" << (rgat.use_positions ? 1 : 0) << "\n";
    out << "leaky_attention=" << (rgat.leaky_attention ? 1 : 0) << "\n";
    out << "leaky_slope=" << rgat.leaky_slope << "\n";
    out << "attention_dropout=" << rgat.attention_dropout << "\n";
    out << "hidden_dropout=" << rgat.hidden_dropout << "\n";
    out << "classifier_dim=" << classifier_dim << "\n";
    out << "classifier_bias=" << (classifier_bias ? 1 : 0) << "\n";
    return out.str();
}

ModelConfig ModelConfig::from_canonical_string(const std::string& text) {
    ModelConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) throw InvalidConfig("bad config line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "model") cfg.kind = parse_model_kind(val, &cfg.single_parser);
        else if (key == "fusion") cfg.fusion = parse_fusion_mode(val, &cfg.single_parser);
        else if (key == "parsers") {
            cfg.parser_ids.clear();
            std::istringstream ps(val);
            std::string id;
            while (std::getline(ps, id, ',')) cfg.parser_ids.push_back(id);
        } else if (key == "num_layers") cfg.rgat.num_layers = std::stoi(val);
        else if (key == "num_heads") cfg.rgat.num_heads = std::stoi(val);
        else if (key == "hidden_dim") cfg.rgat.hidden_dim = std::stoi(val);
        else if (key == "per_head_dim") cfg.rgat.per_head_dim = std::stoi(val);
        else if (key == "input_dim") cfg.rgat.input_dim = std::stoi(val);
        else if (key == "edge_type_dim") cfg.rgat.edge_type_dim = std::stoi(val);
        else if (key == "max_position") cfg.rgat.max_position = std::stoi(val);
        else if (key == "use_edge_types") cfg.rgat.use_edge_types = val == "1";
        else if (key == "use_positions") cfg.rgat.use_positions = val == "1";
        else if (key == "leaky_attention") cfg.rgat.leaky_attention = val == "1";
        else if (key == "leaky_slope") cfg.rgat.leaky_slope = std::stod(val);
        else if (key == "attention_dropout") cfg.rgat.attention_dropout = std::stod(val);
        else if (key == "hidden_dropout") cfg.rgat.hidden_dropout = std::stod(val);
        else if (key == "classifier_dim") cfg.classifier_dim = std::stoi(val);
        else if (key == "classifier_bias") cfg.classifier_bias = val == "1";
        else throw InvalidConfig("unknown config key '" + key + "'");
    }
    return cfg;
}

namespace {

const DependencyTree& tree_for_parser(const LabeledInstance& inst, const std::string& parser_id) {
    for (const DependencyTree& t : inst.trees)
        if (t.parser_id == parser_id) return t;
    throw InvalidConfig("instance " + inst.sentence_id + " has no tree for parser '" + parser_id + "'");
}

Tensor features_tensor(const LabeledInstance& inst) {
    if (!inst.features) throw MissingField("instance " + inst.sentence_id + " has no features");
    const FeatureMatrix& fm = *inst.features;
    const int n = fm.word_count();
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(n) * fm.d_in);
    for (const auto& row : fm.rows) flat.insert(flat.end(), row.begin(), row.end());
    return Tensor::from({n, fm.d_in}, std::move(flat));
}

}  // namespace

std::vector<PreparedInstance> prepare_instances(const std::vector<LabeledInstance>& instances,
                                                const ModelConfig& cfg) {
    cfg.validate();
    std::vector<PreparedInstance> out;
    out.reserve(instances.size());
    for (const LabeledInstance& inst : instances) {
        PreparedInstance p;
        p.sentence_id = inst.sentence_id;
        p.aspect = inst.aspect;
        p.gold = static_cast<int>(inst.label);
        p.n = static_cast<int>(inst.tokens.size());
        p.features = features_tensor(inst);
        if (p.features.rows() != p.n)
            throw DimensionMismatch("instance " + inst.sentence_id + ": " +
                                    std::to_string(p.features.rows()) + " feature rows for " +
                                    std::to_string(p.n) + " tokens");

        if (cfg.kind == ModelKind::FeatureEnsemble) {
            for (const std::string& id : cfg.parser_ids)
                p.graphs.push_back(to_graph_tensors(build_typed_graph(tree_for_parser(inst, id))));
        } else if (cfg.fusion == FusionMode::Single) {
            p.graphs.push_back(to_graph_tensors(build_typed_graph(tree_for_parser(inst, cfg.single_parser))));
        } else {
            std::vector<EnsembleGraph> graphs;
            graphs.reserve(cfg.parser_ids.size());
            for (const std::string& id : cfg.parser_ids)
                graphs.push_back(build_typed_graph(tree_for_parser(inst, id)));
            EnsembleGraph fused = cfg.fusion == FusionMode::Union ? union_graphs(graphs)
                                                                  : intersect_graphs(graphs);
            p.graphs.push_back(to_graph_tensors(fused));
        }
        out.push_back(std::move(p));
    }
    return out;
}

SentimentModel::SentimentModel(ModelConfig cfg, uint64_t init_seed)
    : cfg_(std::move(cfg)), init_seed_(init_seed) {
    cfg_.validate();
    Rng rng = Rng(init_seed).fork("model-init");
    const int encoders = cfg_.kind == ModelKind::FeatureEnsemble
                             ? static_cast<int>(cfg_.parser_ids.size())
                             : 1;
    for (int m = 0; m < encoders; ++m) {
        const std::string prefix = encoders == 1 ? "rgat" : "rgat." + cfg_.parser_ids[m];
        encoders_.push_back(RGATParams::init(cfg_.rgat, rng, prefix));
    }
    clf_ = ClassifierParams::init(encoders * cfg_.rgat.hidden_dim, cfg_.resolved_classifier_dim(),
                                  cfg_.classifier_bias, rng);
}

Tensor SentimentModel::logits(const PreparedInstance& inst, bool training, Rng* dropout_rng) {
    if (inst.graphs.size() != encoders_.size())
        throw DimensionMismatch("instance carries " + std::to_string(inst.graphs.size()) +
                                " graphs, model expects " + std::to_string(encoders_.size()));
    Tensor pooled;
    if (encoders_.size() == 1) {
        Tensor h = encode(inst.features, inst.graphs[0], cfg_.rgat, encoders_[0], training, dropout_rng);
        pooled = pool_aspect(h, inst.aspect);
    } else {
        std::vector<Tensor> pooled_parts;
        pooled_parts.reserve(encoders_.size());
        for (size_t m = 0; m < encoders_.size(); ++m) {
            Tensor h = encode(inst.features, inst.graphs[m], cfg_.rgat, encoders_[m], training, dropout_rng);
            pooled_parts.push_back(pool_aspect(h, inst.aspect));
        }
        pooled = concat(1, pooled_parts);
    }
    return classifier_logits(pooled, clf_);
}

std::array<double, kNumClasses> SentimentModel::predict_probs(const PreparedInstance& inst) {
    // No tape active: values only.
    return softmax_probs(logits(inst, false, nullptr));
}

int SentimentModel::predict_class(const PreparedInstance& inst) {
    const auto probs = predict_probs(inst);
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (probs[c] > probs[best]) best = c;
    return best;
}

std::vector<Parameter*> SentimentModel::parameters() {
    std::vector<Parameter*> out;
    for (RGATParams& enc : encoders_) {
        auto ps = enc.all();
        out.insert(out.end(), ps.begin(), ps.end());
    }
    auto cs = clf_.all();
    out.insert(out.end(), cs.begin(), cs.end());
    return out;
}

std::map<std::string, std::vector<double>> SentimentModel::snapshot_parameters() {
    std::map<std::string, std::vector<double>> snap;
    for (Parameter* p : parameters()) {
        auto [it, inserted] = snap.emplace(p->name, p->tensor.data());
        if (!inserted) throw InvalidConfig("duplicate parameter name '" + p->name + "'");
    }
    return snap;
}

void SentimentModel::restore_parameters(const std::map<std::string, std::vector<double>>& snapshot) {
    for (Parameter* p : parameters()) {
        auto it = snapshot.find(p->name);
        if (it == snapshot.end()) throw CheckpointError("missing parameter '" + p->name + "'");
        if (it->second.size() != p->tensor.data().size())
            throw CheckpointError("size mismatch for parameter '" + p->name + "'");
        p->tensor.data() = it->second;
    }
}

int label_ensemble_vote(const std::vector<std::array<double, kNumClasses>>& member_probs,
                        bool soft) {
    if (member_probs.empty()) throw InvalidConfig("label ensemble needs at least one member");
    if (soft) {
        std::array<double, kNumClasses> mean{};
        for (const auto& p : member_probs)
            for (int c = 0; c < kNumClasses; ++c) mean[c] += p[c];
        int best = 0;
        for (int c = 1; c < kNumClasses; ++c)
            if (mean[c] > mean[best]) best = c;
        return best;
    }
    std::array<int, kNumClasses> votes{};
    std::array<double, kNumClasses> summed{};
    for (const auto& p : member_probs) {
        int arg = 0;
        for (int c = 1; c < kNumClasses; ++c)
            if (p[c] > p[arg]) arg = c;
        ++votes[arg];
        for (int c = 0; c < kNumClasses; ++c) summed[c] += p[c];
    }
    const int top = *std::max_element(votes.begin(), votes.end());
    int best = -1;
    for (int c = 0; c < kNumClasses; ++c) {
        if (votes[c] != top) continue;
        if (best == -1 || summed[c] > summed[best]) best = c;  // class order breaks exact ties
    }
    return best;
}

}  // namespace parsefuse

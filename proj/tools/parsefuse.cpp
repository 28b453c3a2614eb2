#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "parsefuse/checkpoint.hpp"
#include "parsefuse/dataset.hpp"
#include "parsefuse/ensemble_graph.hpp"
#include "parsefuse/synth.hpp"
#include "parsefuse/train.hpp"

namespace pf = parsefuse;
namespace fs = std::filesystem;

namespace {

// PARSEFUSE_LOG = quiet | info | debug
int log_level() {
    static const int level = [] {
        const char* env = std::getenv("PARSEFUSE_LOG");
        if (env == nullptr) return 1;
        const std::string v(env);
        if (v == "quiet") return 0;
        if (v == "debug") return 2;
        return 1;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[parsefuse] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[parsefuse:debug] " << msg << "\n";
}

struct ParseSpec {
    std::string parser_id;
    std::string path;
};

ParseSpec parse_spec(const std::string& arg) {
    const size_t eq = arg.find('=');
    if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
    return {fs::path(arg).stem().string(), arg};
}

std::vector<pf::ParseFile> load_parses(const std::vector<std::string>& parse_args) {
    std::vector<pf::ParseFile> out;
    for (const std::string& arg : parse_args) {
        const ParseSpec spec = parse_spec(arg);
        log_debug("loading parses '" + spec.parser_id + "' from " + spec.path);
        out.push_back(pf::load_parse_file(spec.parser_id, spec.path));
    }
    return out;
}

std::vector<std::string> parser_ids_of(const std::vector<pf::ParseFile>& parses) {
    std::vector<std::string> ids;
    for (const auto& p : parses) ids.push_back(p.parser_id);
    return ids;
}

// Flags shared by the model-building subcommands; mirrors RGATConfig plus the
// classifier and fusion selectors.
struct ModelFlags {
    std::string model = "rgat-fused";
    std::string fusion;
    int layers = 2;
    int heads = 4;
    int hidden_dim = 64;
    int per_head_dim = 16;
    int edge_type_dim = 0;
    int max_position = 128;
    bool no_edge_types = false;
    bool no_positions = false;
    bool leaky_attention = false;
    double dropout = 0.3;
    double attention_dropout = -1.0;  // <0: follow --dropout
    double hidden_dropout = -1.0;
    int classifier_dim = 0;
    bool no_classifier_bias = false;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--model", model,
                       "rgat-fused | rgat-single:<parser> | gat-baseline | label-ensemble | "
                       "feature-ensemble");
        cmd.add_option("--fusion", fusion, "union | intersection | single:<parser>");
        cmd.add_option("--layers", layers, "attention layers");
        cmd.add_option("--heads", heads, "attention heads per layer");
        cmd.add_option("--hidden-dim", hidden_dim, "node state width");
        cmd.add_option("--per-head-dim", per_head_dim, "width each head contributes");
        cmd.add_option("--edge-type-dim", edge_type_dim, "edge embedding width (0 = hidden-dim)");
        cmd.add_option("--max-position", max_position, "position table size");
        cmd.add_flag("--no-edge-types", no_edge_types, "untyped attention over all edges");
        cmd.add_flag("--no-positions", no_positions, "skip position embeddings");
        cmd.add_flag("--leaky-attention", leaky_attention,
                     "slope-0.2 leaky score nonlinearity instead of relu");
        cmd.add_option("--dropout", dropout, "dropout rate for attention and hidden states");
        cmd.add_option("--attention-dropout", attention_dropout, "override attention dropout");
        cmd.add_option("--hidden-dropout", hidden_dropout, "override hidden dropout");
        cmd.add_option("--classifier-dim", classifier_dim, "classifier hidden width (0 = hidden-dim)");
        cmd.add_flag("--no-classifier-bias", no_classifier_bias, "drop classifier bias terms");
    }

    bool is_label_ensemble() const { return model == "label-ensemble"; }

    pf::ModelConfig build(const std::vector<std::string>& parser_ids, int input_dim) const {
        pf::ModelConfig cfg;
        cfg.parser_ids = parser_ids;
        if (!is_label_ensemble()) cfg.kind = pf::parse_model_kind(model, &cfg.single_parser);
        cfg.rgat.num_layers = layers;
        cfg.rgat.num_heads = heads;
        cfg.rgat.hidden_dim = hidden_dim;
        cfg.rgat.per_head_dim = per_head_dim;
        cfg.rgat.input_dim = input_dim;
        cfg.rgat.edge_type_dim = edge_type_dim;
        cfg.rgat.max_position = max_position;
        cfg.rgat.use_edge_types = !no_edge_types;
        cfg.rgat.use_positions = !no_positions;
        cfg.rgat.leaky_attention = leaky_attention;
        cfg.rgat.attention_dropout = attention_dropout >= 0 ? attention_dropout : dropout;
        cfg.rgat.hidden_dropout = hidden_dropout >= 0 ? hidden_dropout : dropout;
        cfg.classifier_dim = classifier_dim;
        cfg.classifier_bias = !no_classifier_bias;

        if (cfg.kind == pf::ModelKind::GatBaseline) cfg.rgat.use_edge_types = false;
        if (!fusion.empty()) cfg.fusion = pf::parse_fusion_mode(fusion, &cfg.single_parser);
        else if (cfg.kind == pf::ModelKind::RgatSingle || cfg.kind == pf::ModelKind::GatBaseline)
            cfg.fusion = pf::FusionMode::Single;
        if ((cfg.kind == pf::ModelKind::RgatSingle || cfg.kind == pf::ModelKind::GatBaseline) &&
            cfg.single_parser.empty() && !parser_ids.empty())
            cfg.single_parser = parser_ids.front();
        cfg.validate();
        return cfg;
    }
};

struct TrainFlags {
    double lr = 1e-5;
    int batch_size = 4;
    int max_epochs = 5;
    double dev_fraction = 0.05;
    double weight_decay = 0.01;
    uint64_t seed = 1;
    bool soft_vote = false;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--lr", lr, "learning rate");
        cmd.add_option("--batch-size", batch_size, "instances per optimizer step");
        cmd.add_option("--max-epochs", max_epochs, "training epochs");
        cmd.add_option("--dev-fraction", dev_fraction, "share of training data held out as dev");
        cmd.add_option("--weight-decay", weight_decay, "decoupled weight decay");
        cmd.add_option("--seed", seed, "master random seed");
        cmd.add_flag("--soft-vote", soft_vote, "label ensemble averages probabilities");
    }

    pf::TrainConfig build() const {
        pf::TrainConfig cfg;
        cfg.lr = lr;
        cfg.batch_size = batch_size;
        cfg.max_epochs = max_epochs;
        cfg.dev_fraction = dev_fraction;
        cfg.weight_decay = weight_decay;
        cfg.seed = seed;
        cfg.validate();
        return cfg;
    }
};

std::vector<pf::LabeledInstance> load_joined(const std::string& dataset_path,
                                             const std::string& features_path,
                                             const std::vector<pf::ParseFile>& parses) {
    pf::DatasetLoad load = pf::load_dataset(dataset_path);
    log_info("dataset " + dataset_path + ": " + std::to_string(load.instances.size()) +
             " instances (positive " + std::to_string(load.class_counts[0]) + ", neutral " +
             std::to_string(load.class_counts[1]) + ", negative " +
             std::to_string(load.class_counts[2]) + ")");
    auto features = pf::load_features(features_path);
    return pf::join_instances(std::move(load.instances), parses, features);
}

int input_dim_of(const std::vector<pf::LabeledInstance>& instances) {
    if (instances.empty()) throw pf::TooSmall("no instances");
    return instances.front().features->d_in;
}

void emit_metrics(const pf::MetricsReport& report, const std::string& metrics_out) {
    std::cout << pf::MetricsReport::tsv_header() << "\n" << report.tsv_row() << "\n";
    if (!metrics_out.empty()) {
        std::ofstream out(metrics_out);
        out << report.to_json() << "\n";
    }
}

uint64_t member_seed(uint64_t base, const std::string& parser_id) {
    return pf::splitmix64(base ^ pf::fnv1a64(parser_id));
}

// ---- subcommand bodies ------------------------------------------------------

int run_fuse(const std::vector<std::string>& parse_args, const std::string& fusion,
             const std::string& out_path) {
    auto parses = load_parses(parse_args);
    if (parses.empty()) throw pf::InvalidConfig("fuse needs at least one --parse");
    std::string single;
    const pf::FusionMode mode = pf::parse_fusion_mode(fusion, &single);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    // map order (sentence id) keeps the dump deterministic
    for (const auto& [sid, first_tree] : parses[0].by_sentence) {
        std::vector<pf::EnsembleGraph> graphs;
        std::vector<const pf::DependencyTree*> trees;
        for (const auto& pfile : parses) {
            auto it = pfile.by_sentence.find(sid);
            if (it == pfile.by_sentence.end())
                throw pf::MissingField("parser '" + pfile.parser_id + "' lacks sentence '" + sid + "'");
            trees.push_back(&it->second);
        }
        pf::align_tokenizations(trees);
        for (const auto* t : trees) graphs.push_back(pf::build_typed_graph(*t));

        pf::EnsembleGraph fused;
        if (mode == pf::FusionMode::Union) fused = pf::union_graphs(graphs);
        else if (mode == pf::FusionMode::Intersection) fused = pf::intersect_graphs(graphs);
        else {
            bool found = false;
            for (size_t m = 0; m < parses.size(); ++m)
                if (parses[m].parser_id == single) {
                    fused = graphs[m];
                    found = true;
                }
            if (!found) throw pf::InvalidConfig("fusion parser '" + single + "' not among --parse ids");
        }

        nlohmann::json j;
        j["sentence_id"] = sid;
        j["n"] = fused.n;
        j["sources"] = fused.sources;
        nlohmann::json edges = nlohmann::json::array();
        for (const pf::TypedEdge& e : fused.edges)
            edges.push_back({e.src, e.dst, pf::edge_type_name(e.etype)});
        j["edges"] = edges;
        (*out) << j.dump() << "\n";
    }
    return 0;
}

int run_graph_stats(const std::vector<std::string>& parse_args, const std::string& out_path) {
    auto parses = load_parses(parse_args);
    if (parses.empty()) throw pf::InvalidConfig("graph-stats needs at least one --parse");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }

    *out << "sentence_id\tn";
    for (const auto& p : parses) *out << "\tedges_" << p.parser_id;
    for (size_t a = 0; a < parses.size(); ++a)
        for (size_t b = a + 1; b < parses.size(); ++b)
            *out << "\toverlap_" << parses[a].parser_id << "_" << parses[b].parser_id;
    for (const auto& p : parses) *out << "\tdiameter_" << p.parser_id;
    *out << "\tedges_union\tdiameter_union\n";

    for (const auto& [sid, first_tree] : parses[0].by_sentence) {
        std::vector<const pf::DependencyTree*> trees;
        for (const auto& pfile : parses) {
            auto it = pfile.by_sentence.find(sid);
            if (it == pfile.by_sentence.end())
                throw pf::MissingField("parser '" + pfile.parser_id + "' lacks sentence '" + sid + "'");
            trees.push_back(&it->second);
        }
        pf::align_tokenizations(trees);
        std::vector<pf::EnsembleGraph> graphs;
        for (const auto* t : trees) graphs.push_back(pf::build_typed_graph(*t));
        pf::EnsembleGraph fused = pf::union_graphs(graphs);

        *out << sid << '\t' << fused.n;
        for (const auto& g : graphs) *out << '\t' << g.edges.size();
        for (size_t a = 0; a < graphs.size(); ++a)
            for (size_t b = a + 1; b < graphs.size(); ++b) {
                // Jaccard over directional typed edges, self-loops excluded
                int inter = 0, uni = 0;
                pf::EnsembleGraph u = pf::union_graphs({graphs[a], graphs[b]});
                for (const pf::TypedEdge& e : u.edges) {
                    if (e.etype == pf::EdgeType::SelfLoop) continue;
                    ++uni;
                    if (graphs[a].contains(e) && graphs[b].contains(e)) ++inter;
                }
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f",
                              uni > 0 ? static_cast<double>(inter) / uni : 1.0);
                *out << '\t' << buf;
            }
        for (const auto& g : graphs) {
            auto d = pf::graph_diameter(g);
            *out << '\t' << (d ? std::to_string(*d) : "inf");
        }
        auto du = pf::graph_diameter(fused);
        *out << '\t' << fused.edges.size() << '\t' << (du ? std::to_string(*du) : "inf") << "\n";
    }
    return 0;
}

void write_history_json(const pf::TrainResult& result, const std::string& path) {
    if (path.empty()) return;
    nlohmann::json j;
    j["best_epoch"] = result.best_epoch;
    j["best_dev_accuracy"] = result.best_dev_accuracy;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& rec : result.history) {
        nlohmann::json e;
        e["epoch"] = rec.epoch;
        e["mean_loss"] = rec.mean_loss;
        e["train"] = nlohmann::json::parse(rec.train.to_json());
        e["dev"] = nlohmann::json::parse(rec.dev.to_json());
        hist.push_back(e);
    }
    j["history"] = hist;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

int run_train(const std::string& dataset, const std::string& features,
              const std::vector<std::string>& parse_args, const ModelFlags& mflags,
              const TrainFlags& tflags, const std::string& out_path,
              const std::string& metrics_out) {
    auto parses = load_parses(parse_args);
    auto instances = load_joined(dataset, features, parses);
    const int d_in = input_dim_of(instances);
    pf::TrainConfig tcfg = tflags.build();

    if (mflags.is_label_ensemble()) {
        // one single-tree model per parser, combined by vote at prediction time
        nlohmann::json manifest;
        manifest["kind"] = "label-ensemble";
        manifest["soft"] = tflags.soft_vote;
        nlohmann::json members = nlohmann::json::array();
        std::cout << pf::MetricsReport::tsv_header() << "\n";
        for (const auto& pfile : parses) {
            ModelFlags member_flags = mflags;
            member_flags.model = "rgat-single:" + pfile.parser_id;
            member_flags.fusion.clear();
            pf::ModelConfig mcfg = member_flags.build(parser_ids_of(parses), d_in);
            pf::TrainConfig member_cfg = tcfg;
            member_cfg.seed = member_seed(tcfg.seed, pfile.parser_id);
            auto prepared = pf::prepare_instances(instances, mcfg);
            pf::SentimentModel model(mcfg, member_cfg.seed);
            pf::TrainResult result = pf::train_model(model, prepared, member_cfg);
            for (const auto& rec : result.history) std::cout << rec.dev.tsv_row() << "\n";
            const std::string member_path = out_path + ".m-" + pfile.parser_id;
            pf::save_checkpoint(member_path, model, member_cfg.seed);
            members.push_back(fs::path(member_path).filename().string());
            log_info("member '" + pfile.parser_id + "' best epoch " +
                     std::to_string(result.best_epoch));
        }
        manifest["members"] = members;
        std::ofstream out(out_path);
        out << manifest.dump(2) << "\n";
        log_info("wrote label-ensemble manifest to " + out_path);
        return 0;
    }

    pf::ModelConfig mcfg = mflags.build(parser_ids_of(parses), d_in);
    auto prepared = pf::prepare_instances(instances, mcfg);
    pf::SentimentModel model(mcfg, tcfg.seed);
    pf::TrainResult result = pf::train_model(model, prepared, tcfg);

    std::cout << pf::MetricsReport::tsv_header() << "\n";
    for (const auto& rec : result.history) {
        std::cout << rec.train.tsv_row() << "\n";
        std::cout << rec.dev.tsv_row() << "\n";
    }
    log_info("best epoch " + std::to_string(result.best_epoch) + " (dev accuracy " +
             std::to_string(result.best_dev_accuracy) + ")");
    write_history_json(result, metrics_out);
    if (!out_path.empty()) {
        pf::save_checkpoint(out_path, model, tcfg.seed);
        log_info("wrote checkpoint to " + out_path);
    }
    return 0;
}

struct LoadedEnsemble {
    bool is_ensemble = false;
    bool soft = false;
    std::vector<pf::SentimentModel> members;
};

LoadedEnsemble load_models(const std::string& checkpoint_path) {
    LoadedEnsemble out;
    std::ifstream probe(checkpoint_path);
    if (!probe) throw pf::CheckpointError("cannot open " + checkpoint_path);
    char first = 0;
    probe.get(first);
    probe.close();
    if (first == '{') {
        std::ifstream in(checkpoint_path);
        nlohmann::json manifest = nlohmann::json::parse(in);
        if (manifest.value("kind", "") != "label-ensemble")
            throw pf::CheckpointError(checkpoint_path + ": unknown manifest kind");
        out.is_ensemble = true;
        out.soft = manifest.value("soft", false);
        const fs::path base = fs::path(checkpoint_path).parent_path();
        for (const auto& member : manifest.at("members"))
            out.members.push_back(pf::model_from_checkpoint(base / member.get<std::string>()));
    } else {
        out.members.push_back(pf::model_from_checkpoint(checkpoint_path));
    }
    return out;
}

std::vector<int> ensemble_predictions(
    LoadedEnsemble& ensemble, const std::vector<pf::LabeledInstance>& instances,
    std::vector<std::vector<std::array<double, 3>>>* member_probs_out) {
    std::vector<std::vector<std::array<double, 3>>> per_member;
    for (auto& model : ensemble.members) {
        auto prepared = pf::prepare_instances(instances, model.config());
        std::vector<std::array<double, 3>> probs;
        probs.reserve(prepared.size());
        for (const auto& inst : prepared) probs.push_back(model.predict_probs(inst));
        per_member.push_back(std::move(probs));
    }
    std::vector<int> voted(instances.size());
    for (size_t i = 0; i < instances.size(); ++i) {
        std::vector<std::array<double, 3>> votes;
        for (const auto& member : per_member) votes.push_back(member[i]);
        voted[i] = pf::label_ensemble_vote(votes, ensemble.soft);
    }
    if (member_probs_out) *member_probs_out = std::move(per_member);
    return voted;
}

int run_eval(const std::string& checkpoint, const std::string& dataset, const std::string& features,
             const std::vector<std::string>& parse_args, const std::string& metrics_out) {
    auto parses = load_parses(parse_args);
    auto instances = load_joined(dataset, features, parses);
    LoadedEnsemble ensemble = load_models(checkpoint);

    std::vector<int> gold;
    for (const auto& inst : instances) gold.push_back(static_cast<int>(inst.label));
    std::vector<int> pred = ensemble_predictions(ensemble, instances, nullptr);
    pf::MetricsReport report = pf::MetricsReport::from_pairs(gold, pred, -1, "eval");
    emit_metrics(report, metrics_out);
    return 0;
}

int run_predict(const std::string& checkpoint, const std::string& dataset,
                const std::string& features, const std::vector<std::string>& parse_args,
                const std::string& out_path) {
    auto parses = load_parses(parse_args);
    auto instances = load_joined(dataset, features, parses);
    LoadedEnsemble ensemble = load_models(checkpoint);

    std::vector<std::vector<std::array<double, 3>>> member_probs;
    std::vector<int> voted = ensemble_predictions(ensemble, instances, &member_probs);

    std::vector<pf::PredictionRow> rows(instances.size());
    for (size_t i = 0; i < instances.size(); ++i) {
        rows[i].sentence_id = instances[i].sentence_id;
        rows[i].aspect = instances[i].aspect;
        std::array<double, 3> mean{};
        for (const auto& member : member_probs)
            for (int c = 0; c < 3; ++c) mean[c] += member[i][c] / member_probs.size();
        rows[i].probs = mean;
        rows[i].label = voted[i];
    }
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    pf::write_predictions(*out, rows);
    return 0;
}

int run_synth_bench(const pf::SynthSpec& spec, const std::string& out_dir) {
    pf::SynthData data = pf::generate_synth(spec);
    pf::write_synth(data, out_dir);
    log_info("wrote " + std::to_string(data.train.size()) + " train / " +
             std::to_string(data.test.size()) + " test sentences to " + out_dir);
    std::cout << "train\t" << data.train.size() << "\ntest\t" << data.test.size() << "\nd_in\t"
              << data.d_in << "\nparsers\t" << spec.num_parsers << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dependency-parse ensembling and relational graph attention for aspect sentiment"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file mirroring the long options");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "emit fused typed graphs as JSON lines");
    std::vector<std::string> fuse_parses;
    std::string fuse_fusion = "union";
    std::string fuse_out;
    fuse->add_option("--parse", fuse_parses, "parser input as id=path.conllu (repeatable)")
        ->required();
    fuse->add_option("--fusion", fuse_fusion, "union | intersection | single:<parser>");
    fuse->add_option("--out", fuse_out, "output path (default stdout)");

    // graph-stats
    auto* stats = app.add_subcommand("graph-stats", "per-sentence edge counts, overlaps, diameters");
    std::vector<std::string> stats_parses;
    std::string stats_out;
    stats->add_option("--parse", stats_parses, "parser input as id=path.conllu (repeatable)")
        ->required();
    stats->add_option("--out", stats_out, "output TSV path (default stdout)");

    // train
    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    std::string train_dataset, train_features, train_out, train_metrics;
    std::vector<std::string> train_parses;
    ModelFlags train_mflags;
    TrainFlags train_tflags;
    train->add_option("--dataset", train_dataset, "dataset JSON-lines")->required();
    train->add_option("--features", train_features, "precomputed token features JSON-lines")
        ->required();
    train->add_option("--parse", train_parses, "parser input as id=path.conllu (repeatable)")
        ->required();
    train->add_option("--out", train_out, "checkpoint output path")->required();
    train->add_option("--metrics-out", train_metrics, "write the epoch history as JSON");
    train_mflags.add_to(*train);
    train_tflags.add_to(*train);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_dataset, eval_features, eval_metrics;
    std::vector<std::string> eval_parses;
    eval->add_option("--checkpoint", eval_ckpt)->required();
    eval->add_option("--dataset", eval_dataset)->required();
    eval->add_option("--features", eval_features)->required();
    eval->add_option("--parse", eval_parses)->required();
    eval->add_option("--metrics-out", eval_metrics, "write metrics as JSON");

    // predict
    auto* predict = app.add_subcommand("predict", "write per-instance probabilities as JSON lines");
    std::string pred_ckpt, pred_dataset, pred_features, pred_out;
    std::vector<std::string> pred_parses;
    predict->add_option("--checkpoint", pred_ckpt)->required();
    predict->add_option("--dataset", pred_dataset)->required();
    predict->add_option("--features", pred_features)->required();
    predict->add_option("--parse", pred_parses)->required();
    predict->add_option("--out", pred_out, "output path (default stdout)");

    // synth-bench
    auto* synth = app.add_subcommand("synth-bench", "generate the synthetic robustness benchmark");
    pf::SynthSpec spec;
    std::string synth_out = "synth-bench";
    synth->add_option("--seed", spec.seed);
    synth->add_option("--n-sentences", spec.n_sentences, "training sentences");
    synth->add_option("--sentence-len", spec.sentence_len);
    synth->add_option("--parsers", spec.num_parsers, "number of corrupted parsers");
    synth->add_option("--corruption-rate", spec.corruption_rate, "share of edges rewired per tree");
    synth->add_option("--test-fraction", spec.test_fraction, "test size relative to train");
    synth->add_option("--out-dir", synth_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fuse->parsed()) return run_fuse(fuse_parses, fuse_fusion, fuse_out);
        if (stats->parsed()) return run_graph_stats(stats_parses, stats_out);
        if (train->parsed())
            return run_train(train_dataset, train_features, train_parses, train_mflags,
                             train_tflags, train_out, train_metrics);
        if (eval->parsed())
            return run_eval(eval_ckpt, eval_dataset, eval_features, eval_parses, eval_metrics);
        if (predict->parsed())
            return run_predict(pred_ckpt, pred_dataset, pred_features, pred_parses, pred_out);
        if (synth->parsed()) return run_synth_bench(spec, synth_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

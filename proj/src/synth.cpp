#include "parsefuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "parsefuse/rng.hpp"

namespace parsefuse {

namespace {

// Token identity vocabulary. The three opinion identities carry the polarity;
// everything else is filler.
constexpr int kAspectId = 0;
constexpr int kOpinionBase = 1;  // 1=positive, 2=neutral, 3=negative (class order)
constexpr int kFillerBase = 4;
constexpr int kFillerCount = 6;
constexpr int kVocabSize = kFillerBase + kFillerCount;

const char* vocab_word(int id) {
    static const char* words[kVocabSize] = {"item",  "great", "fine",  "awful", "the",
                                            "with",  "came",  "very",  "also",  "one"};
    return words[id];
}

int opinion_id(Label l) { return kOpinionBase + static_cast<int>(l); }

struct GoldTree {
    std::vector<int> head;  // 1-based, head[i] for token i+1; 0 = root
    int aspect = 0;
    int opinion = 0;
};

GoldTree random_gold_tree(int len, Rng& rng) {
    std::vector<int> order(len);
    for (int i = 0; i < len; ++i) order[i] = i + 1;
    rng.shuffle(order);

    GoldTree t;
    t.head.assign(len + 1, 0);
    for (int k = 1; k < len; ++k) t.head[order[k]] = order[rng.uniform_int(k)];

    const int aspect_pos = rng.uniform_int(len - 1);  // leaves room for a later opinion
    t.aspect = order[aspect_pos];
    const int opinion_pos = aspect_pos + 1 + rng.uniform_int(len - 1 - aspect_pos);
    t.opinion = order[opinion_pos];
    t.head[t.opinion] = t.aspect;  // attaching to an earlier node keeps acyclicity
    return t;
}

std::vector<int> tree_distances_from(const std::vector<int>& head, int start) {
    const int len = static_cast<int>(head.size()) - 1;
    std::vector<std::vector<int>> adj(len + 1);
    for (int i = 1; i <= len; ++i) {
        if (head[i] != 0) {
            adj[i].push_back(head[i]);
            adj[head[i]].push_back(i);
        }
    }
    std::vector<int> dist(len + 1, -1);
    dist[start] = 0;
    std::deque<int> queue{start};
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int v : adj[u])
            if (dist[v] == -1) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
    }
    return dist;
}

bool is_ancestor(const std::vector<int>& head, int candidate, int node) {
    // true iff `node` lies on candidate's path to the root (cycle if candidate
    // became node's descendant-head)
    int cur = candidate;
    while (cur != 0) {
        if (cur == node) return true;
        cur = head[cur];
    }
    return false;
}

/// Rewires exactly `count` non-root tokens to new heads (never the original
/// one), keeping the result a tree by rejecting cyclic choices.
std::vector<int> corrupt_tree(const std::vector<int>& gold_head, int count, Rng& rng) {
    const int len = static_cast<int>(gold_head.size()) - 1;
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<int> head = gold_head;
        std::vector<int> dependents;
        for (int i = 1; i <= len; ++i)
            if (gold_head[i] != 0) dependents.push_back(i);
        rng.shuffle(dependents);
        dependents.resize(count);

        bool ok = true;
        for (int node : dependents) {
            std::vector<int> candidates;
            for (int t = 1; t <= len; ++t)
                if (t != node && t != gold_head[node]) candidates.push_back(t);
            rng.shuffle(candidates);
            bool placed = false;
            for (int cand : candidates) {
                if (!is_ancestor(head, cand, node)) {
                    head[node] = cand;
                    placed = true;
                    break;
                }
            }
            if (!placed) {
                ok = false;
                break;
            }
        }
        if (ok) return head;
    }
    throw Error("tree corruption failed to converge");
}

DependencyTree heads_to_tree(const std::vector<int>& head, const std::vector<std::string>& tokens,
                             const std::string& parser_id) {
    DependencyTree t;
    t.parser_id = parser_id;
    const int len = static_cast<int>(tokens.size());
    t.tokens.reserve(len);
    for (int i = 1; i <= len; ++i)
        t.tokens.push_back({i, tokens[i - 1], head[i], head[i] == 0 ? "root" : "dep"});
    validate_tree(t);
    return t;
}

SynthSentence make_sentence(const SynthSpec& spec, const std::string& id, Rng& rng) {
    const int len = spec.sentence_len;
    GoldTree gold = random_gold_tree(len, rng);

    std::vector<int> identity(len + 1, -1);
    identity[gold.aspect] = kAspectId;

    const Label label = static_cast<Label>(rng.uniform_int(kNumClasses));
    identity[gold.opinion] = opinion_id(label);

    // The aspect's head sometimes carries a conflicting polarity; telling it
    // apart from the child opinion requires the edge direction.
    if (gold.head[gold.aspect] != 0 && rng.bernoulli(spec.head_distractor_prob)) {
        const int other = (static_cast<int>(label) + 1 + rng.uniform_int(kNumClasses - 1)) % kNumClasses;
        identity[gold.head[gold.aspect]] = opinion_id(static_cast<Label>(other));
    }

    const std::vector<int> dist = tree_distances_from(gold.head, gold.aspect);
    std::vector<int> far;
    for (int i = 1; i <= len; ++i)
        if (dist[i] >= 2 && identity[i] == -1) far.push_back(i);
    rng.shuffle(far);
    for (int k = 0; k < std::min<int>(spec.far_distractors, static_cast<int>(far.size())); ++k)
        identity[far[k]] = kOpinionBase + rng.uniform_int(kNumClasses);

    for (int i = 1; i <= len; ++i)
        if (identity[i] == -1) identity[i] = kFillerBase + rng.uniform_int(kFillerCount);

    SynthSentence s;
    s.id = id;
    s.label = label;
    s.aspect = {gold.aspect, 1};
    s.opinion_index = gold.opinion;
    s.tokens.reserve(len);
    for (int i = 1; i <= len; ++i) s.tokens.push_back(vocab_word(identity[i]));
    s.gold = heads_to_tree(gold.head, s.tokens, "gold");

    const int corrupt_count =
        static_cast<int>(std::ceil(spec.corruption_rate * static_cast<double>(len - 1)));
    const auto parser_ids = synth_parser_ids(spec.num_parsers);
    for (int m = 0; m < spec.num_parsers; ++m) {
        const std::vector<int> heads =
            corrupt_count == 0 ? gold.head : corrupt_tree(gold.head, corrupt_count, rng);
        s.parses.push_back(heads_to_tree(heads, s.tokens, parser_ids[m]));
    }

    s.features.assign(len, std::vector<double>(kVocabSize, 0.0));
    for (int i = 0; i < len; ++i) {
        for (int j = 0; j < kVocabSize; ++j) s.features[i][j] = rng.normal(0.0, spec.feature_noise);
        s.features[i][identity[i + 1]] += 1.0;
    }
    return s;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_sentences < 1) throw InvalidConfig("n_sentences must be >= 1");
    if (sentence_len < 4) throw InvalidConfig("sentence_len must be >= 4");
    if (num_parsers < 1) throw InvalidConfig("num_parsers must be >= 1");
    if (corruption_rate < 0.0 || corruption_rate >= 1.0)
        throw InvalidConfig("corruption_rate must be in [0,1)");
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw InvalidConfig("test_fraction must be in [0,1)");
}

std::vector<std::string> synth_parser_ids(int num_parsers) {
    std::vector<std::string> ids;
    for (int m = 1; m <= num_parsers; ++m) ids.push_back("parser_" + std::to_string(m));
    return ids;
}

SynthData generate_synth(const SynthSpec& spec) {
    spec.validate();
    SynthData data;
    data.spec = spec;
    data.d_in = kVocabSize;

    Rng train_rng = Rng(spec.seed).fork("synth-train");
    for (int i = 0; i < spec.n_sentences; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "synth-train-%06d", i + 1);
        data.train.push_back(make_sentence(spec, id, train_rng));
    }
    const int n_test = static_cast<int>(std::ceil(spec.test_fraction * spec.n_sentences));
    Rng test_rng = Rng(spec.seed).fork("synth-test");
    for (int i = 0; i < n_test; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "synth-test-%06d", i + 1);
        data.test.push_back(make_sentence(spec, id, test_rng));
    }
    return data;
}

std::vector<LabeledInstance> to_labeled_instances(const std::vector<SynthSentence>& sentences) {
    std::vector<LabeledInstance> out;
    out.reserve(sentences.size());
    for (const SynthSentence& s : sentences) {
        LabeledInstance inst;
        inst.sentence_id = s.id;
        inst.tokens = s.tokens;
        inst.aspect = s.aspect;
        inst.label = s.label;
        inst.trees = s.parses;
        FeatureMatrix fm;
        fm.d_in = static_cast<int>(s.features.front().size());
        fm.rows = s.features;
        fm.provenance = "synth-onehot";
        inst.features = std::move(fm);
        out.push_back(std::move(inst));
    }
    return out;
}

namespace {

void write_split(const std::vector<SynthSentence>& sentences, int num_parsers,
                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream dataset(dir / "dataset.jsonl");
    std::ofstream features(dir / "features.jsonl");
    std::ofstream gold(dir / "gold.conllu");
    std::vector<std::ofstream> parses;
    const auto ids = synth_parser_ids(num_parsers);
    for (const auto& id : ids) parses.emplace_back(dir / (id + ".conllu"));

    for (const SynthSentence& s : sentences) {
        nlohmann::json jd;
        jd["sentence_id"] = s.id;
        jd["tokens"] = s.tokens;
        jd["aspect"] = {{"start", s.aspect.start}, {"length", s.aspect.length}};
        jd["label"] = label_name(s.label);
        dataset << jd.dump() << "\n";

        nlohmann::json jf;
        jf["sentence_id"] = s.id;
        jf["d_in"] = static_cast<int>(s.features.front().size());
        jf["subword_vectors"] = s.features;  // one subword per word
        std::vector<int> word_index(s.tokens.size());
        for (size_t i = 0; i < word_index.size(); ++i) word_index[i] = static_cast<int>(i) + 1;
        jf["word_index"] = word_index;
        jf["provenance"] = "synth-onehot";
        features << jf.dump() << "\n";

        gold << to_conllu(s.gold, s.id);
        for (int m = 0; m < num_parsers; ++m) parses[m] << to_conllu(s.parses[m], s.id);
    }
}

}  // namespace

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
    write_split(data.train, data.spec.num_parsers, dir / "train");
    write_split(data.test, data.spec.num_parsers, dir / "test");
}

}  // namespace parsefuse

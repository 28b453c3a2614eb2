#include "parsefuse/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace parsefuse {

using nlohmann::json;

Label parse_label(const std::string& s) {
    if (s == "positive") return Label::Positive;
    if (s == "neutral") return Label::Neutral;
    if (s == "negative") return Label::Negative;
    throw UnknownLabel("'" + s + "'");
}

const char* label_name(Label l) { return label_name(static_cast<int>(l)); }

const char* label_name(int class_index) {
    switch (class_index) {
        case 0: return "positive";
        case 1: return "neutral";
        case 2: return "negative";
    }
    throw IndexOutOfRange("class index " + std::to_string(class_index));
}

namespace {

json parse_line(const std::string& line, const std::string& where) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw MalformedLine(where + ": not a JSON object");
    return j;
}

const json& need(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw MissingField(where + ": '" + key + "'");
    return *it;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return in;
}

}  // namespace

DatasetLoad load_dataset(const std::string& path) {
    auto in = open_or_throw(path);
    return load_dataset_stream(in, path);
}

DatasetLoad load_dataset_stream(std::istream& in, const std::string& origin) {
    DatasetLoad out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        json j = parse_line(line, where);

        LabeledInstance inst;
        inst.sentence_id = need(j, "sentence_id", where).get<std::string>();
        for (const auto& t : need(j, "tokens", where)) inst.tokens.push_back(t.get<std::string>());
        if (inst.tokens.empty()) throw MalformedLine(where + ": empty token list");

        const json& aspect = need(j, "aspect", where);
        inst.aspect.start = need(aspect, "start", where).get<int>();
        inst.aspect.length = need(aspect, "length", where).get<int>();
        const int n = static_cast<int>(inst.tokens.size());
        if (inst.aspect.start < 1 || inst.aspect.length < 1 ||
            inst.aspect.start + inst.aspect.length - 1 > n)
            throw SpanOutOfRange(where + ": start " + std::to_string(inst.aspect.start) +
                                 " length " + std::to_string(inst.aspect.length) + " over " +
                                 std::to_string(n) + " tokens");

        try {
            inst.label = parse_label(need(j, "label", where).get<std::string>());
        } catch (const UnknownLabel& e) {
            throw UnknownLabel(where + ": " + e.what());
        }
        ++out.class_counts[static_cast<int>(inst.label)];
        out.instances.push_back(std::move(inst));
    }
    return out;
}

std::map<std::string, SubwordRecord> load_features(const std::string& path) {
    auto in = open_or_throw(path);
    return load_features_stream(in, path);
}

std::map<std::string, SubwordRecord> load_features_stream(std::istream& in,
                                                          const std::string& origin) {
    std::map<std::string, SubwordRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        json j = parse_line(line, where);

        SubwordRecord rec;
        rec.sentence_id = need(j, "sentence_id", where).get<std::string>();
        rec.d_in = need(j, "d_in", where).get<int>();
        if (rec.d_in < 1) throw WidthMismatch(where + ": d_in " + std::to_string(rec.d_in));
        if (j.contains("provenance")) rec.provenance = j["provenance"].get<std::string>();

        for (const auto& v : need(j, "subword_vectors", where)) {
            std::vector<double> row = v.get<std::vector<double>>();
            if (static_cast<int>(row.size()) != rec.d_in)
                throw WidthMismatch(where + ": vector of width " + std::to_string(row.size()) +
                                    ", d_in " + std::to_string(rec.d_in));
            for (double x : row)
                if (!std::isfinite(x)) throw NonFiniteValue(where + ": feature vector");
            rec.subword_vectors.push_back(std::move(row));
        }
        rec.word_index = need(j, "word_index", where).get<std::vector<int>>();
        if (rec.word_index.size() != rec.subword_vectors.size())
            throw MalformedLine(where + ": word_index length " +
                                std::to_string(rec.word_index.size()) + " vs " +
                                std::to_string(rec.subword_vectors.size()) + " vectors");
        if (rec.word_index.empty()) throw MalformedLine(where + ": empty record");

        for (size_t i = 1; i < rec.word_index.size(); ++i)
            if (rec.word_index[i] < rec.word_index[i - 1])
                throw NonMonotoneAlignment(where + ": word_index decreases at position " +
                                           std::to_string(i + 1));
        int prev = 0;
        for (int w : rec.word_index) {
            if (w != prev && w != prev + 1)
                throw NonCoveringAlignment(where + ": word " + std::to_string(prev + 1) +
                                           " has zero subwords");
            prev = w;
        }

        out[rec.sentence_id] = std::move(rec);
    }
    return out;
}

ParseFile load_parse_file(const std::string& parser_id, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ParseFile pf;
    pf.parser_id = parser_id;
    for (auto& [sid, tree] : parse_conllu(text, parser_id)) {
        if (!pf.by_sentence.emplace(sid, std::move(tree)).second)
            throw DuplicateIndex(path + ": sentence id '" + sid + "' appears twice");
    }
    return pf;
}

std::vector<LabeledInstance> join_instances(std::vector<LabeledInstance> instances,
                                            const std::vector<ParseFile>& parses,
                                            const std::map<std::string, SubwordRecord>& features) {
    for (LabeledInstance& inst : instances) {
        inst.trees.clear();
        for (const ParseFile& pf : parses) {
            auto it = pf.by_sentence.find(inst.sentence_id);
            if (it == pf.by_sentence.end())
                throw MissingField("parser '" + pf.parser_id + "' has no parse for sentence '" +
                                   inst.sentence_id + "'");
            inst.trees.push_back(it->second);
        }
        align_tokenizations(inst.trees);
        const DependencyTree& ref = inst.trees.front();
        if (ref.size() != static_cast<int>(inst.tokens.size()))
            throw TokenizationMismatch("sentence '" + inst.sentence_id + "': dataset has " +
                                       std::to_string(inst.tokens.size()) + " tokens, parses have " +
                                       std::to_string(ref.size()));
        for (int i = 0; i < ref.size(); ++i)
            if (nfc_normalize(ref.tokens[i].surface) != nfc_normalize(inst.tokens[i]))
                throw TokenizationMismatch("sentence '" + inst.sentence_id + "' position " +
                                           std::to_string(i + 1) + ": dataset '" + inst.tokens[i] +
                                           "' vs parse '" + ref.tokens[i].surface + "'");

        auto fit = features.find(inst.sentence_id);
        if (fit == features.end())
            throw MissingField("no features for sentence '" + inst.sentence_id + "'");
        FeatureMatrix fm = average_subwords(fit->second);
        if (fm.word_count() != static_cast<int>(inst.tokens.size()))
            throw DimensionMismatch("sentence '" + inst.sentence_id + "': " +
                                    std::to_string(fm.word_count()) + " feature rows for " +
                                    std::to_string(inst.tokens.size()) + " tokens");
        inst.features = std::move(fm);
    }
    return instances;
}

FeatureMatrix average_subwords(const SubwordRecord& record) {
    FeatureMatrix fm;
    fm.d_in = record.d_in;
    fm.provenance = record.provenance;
    const int n = record.word_count();
    fm.rows.assign(n, std::vector<double>(record.d_in, 0.0));
    std::vector<int> counts(n, 0);
    for (size_t s = 0; s < record.subword_vectors.size(); ++s) {
        const int w = record.word_index[s] - 1;
        ++counts[w];
        for (int j = 0; j < record.d_in; ++j) fm.rows[w][j] += record.subword_vectors[s][j];
    }
    for (int w = 0; w < n; ++w)
        for (int j = 0; j < record.d_in; ++j) fm.rows[w][j] /= counts[w];
    return fm;
}

}  // namespace parsefuse

#include "parsefuse/metrics.hpp"

#include <sstream>

#include <json.hpp>

namespace parsefuse {

MetricsReport MetricsReport::from_pairs(const std::vector<int>& gold, const std::vector<int>& pred,
                                        int epoch, std::string split) {
    if (gold.size() != pred.size()) throw ShapeMismatch("metrics gold/pred length");
    MetricsReport r;
    r.epoch = epoch;
    r.split = std::move(split);
    r.total = static_cast<int>(gold.size());
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= kNumClasses || pred[i] < 0 || pred[i] >= kNumClasses)
            throw IndexOutOfRange("class label outside [0,3)");
        ++r.confusion[gold[i]][pred[i]];
    }
    int correct = 0;
    for (int c = 0; c < kNumClasses; ++c) correct += r.confusion[c][c];
    r.accuracy = r.total > 0 ? static_cast<double>(correct) / r.total : 0.0;

    for (int c = 0; c < kNumClasses; ++c) {
        int tp = r.confusion[c][c];
        int pred_c = 0, gold_c = 0;
        for (int o = 0; o < kNumClasses; ++o) {
            pred_c += r.confusion[o][c];
            gold_c += r.confusion[c][o];
        }
        r.precision[c] = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
        r.recall[c] = gold_c > 0 ? static_cast<double>(tp) / gold_c : 0.0;
        r.f1[c] = (r.precision[c] + r.recall[c]) > 0.0
                      ? 2.0 * r.precision[c] * r.recall[c] / (r.precision[c] + r.recall[c])
                      : 0.0;
        r.macro_f1 += r.f1[c] / kNumClasses;
    }
    return r;
}

std::string MetricsReport::tsv_header() {
    return "split\tepoch\taccuracy\tmacro_f1\tf1_positive\tf1_neutral\tf1_negative\ttotal";
}

std::string MetricsReport::tsv_row() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << (split.empty() ? "-" : split) << '\t' << epoch << '\t' << accuracy << '\t' << macro_f1;
    for (int c = 0; c < kNumClasses; ++c) out << '\t' << f1[c];
    out << '\t' << total;
    return out.str();
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["split"] = split;
    j["epoch"] = epoch;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["total"] = total;
    for (int c = 0; c < kNumClasses; ++c) {
        nlohmann::json jc;
        jc["precision"] = precision[c];
        jc["recall"] = recall[c];
        jc["f1"] = f1[c];
        j["classes"][label_name(c)] = jc;
    }
    std::vector<std::vector<int>> conf;
    for (int g = 0; g < kNumClasses; ++g)
        conf.emplace_back(confusion[g].begin(), confusion[g].end());
    j["confusion"] = conf;
    return j.dump();
}

}  // namespace parsefuse

#include "parsefuse/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace parsefuse {

void TrainConfig::validate() const {
    if (max_epochs < 1) throw InvalidConfig("max_epochs must be >= 1");
    if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
        throw InvalidConfig("dev_fraction must be in (0,1)");
    if (!(lr > 0.0)) throw InvalidConfig("lr must be positive");
    if (weight_decay < 0.0) throw InvalidConfig("weight_decay must be >= 0");
}

DevSplit split_dev(const std::vector<int>& labels, double fraction, uint64_t seed) {
    const int n = static_cast<int>(labels.size());
    if (n < 2) throw TooSmall(std::to_string(n) + " instances");
    if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidConfig("dev fraction must be in (0,1)");

    std::vector<std::vector<int>> by_class(kNumClasses);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= kNumClasses)
            throw IndexOutOfRange("label " + std::to_string(labels[i]));
        by_class[labels[i]].push_back(i);
    }

    int dev_total = static_cast<int>(std::llround(fraction * n));
    dev_total = std::clamp(dev_total, 1, n - 1);

    // Largest-remainder apportionment of the dev quota across classes.
    std::array<int, kNumClasses> quota{};
    std::array<double, kNumClasses> remainder{};
    int assigned = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        const double exact =
            static_cast<double>(dev_total) * static_cast<double>(by_class[c].size()) / n;
        quota[c] = static_cast<int>(exact);
        remainder[c] = exact - quota[c];
        quota[c] = std::min(quota[c], static_cast<int>(by_class[c].size()));
        assigned += quota[c];
    }
    std::array<int, kNumClasses> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
        return a < b;
    });
    for (int pass = 0; assigned < dev_total && pass < 2 * kNumClasses; ++pass) {
        const int c = order[pass % kNumClasses];
        if (quota[c] < static_cast<int>(by_class[c].size())) {
            ++quota[c];
            ++assigned;
        }
    }
    // Where counts permit, keep every non-empty class represented.
    if (dev_total >= static_cast<int>(std::count_if(by_class.begin(), by_class.end(),
                                                    [](const auto& v) { return !v.empty(); }))) {
        for (int c = 0; c < kNumClasses; ++c) {
            if (by_class[c].empty() || quota[c] > 0) continue;
            int donor = -1;
            for (int o = 0; o < kNumClasses; ++o)
                if (quota[o] > 1 && (donor == -1 || quota[o] > quota[donor])) donor = o;
            if (donor != -1) {
                --quota[donor];
                ++quota[c];
            }
        }
    }

    Rng rng = Rng(seed).fork("dev-split");
    DevSplit split;
    for (int c = 0; c < kNumClasses; ++c) {
        auto& members = by_class[c];
        rng.shuffle(members);
        for (size_t i = 0; i < members.size(); ++i)
            (static_cast<int>(i) < quota[c] ? split.dev_idx : split.train_idx).push_back(members[i]);
    }
    std::sort(split.train_idx.begin(), split.train_idx.end());
    std::sort(split.dev_idx.begin(), split.dev_idx.end());
    if (split.train_idx.empty() || split.dev_idx.empty())
        throw TooSmall("split produced an empty side");
    return split;
}

int select_best_epoch(const std::vector<double>& dev_accuracies) {
    if (dev_accuracies.empty()) throw InvalidConfig("no epochs recorded");
    int best = 0;
    for (int e = 1; e < static_cast<int>(dev_accuracies.size()); ++e)
        if (dev_accuracies[e] > dev_accuracies[best]) best = e;  // ties keep the earlier epoch
    return best;
}

namespace {

MetricsReport evaluate_subset(SentimentModel& model, const std::vector<PreparedInstance>& data,
                              const std::vector<int>& idx, int epoch, const std::string& split) {
    std::vector<int> gold, pred;
    gold.reserve(idx.size());
    pred.reserve(idx.size());
    for (int i : idx) {
        gold.push_back(data[i].gold);
        pred.push_back(model.predict_class(data[i]));
    }
    return MetricsReport::from_pairs(gold, pred, epoch, split);
}

}  // namespace

TrainResult train_model(SentimentModel& model, const std::vector<PreparedInstance>& data,
                        const TrainConfig& cfg) {
    cfg.validate();
    std::vector<int> labels;
    labels.reserve(data.size());
    for (const auto& inst : data) labels.push_back(inst.gold);
    DevSplit split = split_dev(labels, cfg.dev_fraction, cfg.seed);

    AdamW optimizer(model.parameters(),
                    {cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay});
    Rng shuffle_rng = Rng(cfg.seed).fork("epoch-shuffle");
    Rng dropout_rng = Rng(cfg.seed).fork("dropout");

    TrainResult result;
    std::vector<double> dev_accs;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<int> order = split.train_idx;
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            Tape tape;
            std::vector<Tensor> logit_rows;
            std::vector<int> golds;
            for (size_t i = start; i < end; ++i) {
                const PreparedInstance& inst = data[order[i]];
                logit_rows.push_back(model.logits(inst, true, &dropout_rng));
                golds.push_back(inst.gold);
            }
            Tensor batch_logits = logit_rows.size() == 1 ? logit_rows[0] : concat(0, logit_rows);
            Tensor loss = training_loss(batch_logits, golds);
            const double loss_value = loss.scalar_value();
            if (!std::isfinite(loss_value))
                throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batches) + ": loss " + std::to_string(loss_value));
            optimizer.zero_grad();
            tape.backward(loss);
            optimizer.step();
            loss_sum += loss_value;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
        rec.train = evaluate_subset(model, data, split.train_idx, epoch, "train");
        rec.dev = evaluate_subset(model, data, split.dev_idx, epoch, "dev");
        dev_accs.push_back(rec.dev.accuracy);
        result.history.push_back(std::move(rec));

        if (dev_accs.size() == 1 || dev_accs.back() > result.best_dev_accuracy) {
            result.best_dev_accuracy = dev_accs.back();
            result.best_epoch = epoch;
            result.best_params = model.snapshot_parameters();
        }
    }

    const int best_idx = select_best_epoch(dev_accs);
    if (result.best_epoch != best_idx + 1)
        throw Error("internal: best-epoch bookkeeping diverged");
    model.restore_parameters(result.best_params);
    return result;
}

MetricsReport evaluate_model(SentimentModel& model, const std::vector<PreparedInstance>& data,
                             int epoch, const std::string& split) {
    std::vector<int> gold, pred;
    gold.reserve(data.size());
    pred.reserve(data.size());
    for (const auto& inst : data) {
        gold.push_back(inst.gold);
        pred.push_back(model.predict_class(inst));
    }
    return MetricsReport::from_pairs(gold, pred, epoch, split);
}

std::vector<PredictionRow> predict_all(SentimentModel& model,
                                       const std::vector<PreparedInstance>& data) {
    std::vector<PredictionRow> rows;
    rows.reserve(data.size());
    for (const auto& inst : data) {
        PredictionRow row;
        row.sentence_id = inst.sentence_id;
        row.aspect = inst.aspect;
        row.probs = model.predict_probs(inst);
        row.label = 0;
        for (int c = 1; c < kNumClasses; ++c)
            if (row.probs[c] > row.probs[row.label]) row.label = c;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows) {
    for (const auto& row : rows) {
        nlohmann::json j;
        j["sentence_id"] = row.sentence_id;
        j["aspect"] = {{"start", row.aspect.start}, {"length", row.aspect.length}};
        nlohmann::json probs;
        for (int c = 0; c < kNumClasses; ++c) probs[label_name(c)] = row.probs[c];
        j["probabilities"] = probs;
        j["label"] = label_name(row.label);
        out << j.dump() << "\n";
    }
}

ModelConfig single_tree_config(const ModelConfig& base, const std::string& parser_id) {
    ModelConfig cfg = base;
    cfg.kind = base.kind == ModelKind::GatBaseline ? ModelKind::GatBaseline : ModelKind::RgatSingle;
    cfg.fusion = FusionMode::Single;
    cfg.single_parser = parser_id;
    return cfg;
}

}  // namespace parsefuse

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "parsefuse/metrics.hpp"
#include "parsefuse/model.hpp"
#include "parsefuse/optimizer.hpp"

namespace parsefuse {

struct TrainConfig {
    double lr = 1e-5;  // desk-scale synthetic runs override to 1e-3
    int batch_size = 4;
    int max_epochs = 5;
    double dev_fraction = 0.05;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 1;

    void validate() const;  // InvalidConfig
};

struct DevSplit {
    std::vector<int> train_idx;
    std::vector<int> dev_idx;
};

/// Stratified by label where class counts permit (largest-remainder
/// apportionment of the dev quota); deterministic under seed; disjoint and
/// covering. Throws TooSmall for datasets of fewer than 2 instances.
DevSplit split_dev(const std::vector<int>& labels, double fraction, uint64_t seed);

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    MetricsReport train;
    MetricsReport dev;
};

struct TrainResult {
    int best_epoch = 0;
    double best_dev_accuracy = 0.0;
    std::vector<EpochRecord> history;
    std::map<std::string, std::vector<double>> best_params;
};

/// Index of the best epoch: highest dev accuracy, earlier epoch on ties.
int select_best_epoch(const std::vector<double>& dev_accuracies);

/// Runs up to max_epochs of mini-batch training, evaluating dev accuracy after
/// each epoch and keeping the best checkpoint. The model is left holding the
/// best parameters. Throws NonFiniteLoss with diagnostics if the loss leaves
/// the reals.
TrainResult train_model(SentimentModel& model, const std::vector<PreparedInstance>& data,
                        const TrainConfig& cfg);

MetricsReport evaluate_model(SentimentModel& model, const std::vector<PreparedInstance>& data,
                             int epoch = -1, const std::string& split = "test");

struct PredictionRow {
    std::string sentence_id;
    AspectSpan aspect;
    std::array<double, kNumClasses> probs{};
    int label = 0;
};

std::vector<PredictionRow> predict_all(SentimentModel& model,
                                       const std::vector<PreparedInstance>& data);
void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows);

/// Derives the config of the per-parser member model used inside ensembles
/// and single-tree baselines.
ModelConfig single_tree_config(const ModelConfig& base, const std::string& parser_id);

}  // namespace parsefuse

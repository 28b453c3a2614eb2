#pragma once

#include <array>
#include <string>
#include <vector>

#include "parsefuse/dataset.hpp"

namespace parsefuse {

struct MetricsReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<double, kNumClasses> precision{};
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> f1{};
    std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]
    int total = 0;
    int epoch = -1;
    std::string split;

    /// Classes absent from both gold and predictions contribute f1 = 0.
    static MetricsReport from_pairs(const std::vector<int>& gold, const std::vector<int>& pred,
                                    int epoch = -1, std::string split = "");

    static std::string tsv_header();
    std::string tsv_row() const;
    std::string to_json() const;
};

}  // namespace parsefuse

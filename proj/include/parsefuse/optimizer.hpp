#pragma once

#include <vector>

#include "parsefuse/tensor.hpp"

namespace parsefuse {

struct AdamWConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Adaptive moments with decoupled weight decay. Decay touches only parameters
/// flagged weight_decay_eligible; moment estimates are bias-corrected.
class AdamW {
public:
    AdamW(std::vector<Parameter*> params, AdamWConfig cfg);

    void step();
    void zero_grad();

    int64_t step_count() const { return t_; }

private:
    std::vector<Parameter*> params_;
    AdamWConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    int64_t t_ = 0;
};

}  // namespace parsefuse

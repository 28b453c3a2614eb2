#pragma once

#include <array>
#include <string>
#include <vector>

#include "parsefuse/dataset.hpp"
#include "parsefuse/tensor.hpp"

namespace parsefuse {

struct ClassifierParams {
    Parameter w1;  // d_out × d_in (d_in = encoder hidden width, or M·d_h for feature ensembles)
    Parameter b1;  // d_out
    Parameter w2;  // 3 × d_out
    Parameter b2;  // 3
    bool use_bias = true;

    static ClassifierParams init(int input_width, int d_out, bool use_bias, Rng& rng,
                                 const std::string& prefix = "clf");
    std::vector<Parameter*> all();
};

/// Arithmetic mean of the final-layer rows covering the aspect span (1-based).
Tensor pool_aspect(const Tensor& h_final, const AspectSpan& span);

/// softmax(W2 relu(W1 h_t)) without the softmax: returns the 1×3 scores.
Tensor classifier_logits(const Tensor& pooled, const ClassifierParams& params);

std::array<double, kNumClasses> softmax_probs(const Tensor& logits_row);

/// Mean cross-entropy over the batch. Weight decay is the optimizer's job and
/// is not folded into this value.
Tensor training_loss(const Tensor& batch_logits, const std::vector<int>& golds);

}  // namespace parsefuse

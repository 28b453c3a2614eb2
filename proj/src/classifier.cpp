#include "parsefuse/classifier.hpp"

#include <cmath>

namespace parsefuse {

ClassifierParams ClassifierParams::init(int input_width, int d_out, bool use_bias, Rng& rng,
                                        const std::string& prefix) {
    if (input_width < 1 || d_out < 1) throw InvalidConfig("classifier dimensions must be >= 1");
    auto xavier = [&rng](const std::string& name, int rows, int cols) {
        const double bound = std::sqrt(6.0 / (rows + cols));
        std::vector<double> data(static_cast<size_t>(rows) * cols);
        for (double& v : data) v = rng.uniform(-bound, bound);
        return Parameter{name, Tensor::from({rows, cols}, std::move(data), true), true};
    };
    ClassifierParams p;
    p.use_bias = use_bias;
    p.w1 = xavier(prefix + ".w1", d_out, input_width);
    p.w2 = xavier(prefix + ".w2", kNumClasses, d_out);
    p.b1 = {prefix + ".b1", Tensor::zeros({d_out}, true), false};
    p.b2 = {prefix + ".b2", Tensor::zeros({kNumClasses}, true), false};
    return p;
}

std::vector<Parameter*> ClassifierParams::all() {
    if (use_bias) return {&w1, &b1, &w2, &b2};
    return {&w1, &w2};
}

Tensor pool_aspect(const Tensor& h_final, const AspectSpan& span) {
    const int n = h_final.rows();
    if (span.start < 1 || span.length < 1 || span.start + span.length - 1 > n)
        throw SpanOutOfRange("start " + std::to_string(span.start) + " length " +
                             std::to_string(span.length) + " over " + std::to_string(n) + " rows");
    std::vector<int> rows(span.length);
    for (int i = 0; i < span.length; ++i) rows[i] = span.start - 1 + i;
    return mean_rows(h_final, rows);
}

Tensor classifier_logits(const Tensor& pooled, const ClassifierParams& params) {
    Tensor hidden = matmul_nt(pooled, params.w1.tensor);
    if (params.use_bias) hidden = add_rowwise(hidden, params.b1.tensor);
    Tensor scores = matmul_nt(relu(hidden), params.w2.tensor);
    if (params.use_bias) scores = add_rowwise(scores, params.b2.tensor);
    return scores;
}

std::array<double, kNumClasses> softmax_probs(const Tensor& logits_row) {
    if (logits_row.size() != kNumClasses)
        throw ShapeMismatch("expected " + std::to_string(kNumClasses) + " logits");
    std::array<double, kNumClasses> p{};
    double mx = logits_row.data()[0];
    for (double v : logits_row.data()) mx = std::max(mx, v);
    double denom = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        p[c] = std::exp(logits_row.data()[c] - mx);
        denom += p[c];
    }
    for (double& v : p) v /= denom;
    return p;
}

Tensor training_loss(const Tensor& batch_logits, const std::vector<int>& golds) {
    if (batch_logits.rows() < 1) throw ShapeMismatch("empty batch");
    return cross_entropy_loss(batch_logits, golds);
}

}  // namespace parsefuse

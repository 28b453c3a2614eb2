#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "parsefuse/errors.hpp"
#include "parsefuse/rng.hpp"

namespace parsefuse {

using Shape = std::vector<int>;

int64_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated on first accumulation, same length as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward;  // empty for leaves
    uint64_t tape_id = 0;                       // 0 = leaf / never recorded
    uint64_t visit_mark = 0;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

/// Value-semantic handle to a node in the compute graph. 64-bit floats,
/// row-major storage.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : node(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node != nullptr; }
    const Shape& shape() const { return node->shape; }
    int64_t size() const { return static_cast<int64_t>(node->value.size()); }
    int rows() const { return node->shape.at(0); }
    int cols() const { return node->shape.at(1); }

    std::vector<double>& data() { return node->value; }
    const std::vector<double>& data() const { return node->value; }
    double scalar_value() const;
    double at(int r, int c) const { return node->value[static_cast<size_t>(r) * cols() + c]; }

    bool requires_grad() const { return node && node->requires_grad; }
    const std::vector<double>& grad() const;
    void zero_grad() const;

    std::shared_ptr<TensorNode> node;
};

/// Records operations in execution order while alive; `backward` replays them
/// in exact reverse order, visiting each recorded node once. A second call
/// without a fresh tape is an error. With no tape active, operations compute
/// values only (inference mode).
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void backward(const Tensor& loss);
    size_t recorded() const { return order_.size(); }

    static Tape* current();
    void record(const std::shared_ptr<TensorNode>& n);

private:
    std::vector<std::shared_ptr<TensorNode>> order_;
    Tape* prev_ = nullptr;
    uint64_t id_ = 0;
    bool consumed_ = false;
};

/// Named trainable tensor. Names must be unique within a model.
struct Parameter {
    std::string name;
    Tensor tensor;
    bool weight_decay_eligible = true;
};

// When enabled, every operation scans its output for NaN/Inf and throws
// NonFiniteValue. Used by tests; off by default.
void set_finite_checks(bool on);
bool finite_checks_enabled();

// Sorts the buffer ascending and folds left-to-right. The result depends only
// on the multiset of values, which makes node-indexed reductions independent
// of node labeling.
double canonical_sum(std::vector<double>& buf);

// ---- primitives ------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);     // (m×k)·(k×n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m×k)·(n×k)^T
Tensor matvec(const Tensor& a, const Tensor& v);     // (m×n)·(n) -> (m)
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_rowwise(const Tensor& m, const Tensor& row);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor concat(int axis, const std::vector<Tensor>& parts);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);
Tensor sum_all(const Tensor& x);

/// Row-wise softmax over unmasked entries; masked entries get probability
/// exactly 0. Every row needs at least one unmasked entry.
Tensor masked_softmax(const Tensor& logits, const std::vector<uint8_t>& mask);

/// Gathers rows of `table` (also serves as embedding lookup).
Tensor take_rows(const Tensor& table, const std::vector<int>& idx);

/// Scales row r of `m` by s[r].
Tensor scale_rows(const Tensor& m, const Tensor& s);

/// Softmax over the entries of each segment; segment ids index [0, n_segments).
/// Every segment must be non-empty.
Tensor segment_softmax(const Tensor& scores, const std::vector<int>& seg, int n_segments);

/// out[s] = sum of rows[e] over e with seg[e] == s (empty segments give zeros).
Tensor segment_sum_rows(const Tensor& rows, const std::vector<int>& seg, int n_segments);

/// 1×d mean of the selected rows.
Tensor mean_rows(const Tensor& m, const std::vector<int>& idx);

/// Mean over the batch of -log softmax(logits)[gold], log-sum-exp stabilized.
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& gold);

}  // namespace parsefuse

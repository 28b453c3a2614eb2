#include "parsefuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace parsefuse {

namespace {

bool g_finite_checks = false;

thread_local Tape* t_current_tape = nullptr;

void check_finite(const TensorNode& n, const char* op) {
    if (!g_finite_checks) return;
    for (double v : n.value) {
        if (!std::isfinite(v)) throw NonFiniteValue(std::string(op));
    }
}

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> value) {
    auto n = std::make_shared<TensorNode>();
    if (shape_size(shape) != static_cast<int64_t>(value.size()))
        throw ShapeMismatch("node data length does not match shape " + shape_str(shape));
    n->shape = std::move(shape);
    n->value = std::move(value);
    return n;
}

bool any_requires_grad(std::initializer_list<const Tensor*> ins) {
    if (t_current_tape == nullptr) return false;
    for (const Tensor* t : ins)
        if (t->requires_grad()) return true;
    return false;
}

/// Attaches parents + backward fn and records on the active tape.
Tensor finish(std::shared_ptr<TensorNode> out, std::vector<std::shared_ptr<TensorNode>> parents,
              std::function<void(TensorNode&)> backward, const char* op) {
    check_finite(*out, op);
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward = std::move(backward);
    t_current_tape->record(out);
    return Tensor(std::move(out));
}

void require_2d(const Tensor& t, const char* op) {
    if (!t.defined() || t.shape().size() != 2) throw ShapeMismatch(std::string(op) + ": expected 2-d tensor");
}

void require_1d(const Tensor& t, const char* op) {
    if (!t.defined() || t.shape().size() != 1) throw ShapeMismatch(std::string(op) + ": expected 1-d tensor");
}

}  // namespace

int64_t shape_size(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeMismatch("negative dimension");
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks_enabled() { return g_finite_checks; }

double canonical_sum(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    double s = 0.0;
    for (double v : buf) s += v;
    return s;
}

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    const int64_t count = shape_size(shape);
    auto n = make_node(std::move(shape), std::vector<double>(count, v));
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    auto n = make_node(std::move(shape), std::move(data));
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

double Tensor::scalar_value() const {
    if (size() != 1) throw ShapeMismatch("scalar_value on tensor of size " + std::to_string(size()));
    return node->value[0];
}

const std::vector<double>& Tensor::grad() const {
    node->ensure_grad();
    return node->grad;
}

void Tensor::zero_grad() const {
    node->ensure_grad();
    std::fill(node->grad.begin(), node->grad.end(), 0.0);
}

// ---- Tape -------------------------------------------------------------------

Tape::Tape() {
    static uint64_t id_counter = 0;
    id_ = ++id_counter;
    prev_ = t_current_tape;
    t_current_tape = this;
}

Tape::~Tape() { t_current_tape = prev_; }

Tape* Tape::current() { return t_current_tape; }

void Tape::record(const std::shared_ptr<TensorNode>& n) {
    n->tape_id = id_;
    order_.push_back(n);
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw BackwardAlreadyRun("tape already consumed; build a fresh tape");
    if (!loss.defined() || loss.size() != 1) throw ShapeMismatch("backward expects a scalar loss");
    if (loss.node->tape_id != id_)
        throw DetachedGraph("loss was not produced through primitives recorded on this tape");
    consumed_ = true;

    // Mark everything reachable from the loss through parent links.
    static uint64_t mark_counter = 0;
    const uint64_t mark = ++mark_counter;
    std::vector<TensorNode*> stack{loss.node.get()};
    loss.node->visit_mark = mark;
    while (!stack.empty()) {
        TensorNode* n = stack.back();
        stack.pop_back();
        for (const auto& p : n->parents) {
            if (p->visit_mark != mark) {
                p->visit_mark = mark;
                stack.push_back(p.get());
            }
        }
    }

    loss.node->ensure_grad();
    loss.node->grad[0] += 1.0;

    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        TensorNode* n = it->get();
        if (n->visit_mark == mark && n->backward) {
            n->ensure_grad();
            n->backward(*n);
        }
    }
}

// ---- primitives -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k)
        throw ShapeMismatch("matmul " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            const double aik = av[static_cast<size_t>(i) * k + kk];
            if (aik == 0.0) continue;
            for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += aik * bv[static_cast<size_t>(kk) * n + j];
        }
    auto node = make_node({m, n}, std::move(out));
    if (!any_requires_grad({&a, &b})) {
        check_finite(*node, "matmul");
        return Tensor(std::move(node));
    }
    auto pa = a.node, pb = b.node;
    return finish(
        node, {pa, pb},
        [pa, pb, m, k, n](TensorNode& self) {
            const auto& g = self.grad;
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double gij = g[static_cast<size_t>(i) * n + j];
                        if (gij == 0.0) continue;
                        for (int kk = 0; kk < k; ++kk)
                            pa->grad[static_cast<size_t>(i) * k + kk] += gij * pb->value[static_cast<size_t>(kk) * n + j];
                    }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int kk = 0; kk < k; ++kk) {
                        const double aik = pa->value[static_cast<size_t>(i) * k + kk];
                        if (aik == 0.0) continue;
                        for (int j = 0; j < n; ++j)
                            pb->grad[static_cast<size_t>(kk) * n + j] += aik * g[static_cast<size_t>(i) * n + j];
                    }
            }
        },
        "matmul");
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul_nt");
    require_2d(b, "matmul_nt");
    const int m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k)
        throw ShapeMismatch("matmul_nt " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int kk = 0; kk < k; ++kk)
                s += av[static_cast<size_t>(i) * k + kk] * bv[static_cast<size_t>(j) * k + kk];
            out[static_cast<size_t>(i) * n + j] = s;
        }
    auto node = make_node({m, n}, std::move(out));
    if (!any_requires_grad({&a, &b})) {
        check_finite(*node, "matmul_nt");
        return Tensor(std::move(node));
    }
    auto pa = a.node, pb = b.node;
    return finish(
        node, {pa, pb},
        [pa, pb, m, k, n](TensorNode& self) {
            const auto& g = self.grad;
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double gij = g[static_cast<size_t>(i) * n + j];
                        if (gij == 0.0) continue;
                        for (int kk = 0; kk < k; ++kk)
                            pa->grad[static_cast<size_t>(i) * k + kk] += gij * pb->value[static_cast<size_t>(j) * k + kk];
                    }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double gij = g[static_cast<size_t>(i) * n + j];
                        if (gij == 0.0) continue;
                        for (int kk = 0; kk < k; ++kk)
                            pb->grad[static_cast<size_t>(j) * k + kk] += gij * pa->value[static_cast<size_t>(i) * k + kk];
                    }
            }
        },
        "matmul_nt");
}

Tensor matvec(const Tensor& a, const Tensor& v) {
    require_2d(a, "matvec");
    require_1d(v, "matvec");
    const int m = a.rows(), n = a.cols();
    if (v.shape()[0] != n)
        throw ShapeMismatch("matvec " + shape_str(a.shape()) + " x " + shape_str(v.shape()));
    std::vector<double> out(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += a.data()[static_cast<size_t>(i) * n + j] * v.data()[j];
        out[i] = s;
    }
    auto node = make_node({m}, std::move(out));
    if (!any_requires_grad({&a, &v})) {
        check_finite(*node, "matvec");
        return Tensor(std::move(node));
    }
    auto pa = a.node, pv = v.node;
    return finish(
        node, {pa, pv},
        [pa, pv, m, n](TensorNode& self) {
            const auto& g = self.grad;
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int i = 0; i < m; ++i) {
                    if (g[i] == 0.0) continue;
                    for (int j = 0; j < n; ++j) pa->grad[static_cast<size_t>(i) * n + j] += g[i] * pv->value[j];
                }
            }
            if (pv->requires_grad) {
                pv->ensure_grad();
                for (int i = 0; i < m; ++i) {
                    if (g[i] == 0.0) continue;
                    for (int j = 0; j < n; ++j) pv->grad[j] += g[i] * pa->value[static_cast<size_t>(i) * n + j];
                }
            }
        },
        "matvec");
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.defined() || !b.defined() || a.shape() != b.shape())
        throw ShapeMismatch("add " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.data());
    for (size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i];
    auto node = make_node(a.shape(), std::move(out));
    if (!any_requires_grad({&a, &b})) {
        check_finite(*node, "add");
        return Tensor(std::move(node));
    }
    auto pa = a.node, pb = b.node;
    return finish(
        node, {pa, pb},
        [pa, pb](TensorNode& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
            }
        },
        "add");
}

Tensor add_rowwise(const Tensor& m, const Tensor& row) {
    require_2d(m, "add_rowwise");
    require_1d(row, "add_rowwise");
    const int r = m.rows(), c = m.cols();
    if (row.shape()[0] != c)
        throw ShapeMismatch("add_rowwise " + shape_str(m.shape()) + " + " + shape_str(row.shape()));
    std::vector<double> out(m.data());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<size_t>(i) * c + j] += row.data()[j];
    auto node = make_node({r, c}, std::move(out));
    if (!any_requires_grad({&m, &row})) {
        check_finite(*node, "add_rowwise");
        return Tensor(std::move(node));
    }
    auto pm = m.node, pr = row.node;
    return finish(
        node, {pm, pr},
        [pm, pr, r, c](TensorNode& self) {
            if (pm->requires_grad) {
                pm->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pm->grad[i] += self.grad[i];
            }
            if (pr->requires_grad) {
                pr->ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j) pr->grad[j] += self.grad[static_cast<size_t>(i) * c + j];
            }
        },
        "add_rowwise");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (!a.defined() || !b.defined() || a.shape() != b.shape())
        throw ShapeMismatch("mul " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.data());
    for (size_t i = 0; i < out.size(); ++i) out[i] *= b.data()[i];
    auto node = make_node(a.shape(), std::move(out));
    if (!any_requires_grad({&a, &b})) {
        check_finite(*node, "mul");
        return Tensor(std::move(node));
    }
    auto pa = a.node, pb = b.node;
    return finish(
        node, {pa, pb},
        [pa, pb](TensorNode& self) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
            }
        },
        "mul");
}

Tensor concat(int axis, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat of zero tensors");
    if (axis != 0 && axis != 1) throw ShapeMismatch("concat axis must be 0 or 1");
    for (const auto& p : parts) require_2d(p, "concat");

    int rows = parts[0].rows(), cols = parts[0].cols();
    if (axis == 0) {
        rows = 0;
        for (const auto& p : parts) {
            if (p.cols() != cols) throw ShapeMismatch("concat axis 0 column mismatch");
            rows += p.rows();
        }
    } else {
        cols = 0;
        for (const auto& p : parts) {
            if (p.rows() != rows) throw ShapeMismatch("concat axis 1 row mismatch");
            cols += p.cols();
        }
    }
    std::vector<double> out(static_cast<size_t>(rows) * cols, 0.0);
    if (axis == 0) {
        size_t off = 0;
        for (const auto& p : parts) {
            std::copy(p.data().begin(), p.data().end(), out.begin() + off);
            off += p.data().size();
        }
    } else {
        int coff = 0;
        for (const auto& p : parts) {
            const int pc = p.cols();
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < pc; ++j)
                    out[static_cast<size_t>(i) * cols + coff + j] = p.data()[static_cast<size_t>(i) * pc + j];
            coff += pc;
        }
    }
    auto node = make_node({rows, cols}, std::move(out));
    bool needs = false;
    if (t_current_tape)
        for (const auto& p : parts)
            if (p.requires_grad()) needs = true;
    if (!needs) {
        check_finite(*node, "concat");
        return Tensor(std::move(node));
    }
    std::vector<std::shared_ptr<TensorNode>> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) parents.push_back(p.node);
    return finish(
        node, parents,
        [parents, axis, rows, cols](TensorNode& self) {
            if (axis == 0) {
                size_t off = 0;
                for (const auto& p : parents) {
                    if (p->requires_grad) {
                        p->ensure_grad();
                        for (size_t i = 0; i < p->value.size(); ++i) p->grad[i] += self.grad[off + i];
                    }
                    off += p->value.size();
                }
            } else {
                int coff = 0;
                for (const auto& p : parents) {
                    const int pc = p->shape[1];
                    if (p->requires_grad) {
                        p->ensure_grad();
                        for (int i = 0; i < rows; ++i)
                            for (int j = 0; j < pc; ++j)
                                p->grad[static_cast<size_t>(i) * pc + j] +=
                                    self.grad[static_cast<size_t>(i) * cols + coff + j];
                    }
                    coff += pc;
                }
            }
        },
        "concat");
}

namespace {
Tensor pointwise_relu(const Tensor& x, double slope, const char* op) {
    std::vector<double> out(x.data());
    for (double& v : out) v = v > 0.0 ? v : slope * v;
    auto node = make_node(x.shape(), std::move(out));
    if (!any_requires_grad({&x})) {
        check_finite(*node, op);
        return Tensor(std::move(node));
    }
    auto px = x.node;
    return finish(
        node, {px},
        [px, slope](TensorNode& self) {
            px->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                px->grad[i] += self.grad[i] * (px->value[i] > 0.0 ? 1.0 : slope);
        },
        op);
}
}  // namespace

Tensor relu(const Tensor& x) { return pointwise_relu(x, 0.0, "relu"); }

Tensor leaky_relu(const Tensor& x, double slope) { return pointwise_relu(x, slope, "leaky_relu"); }

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw InvalidConfig("dropout rate must be in [0,1), got " + std::to_string(p));
    if (!training || p == 0.0) return x;  // identity, no node
    const double keep_scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(x.data().size());
    std::vector<double> out(x.data().size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double m = rng.bernoulli(p) ? 0.0 : keep_scale;
        (*mask)[i] = m;
        out[i] = x.data()[i] * m;
    }
    auto node = make_node(x.shape(), std::move(out));
    if (!any_requires_grad({&x})) {
        check_finite(*node, "dropout");
        return Tensor(std::move(node));
    }
    auto px = x.node;
    return finish(
        node, {px},
        [px, mask](TensorNode& self) {
            px->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i] * (*mask)[i];
        },
        "dropout");
}

Tensor sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    auto node = make_node({1}, {s});
    if (!any_requires_grad({&x})) {
        check_finite(*node, "sum_all");
        return Tensor(std::move(node));
    }
    auto px = x.node;
    return finish(
        node, {px},
        [px](TensorNode& self) {
            px->ensure_grad();
            for (double& g : px->grad) g += self.grad[0];
        },
        "sum_all");
}

Tensor masked_softmax(const Tensor& logits, const std::vector<uint8_t>& mask) {
    require_2d(logits, "masked_softmax");
    const int r = logits.rows(), c = logits.cols();
    if (static_cast<int64_t>(mask.size()) != logits.size())
        throw ShapeMismatch("masked_softmax mask size " + std::to_string(mask.size()));
    std::vector<double> out(static_cast<size_t>(r) * c, 0.0);
    for (int i = 0; i < r; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j)
            if (mask[static_cast<size_t>(i) * c + j]) mx = std::max(mx, logits.at(i, j));
        if (mx == -std::numeric_limits<double>::infinity())
            throw EmptyMaskRow("row " + std::to_string(i));
        double denom = 0.0;
        for (int j = 0; j < c; ++j) {
            const size_t k = static_cast<size_t>(i) * c + j;
            if (mask[k]) {
                out[k] = std::exp(logits.data()[k] - mx);
                denom += out[k];
            }
        }
        for (int j = 0; j < c; ++j) {
            const size_t k = static_cast<size_t>(i) * c + j;
            if (mask[k]) out[k] /= denom;
        }
    }
    auto node = make_node({r, c}, std::move(out));
    if (!any_requires_grad({&logits})) {
        check_finite(*node, "masked_softmax");
        return Tensor(std::move(node));
    }
    auto px = logits.node;
    auto m = std::make_shared<std::vector<uint8_t>>(mask);
    return finish(
        node, {px},
        [px, m, r, c](TensorNode& self) {
            px->ensure_grad();
            for (int i = 0; i < r; ++i) {
                double dot = 0.0;
                for (int j = 0; j < c; ++j) {
                    const size_t k = static_cast<size_t>(i) * c + j;
                    if ((*m)[k]) dot += self.grad[k] * self.value[k];
                }
                for (int j = 0; j < c; ++j) {
                    const size_t k = static_cast<size_t>(i) * c + j;
                    if ((*m)[k]) px->grad[k] += self.value[k] * (self.grad[k] - dot);
                }
            }
        },
        "masked_softmax");
}

Tensor take_rows(const Tensor& table, const std::vector<int>& idx) {
    require_2d(table, "take_rows");
    const int n = table.rows(), d = table.cols();
    std::vector<double> out(idx.size() * static_cast<size_t>(d));
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= n)
            throw IndexOutOfRange("take_rows index " + std::to_string(idx[i]) + " of " + std::to_string(n));
        std::copy_n(table.data().begin() + static_cast<size_t>(idx[i]) * d, d, out.begin() + i * d);
    }
    auto node = make_node({static_cast<int>(idx.size()), d}, std::move(out));
    if (!any_requires_grad({&table})) {
        check_finite(*node, "take_rows");
        return Tensor(std::move(node));
    }
    auto pt = table.node;
    auto ids = std::make_shared<std::vector<int>>(idx);
    return finish(
        node, {pt},
        [pt, ids, d](TensorNode& self) {
            pt->ensure_grad();
            for (size_t i = 0; i < ids->size(); ++i)
                for (int j = 0; j < d; ++j)
                    pt->grad[static_cast<size_t>((*ids)[i]) * d + j] += self.grad[i * d + j];
        },
        "take_rows");
}

Tensor scale_rows(const Tensor& m, const Tensor& s) {
    require_2d(m, "scale_rows");
    require_1d(s, "scale_rows");
    const int r = m.rows(), c = m.cols();
    if (s.shape()[0] != r)
        throw ShapeMismatch("scale_rows " + shape_str(m.shape()) + " by " + shape_str(s.shape()));
    std::vector<double> out(m.data());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<size_t>(i) * c + j] *= s.data()[i];
    auto node = make_node({r, c}, std::move(out));
    if (!any_requires_grad({&m, &s})) {
        check_finite(*node, "scale_rows");
        return Tensor(std::move(node));
    }
    auto pm = m.node, ps = s.node;
    return finish(
        node, {pm, ps},
        [pm, ps, r, c](TensorNode& self) {
            if (pm->requires_grad) {
                pm->ensure_grad();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j)
                        pm->grad[static_cast<size_t>(i) * c + j] += self.grad[static_cast<size_t>(i) * c + j] * ps->value[i];
            }
            if (ps->requires_grad) {
                ps->ensure_grad();
                for (int i = 0; i < r; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < c; ++j)
                        acc += self.grad[static_cast<size_t>(i) * c + j] * pm->value[static_cast<size_t>(i) * c + j];
                    ps->grad[i] += acc;
                }
            }
        },
        "scale_rows");
}

Tensor segment_softmax(const Tensor& scores, const std::vector<int>& seg, int n_segments) {
    require_1d(scores, "segment_softmax");
    const int e = scores.shape()[0];
    if (static_cast<int>(seg.size()) != e) throw ShapeMismatch("segment_softmax ids length");
    std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity());
    for (int i = 0; i < e; ++i) {
        if (seg[i] < 0 || seg[i] >= n_segments) throw IndexOutOfRange("segment id " + std::to_string(seg[i]));
        mx[seg[i]] = std::max(mx[seg[i]], scores.data()[i]);
    }
    for (int s = 0; s < n_segments; ++s)
        if (mx[s] == -std::numeric_limits<double>::infinity())
            throw EmptyMaskRow("segment " + std::to_string(s) + " has no entries");
    std::vector<double> ex(e);
    for (int i = 0; i < e; ++i) ex[i] = std::exp(scores.data()[i] - mx[seg[i]]);
    std::vector<double> denom(n_segments, 0.0);
    {
        std::vector<std::vector<double>> terms(n_segments);
        for (int i = 0; i < e; ++i) terms[seg[i]].push_back(ex[i]);
        for (int s = 0; s < n_segments; ++s) denom[s] = canonical_sum(terms[s]);
    }
    std::vector<double> out(e);
    for (int i = 0; i < e; ++i) out[i] = ex[i] / denom[seg[i]];
    auto node = make_node({e}, std::move(out));
    if (!any_requires_grad({&scores})) {
        check_finite(*node, "segment_softmax");
        return Tensor(std::move(node));
    }
    auto px = scores.node;
    auto ids = std::make_shared<std::vector<int>>(seg);
    return finish(
        node, {px},
        [px, ids, n_segments, e](TensorNode& self) {
            px->ensure_grad();
            std::vector<double> dot(n_segments, 0.0);
            for (int i = 0; i < e; ++i) dot[(*ids)[i]] += self.grad[i] * self.value[i];
            for (int i = 0; i < e; ++i)
                px->grad[i] += self.value[i] * (self.grad[i] - dot[(*ids)[i]]);
        },
        "segment_softmax");
}

Tensor segment_sum_rows(const Tensor& rows, const std::vector<int>& seg, int n_segments) {
    require_2d(rows, "segment_sum_rows");
    const int e = rows.rows(), d = rows.cols();
    if (static_cast<int>(seg.size()) != e) throw ShapeMismatch("segment_sum_rows ids length");
    std::vector<std::vector<int>> members(n_segments);
    for (int i = 0; i < e; ++i) {
        if (seg[i] < 0 || seg[i] >= n_segments) throw IndexOutOfRange("segment id " + std::to_string(seg[i]));
        members[seg[i]].push_back(i);
    }
    std::vector<double> out(static_cast<size_t>(n_segments) * d, 0.0);
    std::vector<double> buf;
    for (int s = 0; s < n_segments; ++s) {
        if (members[s].empty()) continue;
        for (int j = 0; j < d; ++j) {
            buf.clear();
            for (int i : members[s]) buf.push_back(rows.data()[static_cast<size_t>(i) * d + j]);
            out[static_cast<size_t>(s) * d + j] = canonical_sum(buf);
        }
    }
    auto node = make_node({n_segments, d}, std::move(out));
    if (!any_requires_grad({&rows})) {
        check_finite(*node, "segment_sum_rows");
        return Tensor(std::move(node));
    }
    auto pr = rows.node;
    auto ids = std::make_shared<std::vector<int>>(seg);
    return finish(
        node, {pr},
        [pr, ids, d](TensorNode& self) {
            pr->ensure_grad();
            for (size_t i = 0; i < ids->size(); ++i)
                for (int j = 0; j < d; ++j)
                    pr->grad[i * d + j] += self.grad[static_cast<size_t>((*ids)[i]) * d + j];
        },
        "segment_sum_rows");
}

Tensor mean_rows(const Tensor& m, const std::vector<int>& idx) {
    require_2d(m, "mean_rows");
    if (idx.empty()) throw ShapeMismatch("mean_rows over zero rows");
    const int n = m.rows(), d = m.cols();
    const double inv = 1.0 / static_cast<double>(idx.size());
    std::vector<double> out(d, 0.0);
    std::vector<double> buf;
    for (int j = 0; j < d; ++j) {
        buf.clear();
        for (int i : idx) {
            if (i < 0 || i >= n) throw IndexOutOfRange("mean_rows row " + std::to_string(i));
            buf.push_back(m.data()[static_cast<size_t>(i) * d + j]);
        }
        out[j] = canonical_sum(buf) * inv;
    }
    auto node = make_node({1, d}, std::move(out));
    if (!any_requires_grad({&m})) {
        check_finite(*node, "mean_rows");
        return Tensor(std::move(node));
    }
    auto pm = m.node;
    auto ids = std::make_shared<std::vector<int>>(idx);
    return finish(
        node, {pm},
        [pm, ids, d, inv](TensorNode& self) {
            pm->ensure_grad();
            for (int i : *ids)
                for (int j = 0; j < d; ++j) pm->grad[static_cast<size_t>(i) * d + j] += self.grad[j] * inv;
        },
        "mean_rows");
}

Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& gold) {
    require_2d(logits, "cross_entropy_loss");
    const int b = logits.rows(), c = logits.cols();
    if (static_cast<int>(gold.size()) != b)
        throw ShapeMismatch("cross_entropy_loss gold count " + std::to_string(gold.size()));
    for (int g : gold)
        if (g < 0 || g >= c) throw IndexOutOfRange("gold class " + std::to_string(g) + " of " + std::to_string(c));
    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j) mx = std::max(mx, logits.at(i, j));
        double lse = 0.0;
        for (int j = 0; j < c; ++j) lse += std::exp(logits.at(i, j) - mx);
        total += mx + std::log(lse) - logits.at(i, gold[i]);
    }
    auto node = make_node({1}, {total / b});
    if (!any_requires_grad({&logits})) {
        check_finite(*node, "cross_entropy_loss");
        return Tensor(std::move(node));
    }
    auto px = logits.node;
    auto gl = std::make_shared<std::vector<int>>(gold);
    return finish(
        node, {px},
        [px, gl, b, c](TensorNode& self) {
            px->ensure_grad();
            const double g0 = self.grad[0] / b;
            for (int i = 0; i < b; ++i) {
                double mx = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < c; ++j) mx = std::max(mx, px->value[static_cast<size_t>(i) * c + j]);
                double lse = 0.0;
                for (int j = 0; j < c; ++j) lse += std::exp(px->value[static_cast<size_t>(i) * c + j] - mx);
                for (int j = 0; j < c; ++j) {
                    const double p = std::exp(px->value[static_cast<size_t>(i) * c + j] - mx) / lse;
                    px->grad[static_cast<size_t>(i) * c + j] += g0 * (p - (j == (*gl)[i] ? 1.0 : 0.0));
                }
            }
        },
        "cross_entropy_loss");
}

}  // namespace parsefuse

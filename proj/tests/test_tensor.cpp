#include <doctest.h>

#include <cmath>

#include "parsefuse/gradcheck.hpp"
#include "parsefuse/optimizer.hpp"
#include "parsefuse/tensor.hpp"

using namespace parsefuse;

namespace {

struct FiniteChecksGuard {
    FiniteChecksGuard() { set_finite_checks(true); }
    ~FiniteChecksGuard() { set_finite_checks(false); }
};

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false, double scale = 1.0) {
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = rng.uniform(-scale, scale);
    return Tensor::from(std::move(shape), std::move(data), requires_grad);
}

// Keeps |values| away from zero so gradient checks never straddle a ReLU kink.
Tensor random_tensor_off_kink(Shape shape, Rng& rng, bool requires_grad = false) {
    std::vector<double> data(shape_size(shape));
    for (double& v : data) {
        v = rng.uniform(0.2, 1.0);
        if (rng.bernoulli(0.5)) v = -v;
    }
    return Tensor::from(std::move(shape), std::move(data), requires_grad);
}

double check_op_gradients(const std::function<Tensor()>& forward, std::vector<Parameter*> params) {
    for (Parameter* p : params) p->tensor.zero_grad();
    {
        Tape tape;
        Tensor loss = sum_all(forward());
        tape.backward(loss);
    }
    auto numeric = finite_difference_gradients([&] { return sum_all(forward()).scalar_value(); },
                                               params);
    return max_relative_gradient_error(params, numeric);
}

}  // namespace

TEST_CASE("masked_softmax matches closed forms") {
    FiniteChecksGuard guard;
    SUBCASE("symmetric pair") {
        Tensor y = masked_softmax(Tensor::from({1, 2}, {1.0, 1.0}), {1, 1});
        CHECK(y.data()[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(y.data()[1] == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("0 vs ln 3") {
        Tensor y = masked_softmax(Tensor::from({1, 2}, {0.0, std::log(3.0)}), {1, 1});
        CHECK(y.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(y.data()[1] == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("single unmasked entry wins outright") {
        Tensor y = masked_softmax(Tensor::from({1, 2}, {5.0, 99.0}), {1, 0});
        CHECK(y.data()[0] == 1.0);
        CHECK(y.data()[1] == 0.0);
    }
    SUBCASE("empty row is an error") {
        CHECK_THROWS_AS(masked_softmax(Tensor::from({1, 2}, {1.0, 2.0}), {0, 0}), EmptyMaskRow);
    }
}

TEST_CASE("masked_softmax rows sum to one and shift invariance holds") {
    FiniteChecksGuard guard;
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int r = 1 + rng.uniform_int(4), c = 2 + rng.uniform_int(6);
        Tensor logits = random_tensor({r, c}, rng, false, 3.0);
        std::vector<uint8_t> mask(static_cast<size_t>(r) * c);
        for (int i = 0; i < r; ++i) {
            bool any = false;
            for (int j = 0; j < c; ++j) {
                mask[static_cast<size_t>(i) * c + j] = rng.bernoulli(0.6);
                any |= mask[static_cast<size_t>(i) * c + j] != 0;
            }
            if (!any) mask[static_cast<size_t>(i) * c + rng.uniform_int(c)] = 1;
        }
        Tensor y = masked_softmax(logits, mask);
        const double shift = rng.uniform(-5.0, 5.0);
        std::vector<double> shifted = logits.data();
        for (double& v : shifted) v += shift;
        Tensor y2 = masked_softmax(Tensor::from({r, c}, shifted), mask);
        for (int i = 0; i < r; ++i) {
            double sum = 0.0;
            for (int j = 0; j < c; ++j) {
                const size_t k = static_cast<size_t>(i) * c + j;
                sum += y.data()[k];
                if (!mask[k]) CHECK(y.data()[k] == 0.0);
                CHECK(std::fabs(y.data()[k] - y2.data()[k]) <= 1e-12);
            }
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("relu basics") {
    Tensor y = relu(Tensor::from({2}, {-1.0, 2.0}));
    CHECK(y.data()[0] == 0.0);
    CHECK(y.data()[1] == 2.0);
}

TEST_CASE("cross entropy closed forms") {
    SUBCASE("uniform logits") {
        Tensor loss = cross_entropy_loss(Tensor::from({1, 3}, {0.0, 0.0, 0.0}), {0});
        CHECK(loss.scalar_value() == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    }
    SUBCASE("confident correct logits, log-sum-exp oracle") {
        // -log softmax([10,-10,-10])[0] = log1p(2 e^{-20})
        const double expected = std::log1p(2.0 * std::exp(-20.0));
        Tensor loss = cross_entropy_loss(Tensor::from({1, 3}, {10.0, -10.0, -10.0}), {0});
        CHECK(loss.scalar_value() == doctest::Approx(expected).epsilon(1e-10));
        CHECK(loss.scalar_value() < 1e-8);
    }
    SUBCASE("batch of identical rows equals the single-row loss") {
        Tensor one = cross_entropy_loss(Tensor::from({1, 3}, {0.3, -0.2, 1.1}), {2});
        Tensor two = cross_entropy_loss(Tensor::from({2, 3}, {0.3, -0.2, 1.1, 0.3, -0.2, 1.1}), {2, 2});
        CHECK(two.scalar_value() == doctest::Approx(one.scalar_value()).epsilon(1e-15));
    }
    SUBCASE("gold index out of range") {
        CHECK_THROWS_AS(cross_entropy_loss(Tensor::from({1, 3}, {0.0, 0.0, 0.0}), {3}),
                        IndexOutOfRange);
    }
}

TEST_CASE("backward on sum(W x) matches finite differences and outer-product structure") {
    Rng rng(11);
    Parameter w{"w", random_tensor({3, 4}, rng, true), true};
    Tensor x = random_tensor({4, 2}, rng);

    auto forward = [&] { return matmul(w.tensor, x); };
    CHECK(check_op_gradients(forward, {&w}) < 1e-6);

    // dL/dW[i][k] = sum_j x[k][j]
    w.tensor.zero_grad();
    {
        Tape tape;
        tape.backward(sum_all(forward()));
    }
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 4; ++k) {
            double expect = 0.0;
            for (int j = 0; j < 2; ++j) expect += x.at(k, j);
            CHECK(w.tensor.grad()[static_cast<size_t>(i) * 4 + k] ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("backward leaves non-participating parameters at zero") {
    Rng rng(13);
    Parameter used{"used", random_tensor({2, 2}, rng, true), true};
    Parameter unused{"unused", random_tensor({2, 2}, rng, true), true};
    used.tensor.zero_grad();
    unused.tensor.zero_grad();
    Tape tape;
    Tensor loss = sum_all(mul(used.tensor, used.tensor));
    tape.backward(loss);
    for (double g : unused.tensor.grad()) CHECK(g == 0.0);
    bool any = false;
    for (double g : used.tensor.grad()) any |= g != 0.0;
    CHECK(any);
}

TEST_CASE("backward twice or detached loss are errors") {
    Rng rng(17);
    Parameter w{"w", random_tensor({2}, rng, true), true};
    SUBCASE("twice") {
        Tape tape;
        Tensor loss = sum_all(relu(Tensor::from({2}, {1.0, 2.0})));
        // relu of a constant does not require grad, so record something real
        Tensor loss2 = sum_all(mul(w.tensor, w.tensor));
        tape.backward(loss2);
        CHECK_THROWS_AS(tape.backward(loss2), BackwardAlreadyRun);
    }
    SUBCASE("loss from another tape") {
        Tensor loss = [&] {
            Tape inner;
            return sum_all(mul(w.tensor, w.tensor));
        }();
        Tape outer;
        CHECK_THROWS_AS(outer.backward(loss), DetachedGraph);
    }
    SUBCASE("loss never recorded") {
        Tape tape;
        CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0)), DetachedGraph);
    }
}

TEST_CASE("finite difference oracle sanity") {
    SUBCASE("theta^2 at 3") {
        Parameter theta{"t", Tensor::scalar(3.0, true), true};
        auto grads = finite_difference_gradients(
            [&] { return theta.tensor.data()[0] * theta.tensor.data()[0]; }, {&theta});
        CHECK(grads[0][0] == doctest::Approx(6.0).epsilon(1e-6));
    }
    SUBCASE("relu slope at 1") {
        Parameter theta{"t", Tensor::scalar(1.0, true), true};
        auto grads = finite_difference_gradients(
            [&] { return std::max(0.0, theta.tensor.data()[0]); }, {&theta});
        CHECK(grads[0][0] == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("gradients of every primitive agree with finite differences") {
    Rng rng(23);
    double worst = 0.0;

    {  // matmul + add + relu chain
        Parameter a{"a", random_tensor_off_kink({3, 4}, rng, true), true};
        Parameter b{"b", random_tensor_off_kink({4, 5}, rng, true), true};
        Parameter c{"c", random_tensor_off_kink({3, 5}, rng, true), true};
        worst = std::max(worst, check_op_gradients(
                                    [&] { return relu(add(matmul(a.tensor, b.tensor), c.tensor)); },
                                    {&a, &b, &c}));
    }
    {  // matmul_nt + matvec + leaky_relu
        Parameter a{"a", random_tensor_off_kink({4, 3}, rng, true), true};
        Parameter b{"b", random_tensor_off_kink({5, 3}, rng, true), true};
        Parameter v{"v", random_tensor_off_kink({5}, rng, true), true};
        worst = std::max(worst,
                         check_op_gradients(
                             [&] {
                                 Tensor m = leaky_relu(matmul_nt(a.tensor, b.tensor), 0.2);
                                 Tensor out = matvec(m, v.tensor);
                                 return out;
                             },
                             {&a, &b, &v}));
    }
    {  // concat axis 0 and 1, add_rowwise, scale_rows, mul
        Parameter a{"a", random_tensor_off_kink({2, 3}, rng, true), true};
        Parameter b{"b", random_tensor_off_kink({2, 3}, rng, true), true};
        Parameter r{"r", random_tensor_off_kink({6}, rng, true), true};
        Parameter s{"s", random_tensor_off_kink({4}, rng, true), true};
        worst = std::max(worst, check_op_gradients(
                                    [&] {
                                        Tensor wide = concat(1, {a.tensor, b.tensor});
                                        Tensor tall = concat(0, {wide, wide});
                                        Tensor biased = add_rowwise(tall, r.tensor);
                                        Tensor scaled = scale_rows(biased, s.tensor);
                                        return mul(scaled, scaled);
                                    },
                                    {&a, &b, &r, &s}));
    }
    {  // take_rows + segment ops + mean_rows
        Parameter table{"table", random_tensor_off_kink({5, 3}, rng, true), true};
        Parameter scores{"scores", random_tensor_off_kink({7}, rng, true), true};
        const std::vector<int> idx{0, 2, 4, 1, 1, 3, 0};
        const std::vector<int> seg{0, 0, 1, 1, 2, 2, 2};
        worst = std::max(worst, check_op_gradients(
                                    [&] {
                                        Tensor rows = take_rows(table.tensor, idx);
                                        Tensor alpha = segment_softmax(scores.tensor, seg, 3);
                                        Tensor agg = segment_sum_rows(scale_rows(rows, alpha), seg, 3);
                                        return mean_rows(agg, {0, 2});
                                    },
                                    {&table, &scores}));
    }
    {  // masked_softmax + cross entropy
        Parameter logits{"logits", random_tensor_off_kink({3, 4}, rng, true), true};
        const std::vector<uint8_t> mask{1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 0};
        worst = std::max(worst, check_op_gradients(
                                    [&] { return masked_softmax(logits.tensor, mask); }, {&logits}));
        Parameter ce{"ce", random_tensor_off_kink({4, 3}, rng, true), true};
        worst = std::max(worst, check_op_gradients(
                                    [&] { return cross_entropy_loss(ce.tensor, {0, 2, 1, 0}); },
                                    {&ce}));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("dropout semantics") {
    Rng rng(29);
    Tensor x = Tensor::from({4}, {1.0, 2.0, 3.0, 4.0});
    SUBCASE("identity when off") {
        Tensor y = dropout(x, 0.5, false, rng);
        CHECK(y.node.get() == x.node.get());
        Tensor z = dropout(x, 0.0, true, rng);
        CHECK(z.node.get() == x.node.get());
    }
    SUBCASE("kept entries scale by 1/(1-p)") {
        Rng fixed(31);
        Tensor y = dropout(x, 0.5, true, fixed);
        for (int i = 0; i < 4; ++i) {
            const double v = y.data()[i];
            CHECK((v == 0.0 || v == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-15)));
        }
        Rng fixed2(31);
        Tensor y2 = dropout(x, 0.5, true, fixed2);
        for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == y2.data()[i]);
    }
    SUBCASE("invalid rate") { CHECK_THROWS_AS(dropout(x, 1.0, true, rng), InvalidConfig); }
}

TEST_CASE("adamw reference behavior") {
    SUBCASE("zero gradient and zero decay leave parameters unchanged") {
        Parameter p{"p", Tensor::from({2}, {1.5, -0.5}, true), true};
        p.tensor.zero_grad();
        AdamW opt({&p}, {1e-2, 0.9, 0.999, 1e-8, 0.0});
        opt.step();
        CHECK(p.tensor.data()[0] == 1.5);
        CHECK(p.tensor.data()[1] == -0.5);
    }
    SUBCASE("first step matches the scalar reference") {
        // Reference: m=(1-b1)g, v=(1-b2)g^2, mhat=g, vhat=g^2,
        // theta -= lr*(g/(|g|+eps) + wd*theta)
        const double lr = 1e-3, wd = 0.01, g = 0.7, theta0 = 0.3, eps = 1e-8;
        Parameter p{"p", Tensor::from({1}, {theta0}, true), true};
        p.tensor.zero_grad();
        p.tensor.node->grad[0] = g;
        AdamW opt({&p}, {lr, 0.9, 0.999, eps, wd});
        opt.step();
        const double expected = theta0 - lr * (g / (std::sqrt(g * g) + eps) + wd * theta0);
        CHECK(p.tensor.data()[0] == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("ineligible parameter sees no decay") {
        Parameter p{"p", Tensor::from({1}, {2.0}, true), false};
        p.tensor.zero_grad();
        AdamW opt({&p}, {1e-2, 0.9, 0.999, 1e-8, 0.5});
        opt.step();
        CHECK(p.tensor.data()[0] == 2.0);
    }
    SUBCASE("eligible parameter with zero grad decays") {
        Parameter p{"p", Tensor::from({1}, {2.0}, true), true};
        p.tensor.zero_grad();
        AdamW opt({&p}, {1e-2, 0.9, 0.999, 1e-8, 0.5});
        opt.step();
        CHECK(p.tensor.data()[0] == doctest::Approx(2.0 - 1e-2 * 0.5 * 2.0).epsilon(1e-14));
    }
}

TEST_CASE("canonical_sum is order independent") {
    Rng rng(37);
    std::vector<double> values(40);
    for (double& v : values) v = rng.uniform(-10.0, 10.0);
    std::vector<double> a = values;
    std::vector<double> b = values;
    rng.shuffle(b);
    CHECK(canonical_sum(a) == canonical_sum(b));
}

TEST_CASE("identical seeds give identical streams") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng fa = Rng(5).fork("x"), fb = Rng(5).fork("x"), fc = Rng(5).fork("y");
    CHECK(fa.next_u64() == fb.next_u64());
    CHECK(fa.next_u64() != fc.next_u64());
}

TEST_CASE("finite checks flag traps NaN") {
    FiniteChecksGuard guard;
    Tensor inf = Tensor::from({1}, {1e308});
    CHECK_THROWS_AS(mul(inf, inf), NonFiniteValue);
}

#include <doctest.h>

#include "oracles.hpp"
#include "samgcnn/grad_check.hpp"
#include "samgcnn/tape.hpp"

using namespace samgcnn;
using NodeRef = Tape<double>::NodeRef;

namespace {

// Finite-difference check of d(loss)/d(input) for a single-input graph.
template <typename BuildLoss>
void check_input_grad(const Tensor<double>& x0, BuildLoss build, double tol = 1e-5,
                      double h = 1e-5) {
    Tensor<double> x = x0;
    Tape<double> tape;
    NodeRef leaf = tape.leaf(x);
    NodeRef loss = build(tape, leaf);
    tape.backward(loss);
    Eigen::ArrayXd ad = leaf->grad;

    for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto eval = [&](double delta) {
            Tensor<double> xp = x0;
            xp[i] += delta;
            Tape<double> t2;
            NodeRef l2 = build(t2, t2.leaf(xp));
            return l2->value[0];
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        CHECK(ad[i] == doctest::Approx(fd).epsilon(tol).scale(1.0));
    }
}

}  // namespace

TEST_CASE("conv2d: Table-2 stem shape 40x501x1 * [40,5,1,64] valid -> 1x497x64") {
    Tape<double> tape;
    auto x = tape.leaf(Tensor<double>({40, 501, 1}));
    auto k = tape.leaf(Tensor<double>({40, 5, 1, 64}));
    auto b = tape.leaf(Tensor<double>({64}));
    auto y = tape.conv2d(x, k, b, Padding::kValid);
    CHECK(y->value.shape == std::vector<int>{1, 497, 64});
}

TEST_CASE("conv2d: 1x1 identity kernel with zero bias is identity") {
    std::mt19937_64 rng(1);
    Tensor<double> x = oracles::random_tensor({3, 4, 1}, rng);
    Tensor<double> k({1, 1, 1, 1});
    k[0] = 1.0;
    Tape<double> tape;
    auto y = tape.conv2d(tape.leaf(x), tape.leaf(k), tape.leaf(Tensor<double>({1})),
                         Padding::kValid);
    CHECK((y->value.values - x.values).abs().maxCoeff() == 0.0);
}

TEST_CASE("conv2d matches the quadruple-loop oracle, valid and same") {
    std::mt19937_64 rng(2);
    Tensor<double> x = oracles::random_tensor({3, 4, 2}, rng);
    Tensor<double> k = oracles::random_tensor({2, 2, 2, 3}, rng);
    Tensor<double> b = oracles::random_tensor({3}, rng);
    for (bool same : {false, true}) {
        Tape<double> tape;
        auto y = tape.conv2d(tape.leaf(x), tape.leaf(k), tape.leaf(b),
                             same ? Padding::kSame : Padding::kValid);
        Tensor<double> ref = oracles::conv2d_naive(x, k, b, same);
        CHECK(y->value.shape == ref.shape);
        CHECK((y->value.values - ref.values).abs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("conv2d rejects kernels larger than the input") {
    Tape<double> tape;
    auto x = tape.leaf(Tensor<double>({2, 2, 1}));
    auto k = tape.leaf(Tensor<double>({3, 3, 1, 1}));
    auto b = tape.leaf(Tensor<double>({1}));
    CHECK_THROWS_AS(tape.conv2d(x, k, b, Padding::kValid), ShapeError);
}

TEST_CASE("conv2d gradient vs finite differences") {
    std::mt19937_64 rng(3);
    Tensor<double> x0 = oracles::random_tensor({3, 5, 2}, rng);
    Tensor<double> k = oracles::random_tensor({2, 3, 2, 2}, rng);
    Tensor<double> b = oracles::random_tensor({2}, rng);
    check_input_grad(x0, [&](Tape<double>& t, NodeRef x) {
        return t.sum_all(t.sigmoid(t.conv2d(x, t.leaf(k), t.leaf(b), Padding::kSame)));
    });
}

TEST_CASE("dense: 10x64 * 64x9 -> 10x9 and identity case") {
    Tape<double> tape;
    auto x = tape.leaf(Tensor<double>({10, 64}));
    auto w = tape.leaf(Tensor<double>({64, 9}));
    auto b = tape.leaf(Tensor<double>({9}));
    CHECK(tape.dense(x, w, b)->value.shape == std::vector<int>{10, 9});

    std::mt19937_64 rng(4);
    Tensor<double> xin = oracles::random_tensor({5, 4}, rng);
    Tensor<double> ident({4, 4});
    for (int i = 0; i < 4; ++i) ident[i * 4 + i] = 1.0;
    Tape<double> t2;
    auto y = t2.dense(t2.leaf(xin), t2.leaf(ident), t2.leaf(Tensor<double>({4})));
    CHECK((y->value.values - xin.values).abs().maxCoeff() == 0.0);
}

TEST_CASE("dense matches the double-loop matmul oracle") {
    std::mt19937_64 rng(5);
    Tensor<double> x = oracles::random_tensor({7, 4}, rng);
    Tensor<double> w = oracles::random_tensor({4, 6}, rng);
    Tensor<double> b = oracles::random_tensor({6}, rng);
    Tape<double> tape;
    auto y = tape.dense(tape.leaf(x), tape.leaf(w), tape.leaf(b));
    Eigen::MatrixXd ref = oracles::matmul_naive(x.matrix(7, 4), w.matrix(4, 6));
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK(y->value[i * 6 + j] == doctest::Approx(ref(i, j) + b[j]).epsilon(1e-10));

    Tape<double> bad;
    CHECK_THROWS_AS(bad.dense(bad.leaf(x), bad.leaf(oracles::random_tensor({5, 6}, rng)),
                              bad.leaf(b)),
                    ShapeError);
}

TEST_CASE("batch_norm train mode standardizes per channel") {
    std::mt19937_64 rng(6);
    Tensor<double> x = oracles::random_tensor({4, 6, 3}, rng, 2.5);
    BatchNormState<double> state(3);
    Tensor<double> gamma({3});
    gamma.values.setOnes();
    Tensor<double> beta({3});
    Tape<double> tape;
    auto y = tape.batch_norm(tape.leaf(x), tape.leaf(gamma), tape.leaf(beta), state,
                             Mode::kTrain);
    for (int c = 0; c < 3; ++c) {
        double sum = 0, ss = 0;
        for (int p = 0; p < 24; ++p) {
            const double v = y->value[p * 3 + c];
            sum += v;
            ss += v * v;
        }
        CHECK(std::abs(sum / 24) < 1e-6);
        CHECK(std::abs(ss / 24 - 1.0) < 1e-4);  // epsilon shifts variance slightly
    }
}

TEST_CASE("batch_norm infer mode with unit running stats") {
    Tensor<double> x({2, 1, 2});
    x.values << 1.0, -2.0, 0.5, 3.0;
    BatchNormState<double> state(2);
    Tensor<double> gamma({2});
    gamma.values.setOnes();
    Tensor<double> beta({2});
    Tape<double> tape;
    auto y = tape.batch_norm(tape.leaf(x), tape.leaf(gamma), tape.leaf(beta), state,
                             Mode::kInfer);
    const double scale = 1.0 / std::sqrt(1.0 + state.epsilon);
    CHECK((y->value.values - x.values * scale).abs().maxCoeff() < 1e-12);
}

TEST_CASE("batch_norm matches a scalar-formula oracle") {
    std::mt19937_64 rng(7);
    Tensor<double> x = oracles::random_tensor({5, 2, 2}, rng);
    Tensor<double> gamma = oracles::random_tensor({2}, rng);
    Tensor<double> beta = oracles::random_tensor({2}, rng);
    BatchNormState<double> state(2);
    Tape<double> tape;
    auto y = tape.batch_norm(tape.leaf(x), tape.leaf(gamma), tape.leaf(beta), state,
                             Mode::kTrain);
    for (int c = 0; c < 2; ++c) {
        double mean = 0;
        for (int p = 0; p < 10; ++p) mean += x[p * 2 + c];
        mean /= 10;
        double var = 0;
        for (int p = 0; p < 10; ++p) var += (x[p * 2 + c] - mean) * (x[p * 2 + c] - mean);
        var /= 10;
        for (int p = 0; p < 10; ++p) {
            const double ref =
                gamma[c] * (x[p * 2 + c] - mean) / std::sqrt(var + state.epsilon) + beta[c];
            CHECK(y->value[p * 2 + c] == doctest::Approx(ref).epsilon(1e-9));
        }
        // Running stats updated with momentum 0.9 from (0, 1).
        CHECK(state.running_mean.values[c] == doctest::Approx(0.1 * mean).epsilon(1e-9));
        CHECK(state.running_var.values[c] == doctest::Approx(0.9 + 0.1 * var).epsilon(1e-9));
    }
}

TEST_CASE("batch_norm gradient vs finite differences") {
    std::mt19937_64 rng(8);
    Tensor<double> x0 = oracles::random_tensor({6, 1, 2}, rng);
    Tensor<double> gamma = oracles::random_tensor({2}, rng);
    Tensor<double> beta = oracles::random_tensor({2}, rng);
    check_input_grad(
        x0,
        [&](Tape<double>& t, NodeRef x) {
            BatchNormState<double> state(2);
            return t.sum_all(
                t.sigmoid(t.batch_norm(x, t.leaf(gamma), t.leaf(beta), state, Mode::kTrain)));
        },
        1e-4);
}

TEST_CASE("relu and sigmoid basics") {
    Tensor<double> x({3});
    x.values << -1.0, 0.0, 2.0;
    Tape<double> tape;
    auto r = tape.relu(tape.leaf(x));
    CHECK(r->value[0] == 0.0);
    CHECK(r->value[2] == 2.0);
    auto s = tape.sigmoid(tape.leaf(x));
    CHECK(s->value[1] == doctest::Approx(0.5));
}

TEST_CASE("sigmoid gradient at 0 is 0.25, by finite differences") {
    Tensor<double> x({1});
    check_input_grad(x, [](Tape<double>& t, NodeRef in) { return t.sum_all(t.sigmoid(in)); },
                     1e-6);
    Tape<double> tape;
    auto leaf = tape.leaf(x);
    auto loss = tape.sum_all(tape.sigmoid(leaf));
    tape.backward(loss);
    CHECK(leaf->grad[0] == doctest::Approx(0.25));
}

TEST_CASE("dropout contract") {
    std::mt19937_64 rng(9);
    Tensor<double> x = oracles::random_tensor({4, 4}, rng);
    Tape<double> tape;
    auto a = tape.dropout(tape.leaf(x), 0.0, Mode::kTrain, rng);
    CHECK((a->value.values - x.values).abs().maxCoeff() == 0.0);
    auto b = tape.dropout(tape.leaf(x), 0.7, Mode::kInfer, rng);
    CHECK((b->value.values - x.values).abs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(tape.dropout(tape.leaf(x), 1.0, Mode::kTrain, rng), ConfigError);
}

TEST_CASE("dropout train mean preserved within 1% at rate 0.2 over 1e6 elements") {
    std::mt19937_64 rng(10);
    Tensor<double> ones({1000000});
    ones.values.setOnes();
    Tape<double> tape;
    auto y = tape.dropout(tape.leaf(ones), 0.2, Mode::kTrain, rng);
    CHECK(y->value.values.mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("max_pool: Table-2 widths 497/5 valid -> 99 and 99/10 same -> 10") {
    Tape<double> tape;
    auto a = tape.max_pool(tape.leaf(Tensor<double>({1, 497, 64})), 5, Padding::kValid);
    CHECK(a->value.shape == std::vector<int>{1, 99, 64});
    auto b = tape.max_pool(tape.leaf(Tensor<double>({1, 99, 64})), 10, Padding::kSame);
    CHECK(b->value.shape == std::vector<int>{1, 10, 64});
    CHECK_THROWS_AS(tape.max_pool(tape.leaf(Tensor<double>({1, 9, 1})), 0, Padding::kValid),
                    ConfigError);
}

TEST_CASE("max_pool gradient routes to the window argmax, away from ties") {
    std::mt19937_64 rng(11);
    Tensor<double> x0 = oracles::random_tensor({1, 12, 2}, rng);  // ties a.s. absent
    check_input_grad(x0, [](Tape<double>& t, NodeRef x) {
        return t.sum_all(t.sigmoid(t.max_pool(x, 5, Padding::kSame)));
    });
}

TEST_CASE("avg_pool values: constant input, hand case, loop oracle") {
    Tensor<double> c({1, 10, 1});
    c.values.setConstant(3.5);
    Tape<double> tape;
    auto y = tape.avg_pool(tape.leaf(c), 3, Padding::kSame);
    CHECK(y->value.shape == std::vector<int>{1, 4, 1});
    CHECK((y->value.values - 3.5).abs().maxCoeff() < 1e-15);  // remainder window unpolluted

    Tensor<double> v({1, 4, 1});
    v.values << 1, 2, 3, 4;
    auto z = tape.avg_pool(tape.leaf(v), 2, Padding::kValid);
    CHECK(z->value[0] == doctest::Approx(1.5));
    CHECK(z->value[1] == doctest::Approx(3.5));

    std::mt19937_64 rng(12);
    Tensor<double> x = oracles::random_tensor({2, 11, 3}, rng);
    auto w = tape.avg_pool(tape.leaf(x), 4, Padding::kSame);
    for (int h = 0; h < 2; ++h)
        for (int o = 0; o < 3; ++o)
            for (int ch = 0; ch < 3; ++ch) {
                double sum = 0;
                int n = 0;
                for (int i = o * 4; i < std::min((o + 1) * 4, 11); ++i) {
                    sum += x[(h * 11 + i) * 3 + ch];
                    ++n;
                }
                CHECK(w->value[(h * 3 + o) * 3 + ch] ==
                      doctest::Approx(sum / n).epsilon(1e-12));
            }
}

TEST_CASE("avg_pool gradient vs finite differences") {
    std::mt19937_64 rng(13);
    Tensor<double> x0 = oracles::random_tensor({1, 11, 2}, rng);
    check_input_grad(x0, [](Tape<double>& t, NodeRef x) {
        return t.sum_all(t.sigmoid(t.avg_pool(x, 4, Padding::kSame)));
    });
}

TEST_CASE("elementwise ops: identities, hand case, gradients") {
    std::mt19937_64 rng(14);
    Tensor<double> a = oracles::random_tensor({3, 3}, rng);
    Tensor<double> ones({3, 3});
    ones.values.setOnes();
    Tensor<double> zeros({3, 3});
    Tape<double> tape;
    CHECK((tape.elementwise_mul(tape.leaf(a), tape.leaf(ones))->value.values - a.values)
              .abs()
              .maxCoeff() == 0.0);
    CHECK((tape.add(tape.leaf(a), tape.leaf(zeros))->value.values - a.values)
              .abs()
              .maxCoeff() == 0.0);

    Tensor<double> u({2}), v({2});
    u.values << 2, 3;
    v.values << 4, 5;
    auto prod = tape.elementwise_mul(tape.leaf(u), tape.leaf(v));
    CHECK(prod->value[0] == 8.0);
    CHECK(prod->value[1] == 15.0);

    // d(sum(a*b))/da = b.
    Tensor<double> b = oracles::random_tensor({3, 3}, rng);
    Tape<double> t2;
    auto la = t2.leaf(a);
    auto loss = t2.sum_all(t2.elementwise_mul(la, t2.leaf(b)));
    t2.backward(loss);
    CHECK((la->grad - b.values).abs().maxCoeff() < 1e-12);
    check_input_grad(a, [&](Tape<double>& t, NodeRef x) {
        return t.sum_all(t.elementwise_mul(x, t.leaf(b)));
    });

    CHECK_THROWS_AS(tape.add(tape.leaf(a), tape.leaf(Tensor<double>({2, 2}))), ShapeError);
}

TEST_CASE("softmax: uniform input, normalization, combined CE gradient") {
    Tensor<double> uniform({5});
    uniform.values.setConstant(1.7);
    Tape<double> tape;
    auto y = tape.softmax(tape.leaf(uniform));
    CHECK((y->value.values - 0.2).abs().maxCoeff() < 1e-14);

    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor<double> logits = oracles::random_tensor({7}, rng, 3.0);
        Tape<double> t2;
        auto p = t2.softmax(t2.leaf(logits));
        CHECK(p->value.values.minCoeff() >= 0.0);
        CHECK(std::abs(p->value.values.sum() - 1.0) < 1e-12);
    }

    // d(CE(softmax(x), label))/dx = probs - onehot.
    Tensor<double> logits = oracles::random_tensor({6}, rng);
    const int label = 2;
    Tape<double> t3;
    auto leaf = t3.leaf(logits);
    auto probs = t3.softmax(leaf);
    auto loss = t3.cross_entropy(probs, label);
    t3.backward(loss);
    for (int i = 0; i < 6; ++i) {
        const double expected = probs->value[i] - (i == label ? 1.0 : 0.0);
        CHECK(leaf->grad[i] == doctest::Approx(expected).epsilon(1e-9));
    }
    check_input_grad(
        logits,
        [&](Tape<double>& t, NodeRef x) { return t.cross_entropy(t.softmax(x), label); },
        1e-5);

    CHECK_THROWS_AS(t3.cross_entropy(probs, 6), ShapeError);
}

TEST_CASE("backward: sum gives ones, sum of squares gives 2x, fan-out accumulates") {
    std::mt19937_64 rng(16);
    Tensor<double> x = oracles::random_tensor({4}, rng);
    {
        Tape<double> tape;
        auto leaf = tape.leaf(x);
        tape.backward(tape.sum_all(leaf));
        CHECK((leaf->grad - 1.0).abs().maxCoeff() < 1e-15);
    }
    {
        Tape<double> tape;
        auto leaf = tape.leaf(x);
        tape.backward(tape.sum_all(tape.elementwise_mul(leaf, leaf)));
        CHECK((leaf->grad - 2.0 * x.values).abs().maxCoeff() < 1e-12);
    }
    {
        Tape<double> tape;
        auto leaf = tape.leaf(x);
        tape.backward(tape.add(tape.sum_all(leaf), tape.sum_all(leaf)));
        CHECK((leaf->grad - 2.0).abs().maxCoeff() < 1e-15);
    }
    {
        Tape<double> tape;
        auto leaf = tape.leaf(x);
        CHECK_THROWS_AS(tape.backward(leaf), SamError);  // non-scalar loss
    }
}

TEST_CASE("transpose2d, crop_w, slice_channels, sum_last, reshape round trips") {
    std::mt19937_64 rng(17);
    Tensor<double> x = oracles::random_tensor({3, 5}, rng);
    Tape<double> tape;
    auto t = tape.transpose2d(tape.leaf(x));
    CHECK(t->value.shape == std::vector<int>{5, 3});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) CHECK(t->value[j * 3 + i] == x[i * 5 + j]);

    Tensor<double> img = oracles::random_tensor({2, 6, 3}, rng);
    auto cropped = tape.crop_w(tape.leaf(img), 4);
    CHECK(cropped->value.shape == std::vector<int>{2, 4, 3});
    CHECK(cropped->value[0] == img[0]);
    CHECK(cropped->value[(1 * 4 + 3) * 3 + 2] == img[(1 * 6 + 3) * 3 + 2]);

    auto sliced = tape.slice_channels(tape.leaf(img), 1, 3);
    CHECK(sliced->value.shape == std::vector<int>{2, 6, 2});
    CHECK(sliced->value[0] == img[1]);

    auto summed = tape.sum_last(tape.leaf(x));
    CHECK(summed->value.shape == std::vector<int>{3});
    CHECK(summed->value[0] == doctest::Approx(x.values.segment(0, 5).sum()));

    check_input_grad(img, [](Tape<double>& t2, NodeRef in) {
        auto a = t2.crop_w(in, 4);
        auto b = t2.slice_channels(a, 0, 2);
        return t2.sum_all(t2.sigmoid(t2.transpose2d(t2.reshape(b, {4, 4}))));
    });
}

TEST_CASE("attention_fuse values and gradient") {
    std::mt19937_64 rng(18);
    Tensor<double> scores = oracles::random_tensor({4, 3}, rng);
    Tensor<double> weights = oracles::random_tensor({4}, rng);
    Tape<double> tape;
    auto y = tape.attention_fuse(tape.leaf(scores), tape.leaf(weights));
    for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int n = 0; n < 4; ++n) acc += weights[n] * scores[n * 3 + c];
        CHECK(y->value[c] == doctest::Approx(acc / 4.0).epsilon(1e-12));
    }
    check_input_grad(scores, [&](Tape<double>& t, NodeRef x) {
        return t.sum_all(t.sigmoid(t.attention_fuse(x, t.leaf(weights))));
    });
    check_input_grad(weights, [&](Tape<double>& t, NodeRef w) {
        return t.sum_all(t.sigmoid(t.attention_fuse(t.leaf(scores), w)));
    });
}

TEST_CASE("shape algebra: randomized valid conv/pool output sizes") {
    std::mt19937_64 rng(19);
    std::uniform_int_distribution<int> dim(6, 20), kdim(1, 5);
    for (int trial = 0; trial < 20; ++trial) {
        const int h = dim(rng), w = dim(rng);
        const int kh = std::min(kdim(rng), h), kw = std::min(kdim(rng), w);
        Tape<double> tape;
        auto y = tape.conv2d(tape.leaf(Tensor<double>({h, w, 1})),
                             tape.leaf(Tensor<double>({kh, kw, 1, 2})),
                             tape.leaf(Tensor<double>({2})), Padding::kValid);
        CHECK(y->value.shape == std::vector<int>{h - kh + 1, w - kw + 1, 2});
        const int k = kdim(rng);
        auto p = tape.max_pool(tape.leaf(Tensor<double>({1, w, 3})), k, Padding::kValid);
        CHECK(p->value.dim(1) == w / k);
        auto q = tape.avg_pool(tape.leaf(Tensor<double>({1, w, 3})), k, Padding::kSame);
        CHECK(q->value.dim(1) == (w + k - 1) / k);
    }
}

TEST_CASE("determinism: fixed seed gives bit-identical forward and backward") {
    auto run = [] {
        std::mt19937_64 rng(77);
        Tensor<double> x = oracles::random_tensor({1, 20, 4}, rng);
        Tape<double> tape;
        auto leaf = tape.leaf(x);
        auto d = tape.dropout(leaf, 0.3, Mode::kTrain, rng);
        auto loss = tape.sum_all(tape.sigmoid(d));
        tape.backward(loss);
        return std::pair{loss->value[0], Eigen::ArrayXd(leaf->grad)};
    };
    auto [l1, g1] = run();
    auto [l2, g2] = run();
    CHECK(l1 == l2);
    CHECK((g1 - g2).abs().maxCoeff() == 0.0);
}

TEST_CASE("grad_check harness: linear function agrees to rounding") {
    std::mt19937_64 rng(20);
    ParamSet<double> params;
    params.add("w", oracles::random_tensor({5}, rng));
    Tensor<double> coeffs = oracles::random_tensor({5}, rng);
    auto loss_fn = [&] {
        double acc = 0;
        for (int i = 0; i < 5; ++i) acc += coeffs[i] * params.value("w")[i];
        return acc;
    };
    auto grad_fn = [&] {
        params.zero_grads();
        for (int i = 0; i < 5; ++i) params.grad("w")[i] = coeffs[i];
        return loss_fn();
    };
    auto result = grad_check(params, loss_fn, grad_fn);
    CHECK(result.pass(1e-6));
}

TEST_CASE("grad_check harness: ReLU kink coordinates excluded, not failed") {
    ParamSet<double> params;
    Tensor<double> w({2});
    // First coordinate sits inside the finite-difference step of the kink,
    // where the h and h/2 estimates visibly disagree.
    w.values << 2.5e-5, 1.0;
    params.add("w", w);
    auto loss_fn = [&] {
        return std::max(0.0, params.value("w")[0]) + std::max(0.0, params.value("w")[1]);
    };
    auto grad_fn = [&] {
        params.zero_grads();
        params.grad("w")[0] = params.value("w")[0] > 0 ? 1.0 : 0.0;
        params.grad("w")[1] = params.value("w")[1] > 0 ? 1.0 : 0.0;
        return loss_fn();
    };
    auto result = grad_check(params, loss_fn, grad_fn);
    CHECK(result.pass(1e-6));
    CHECK(result.total_excluded == 1);
    CHECK(result.total_checked == 1);
}

TEST_CASE("randomized op-level grad_check at 1e-4 via the tape") {
    std::mt19937_64 seed_rng(21);
    for (int trial = 0; trial < 3; ++trial) {
        const uint64_t data_seed = seed_rng();
        std::mt19937_64 rng(data_seed);
        ParamSet<double> params;
        params.add("k", oracles::random_tensor({2, 3, 2, 4}, rng, 0.5));
        params.add("b", oracles::random_tensor({4}, rng, 0.1));
        params.add("w", oracles::random_tensor({4, 3}, rng, 0.5));
        Tensor<double> input = oracles::random_tensor({4, 9, 2}, rng);

        auto build = [&](bool want_grads) {
            Tape<double> tape;
            auto k = tape.leaf(params.value("k"));
            auto b = tape.leaf(params.value("b"));
            auto w = tape.leaf(params.value("w"));
            auto x = tape.conv2d(tape.leaf(input), k, b, Padding::kSame);
            x = tape.avg_pool(x, 3, Padding::kSame);
            x = tape.dense(x, w, tape.leaf(Tensor<double>({3})));
            auto loss = tape.sum_all(tape.sigmoid(x));
            if (want_grads) {
                tape.backward(loss);
                params.grad("k").values = k->grad;
                params.grad("b").values = b->grad;
                params.grad("w").values = w->grad;
            }
            return loss->value[0];
        };
        auto result = grad_check(
            params, [&] { return build(false); },
            [&] {
                params.zero_grads();
                return build(true);
            });
        CHECK(result.pass(1e-4));
    }
}

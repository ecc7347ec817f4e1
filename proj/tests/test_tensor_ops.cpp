#include "core/nn_ops.hpp"
#include "core/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace syq;

TEST_CASE("conv2d identity kernel") {
    Tensor4 x(1, 1, 1, 1);
    x.data[0] = 5.0;
    Tensor4 w(1, 1, 1, 1);
    w.data[0] = 1.0;
    const Tensor4 y = conv2d_forward(x, w, 1, 0);
    CHECK(y.size() == 1);
    CHECK(y.data[0] == 5.0);
}

TEST_CASE("conv2d zero input stays zero") {
    Tensor4 x(2, 3, 5, 5);
    Tensor4 w(4, 3, 3, 3);
    Rng rng(11);
    test::fill_uniform(w.data, rng, -1.0, 1.0);
    const Tensor4 y = conv2d_forward(x, w, 1, 1);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d 2x2 diagonal kernel hand case") {
    Tensor4 x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    Tensor4 w(1, 1, 2, 2);
    w.data = {1, 0, 0, 1};
    const Tensor4 y = conv2d_forward(x, w, 1, 0);
    CHECK(y.size() == 1);
    CHECK(y.data[0] == 5.0);
}

TEST_CASE("conv2d equals the naive six-loop oracle exactly") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const int b = 1 + int(rng.below(2));
        const int c = 1 + int(rng.below(4));
        const int n = 1 + int(rng.below(4));
        const int k = 1 + int(rng.below(3));
        const int f = k + int(rng.below(static_cast<uint64_t>(9 - k)));
        const int stride = 1 + int(rng.below(2));
        const int pad = int(rng.below(2));
        Tensor4 x(b, c, f, f), w(n, c, k, k);
        test::fill_uniform(x.data, rng, -2.0, 2.0);
        test::fill_uniform(w.data, rng, -2.0, 2.0);

        const Tensor4 got = conv2d_forward(x, w, stride, pad);
        const Tensor4 want = test::naive_conv2d(x, w, stride, pad);
        REQUIRE(got.same_shape(want));
        for (int64_t i = 0; i < got.size(); ++i) REQUIRE(got.data[i] == want.data[i]);
    }
}

TEST_CASE("conv2d rejects channel mismatch naming both shapes") {
    Tensor4 x(1, 3, 4, 4), w(2, 4, 3, 3);
    CHECK_THROWS_WITH_AS(conv2d_forward(x, w, 1, 0),
                         doctest::Contains("1x3x4x4"), std::invalid_argument);
}

TEST_CASE("conv2d output spatial size follows floor((F+2p-K)/s)+1") {
    Tensor4 x(1, 1, 7, 7), w(1, 1, 3, 3);
    const Tensor4 y = conv2d_forward(x, w, 2, 1);
    CHECK(y.h == 4);
    CHECK(y.w == 4);
}

TEST_CASE("conv2d backward zero upstream gradient") {
    Rng rng(5);
    Tensor4 x(1, 2, 4, 4), w(3, 2, 3, 3);
    test::fill_uniform(x.data, rng, -1.0, 1.0);
    test::fill_uniform(w.data, rng, -1.0, 1.0);
    Conv2dCache cache;
    const Tensor4 y = conv2d_forward(x, w, 1, 1, &cache);
    Tensor4 gy(y.n, y.c, y.h, y.w);
    const auto [gx, gw] = conv2d_backward(gy, cache);
    for (double v : gx.data) CHECK(v == 0.0);
    for (double v : gw.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d backward identity map passes the gradient through") {
    Tensor4 x(1, 1, 3, 3), w(1, 1, 1, 1);
    Rng rng(6);
    test::fill_uniform(x.data, rng, -1.0, 1.0);
    w.data[0] = 1.0;
    Conv2dCache cache;
    conv2d_forward(x, w, 1, 0, &cache);
    Tensor4 gy(1, 1, 3, 3);
    test::fill_uniform(gy.data, rng, -1.0, 1.0);
    const auto [gx, gw] = conv2d_backward(gy, cache);
    for (int64_t i = 0; i < gx.size(); ++i) CHECK(gx.data[i] == gy.data[i]);
    (void)gw;
}

TEST_CASE("conv2d backward rejects a mismatched cache") {
    Tensor4 x(1, 1, 4, 4), w(1, 1, 3, 3);
    Conv2dCache cache;
    conv2d_forward(x, w, 1, 0, &cache);
    Tensor4 bad(1, 1, 3, 3);
    bad.data.assign(bad.data.size(), 0.0);
    Tensor4 wrong(1, 2, 2, 2);
    CHECK_THROWS_AS(conv2d_backward(wrong, cache), std::invalid_argument);
}

TEST_CASE("conv2d gradients match central finite differences") {
    Rng rng(7);
    Tensor4 x(2, 2, 5, 5), w(3, 2, 3, 3);
    test::fill_uniform(x.data, rng, -1.0, 1.0);
    test::fill_uniform(w.data, rng, -1.0, 1.0);
    Tensor4 proj;   // random projection defines the scalar loss
    {
        Conv2dCache c0;
        const Tensor4 y = conv2d_forward(x, w, 2, 1, &c0);
        proj = Tensor4(y.n, y.c, y.h, y.w);
        test::fill_uniform(proj.data, rng, -1.0, 1.0);
    }

    auto loss = [&] {
        const Tensor4 y = conv2d_forward(x, w, 2, 1);
        double s = 0.0;
        for (int64_t i = 0; i < y.size(); ++i) s += y.data[i] * proj.data[i];
        return s;
    };

    Conv2dCache cache;
    conv2d_forward(x, w, 2, 1, &cache);
    const auto [gx, gw] = conv2d_backward(proj, cache);

    CHECK(test::finite_diff_check(x.data, loss, gx.data) < 1e-6);
    CHECK(test::finite_diff_check(w.data, loss, gw.data) < 1e-6);
}

TEST_CASE("fc forward identity and zero weights") {
    Mat in(3, 2);
    Rng rng(8);
    test::fill_uniform(in.data, rng, -1.0, 1.0);
    Mat eye(3, 3);
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    const Mat out = fc_forward(in, eye);
    for (int64_t i = 0; i < in.size(); ++i) CHECK(out.data[i] == in.data[i]);

    Mat zero(4, 3);
    const Mat out2 = fc_forward(in, zero);
    for (double v : out2.data) CHECK(v == 0.0);
}

TEST_CASE("fc forward 2x2 hand case") {
    Mat w(2, 2);
    w.data = {1, 2, 3, 4};
    Mat in(2, 1);
    in.data = {1, 1};
    const Mat out = fc_forward(in, w);
    CHECK(out.at(0, 0) == 3.0);
    CHECK(out.at(1, 0) == 7.0);
}

TEST_CASE("fc matches the naive matmul oracle exactly") {
    Rng rng(9);
    Mat w(5, 7), in(7, 4);
    test::fill_uniform(w.data, rng, -1.0, 1.0);
    test::fill_uniform(in.data, rng, -1.0, 1.0);
    const Mat got = fc_forward(in, w);
    const Mat want = test::naive_matmul(w, in);
    for (int64_t i = 0; i < got.size(); ++i) CHECK(got.data[i] == want.data[i]);
}

TEST_CASE("fc gradients match central finite differences") {
    Rng rng(10);
    Mat w(4, 6), in(6, 3);
    test::fill_uniform(w.data, rng, -1.0, 1.0);
    test::fill_uniform(in.data, rng, -1.0, 1.0);
    Mat proj(4, 3);
    test::fill_uniform(proj.data, rng, -1.0, 1.0);

    auto loss = [&] {
        const Mat y = fc_forward(in, w);
        double s = 0.0;
        for (int64_t i = 0; i < y.size(); ++i) s += y.data[i] * proj.data[i];
        return s;
    };

    FcCache cache;
    fc_forward(in, w, &cache);
    const auto [gin, gw] = fc_backward(proj, cache);
    CHECK(test::finite_diff_check(in.data, loss, gin.data) < 1e-6);
    CHECK(test::finite_diff_check(w.data, loss, gw.data) < 1e-6);
}

TEST_CASE("batchnorm constant channel normalizes to zero") {
    Tensor4 x(3, 2, 2, 2);
    for (int64_t i = 0; i < x.size(); ++i) x.data[i] = 4.75;
    BatchNormParams p(2);
    const Tensor4 y = batchnorm_forward(x, p, true, kBnEps, 0.1);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("batchnorm keeps an already standardized input") {
    // two samples at +-1 per channel: zero mean, unit variance
    Tensor4 x(2, 1, 1, 1);
    x.data = {1.0, -1.0};
    BatchNormParams p(1);
    const Tensor4 y = batchnorm_forward(x, p, true, kBnEps, 0.1);
    CHECK(y.data[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(y.data[1] == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("batchnorm rejects a training batch of one") {
    Tensor4 x(1, 2, 3, 3);
    BatchNormParams p(2);
    CHECK_THROWS_AS(batchnorm_forward(x, p, true, kBnEps, 0.1), std::invalid_argument);
}

TEST_CASE("batchnorm inference uses running statistics") {
    Rng rng(12);
    Tensor4 x(4, 2, 3, 3);
    test::fill_uniform(x.data, rng, 0.0, 2.0);
    BatchNormParams p(2);
    for (int i = 0; i < 20; ++i) batchnorm_forward(x, p, true, kBnEps, 0.1);
    const Tensor4 y = batchnorm_forward(x, p, false, kBnEps, 0.1);
    // after repeated updates on the same batch the running stats converge to
    // the batch stats, so eval output matches training output closely
    const Tensor4 yt = batchnorm_forward(x, p, true, kBnEps, 0.1);
    for (int64_t i = 0; i < y.size(); ++i)
        CHECK(y.data[i] == doctest::Approx(yt.data[i]).epsilon(1e-2));
}

TEST_CASE("batchnorm gradients match central finite differences") {
    Rng rng(13);
    Tensor4 x(3, 2, 2, 2);
    test::fill_uniform(x.data, rng, -1.0, 1.0);
    BatchNormParams p(2);
    p.gamma = {1.3, 0.8};
    p.beta = {0.2, -0.4};
    Tensor4 proj(3, 2, 2, 2);
    test::fill_uniform(proj.data, rng, -1.0, 1.0);

    auto loss = [&] {
        BatchNormParams local = p;
        const Tensor4 y = batchnorm_forward(x, local, true, kBnEps, 0.1);
        double s = 0.0;
        for (int64_t i = 0; i < y.size(); ++i) s += y.data[i] * proj.data[i];
        return s;
    };

    BatchNormParams run = p;
    BatchNormCache cache;
    batchnorm_forward(x, run, true, kBnEps, 0.1, &cache);
    const BatchNormGrads g = batchnorm_backward(proj, x, p, cache);

    CHECK(test::finite_diff_check(x.data, loss, g.grad_input.data) < 1e-5);
    CHECK(test::finite_diff_check(p.gamma, loss, g.grad_gamma) < 1e-6);
    CHECK(test::finite_diff_check(p.beta, loss, g.grad_beta) < 1e-6);
}

TEST_CASE("softmax cross entropy uniform logits give ln C") {
    for (int classes : {2, 5, 10}) {
        Mat logits(classes, 3);
        for (int64_t i = 0; i < logits.size(); ++i) logits.data[i] = 0.7;
        const auto [loss, grad] = softmax_cross_entropy(logits, {0, 1, 0});
        CHECK(loss == doctest::Approx(std::log(double(classes))).epsilon(1e-12));
        for (int b = 0; b < grad.cols; ++b) {
            double col = 0.0;
            for (int c = 0; c < grad.rows; ++c) col += grad.at(c, b);
            CHECK(col == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax cross entropy vanishes with a dominant correct logit") {
    Mat logits(4, 1);
    logits.data = {40.0, 0.0, 0.0, 0.0};
    const auto [loss, grad] = softmax_cross_entropy(logits, {0});
    CHECK(loss < 1e-12);
    (void)grad;
}

TEST_CASE("softmax cross entropy matches the direct formula") {
    Rng rng(14);
    Mat logits(3, 5);
    test::fill_uniform(logits.data, rng, -2.0, 2.0);
    std::vector<int32_t> targets;
    for (int b = 0; b < 5; ++b) targets.push_back(int(rng.below(3)));

    const auto [loss, grad] = softmax_cross_entropy(logits, targets);

    double want = 0.0;
    for (int b = 0; b < 5; ++b) {
        double denom = 0.0;
        for (int c = 0; c < 3; ++c) denom += std::exp(logits.at(c, b));
        want += -std::log(std::exp(logits.at(targets[b], b)) / denom);
    }
    want /= 5.0;
    CHECK(loss == doctest::Approx(want).epsilon(1e-12));

    auto loss_only = [&] { return softmax_cross_entropy(logits, targets).first; };
    CHECK(test::finite_diff_check(logits.data, loss_only, grad.data) < 1e-6);
}

TEST_CASE("ops are pure: identical inputs give bit-identical outputs") {
    Rng rng(15);
    Tensor4 x(2, 3, 6, 6), w(4, 3, 3, 3);
    test::fill_uniform(x.data, rng, -1.0, 1.0);
    test::fill_uniform(w.data, rng, -1.0, 1.0);
    const Tensor4 a = conv2d_forward(x, w, 1, 1);
    const Tensor4 b = conv2d_forward(x, w, 1, 1);
    CHECK(a.data == b.data);
}

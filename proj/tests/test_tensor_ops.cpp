#include <doctest.h>

#include <cmath>

#include "fgl/ops.hpp"
#include "fgl/rng.hpp"

using namespace fgl;
using namespace fgl::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

}  // namespace

TEST_CASE("softmax of equal inputs is uniform") {
    PrecisionGuard g(Precision::f64);
    auto v = constant(Tensor({1, 2}, {0.0, 0.0}));
    auto s = softmax(v, 1);
    CHECK(s->value.data[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s->value.data[1] == doctest::Approx(0.5).epsilon(1e-12));

    for (double x : {-3.0, 0.0, 7.5}) {
        auto u = softmax(constant(Tensor({1, 3}, {x, x, x})), 1);
        for (double p : u->value.data) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax matches exp-normalize oracle in 64-bit") {
    PrecisionGuard g(Precision::f64);
    auto s = softmax(constant(Tensor({1, 3}, {1.0, 2.0, 3.0})), 1);
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    for (int i = 0; i < 3; ++i)
        CHECK(s->value.data[i] == doctest::Approx(std::exp(1.0 + i) / z).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to 1 and are shift invariant") {
    PrecisionGuard g(Precision::f64);
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = rng.uniform_int(1, 6), n = rng.uniform_int(2, 9);
        Tensor x = random_tensor({m, n}, rng, 3.0);
        auto s = softmax(constant(x), 1);
        for (int r = 0; r < m; ++r) {
            double sum = 0.0;
            for (int c = 0; c < n; ++c) sum += s->value.at(r, c);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
        Tensor shifted = x;
        const double c0 = rng.uniform(-5.0, 5.0);
        for (double& v : shifted.data) v += c0;
        auto s2 = softmax(constant(shifted), 1);
        for (std::size_t i = 0; i < s->value.data.size(); ++i)
            CHECK(s2->value.data[i] == doctest::Approx(s->value.data[i]).epsilon(1e-9));
    }
}

TEST_CASE("softmax axis out of range throws") {
    auto v = constant(Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
    CHECK_THROWS_AS(softmax(v, 2), ShapeError);
    CHECK_THROWS_AS(softmax(v, -1), ShapeError);
}

TEST_CASE("attention with a single key returns the value row") {
    PrecisionGuard g(Precision::f64);
    Rng rng(11);
    auto q = constant(random_tensor({3, 4}, rng));
    auto k = constant(random_tensor({1, 4}, rng));
    auto v = constant(Tensor({1, 2}, {0.25, -1.5}));
    auto out = scaled_dot_attention(q, k, v, 4);
    REQUIRE(out->value.shape == std::vector<int>{3, 2});
    for (int r = 0; r < 3; ++r) {
        CHECK(out->value.at(r, 0) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(out->value.at(r, 1) == doctest::Approx(-1.5).epsilon(1e-12));
    }
}

TEST_CASE("attention concentrates on the matching orthonormal key") {
    PrecisionGuard g(Precision::f64);
    const int d = 4;
    Tensor k = Tensor::zeros({d, d});
    for (int i = 0; i < d; ++i) k.at(i, i) = 1.0;  // orthonormal keys
    Tensor v = Tensor::zeros({d, 3});
    Rng rng(5);
    for (double& x : v.data) x = rng.normal();
    Tensor q = Tensor::zeros({1, d});
    q.at(0, 0) = 60.0;  // strongly aligned with key 0

    auto out = scaled_dot_attention(constant(q), constant(k), constant(v), d);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(out->value.at(0, c) - v.at(0, c)) < 1e-3);

    // direct high-precision evaluation of the same formula
    double logits[d], denom = 0.0;
    for (int i = 0; i < d; ++i) {
        logits[i] = q.at(0, i) * 1.0 / std::sqrt(static_cast<double>(d));
        denom += std::exp(logits[i] - 60.0 / std::sqrt(static_cast<double>(d)));
    }
    for (int c = 0; c < 3; ++c) {
        double expect = 0.0;
        for (int i = 0; i < d; ++i)
            expect += std::exp(logits[i] - 60.0 / std::sqrt(static_cast<double>(d))) / denom * v.at(i, c);
        CHECK(out->value.at(0, c) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("attention with identity values exposes the weights") {
    PrecisionGuard g(Precision::f64);
    Rng rng(13);
    const int pk = 5, d = 3;
    auto q = constant(random_tensor({2, d}, rng));
    auto k = constant(random_tensor({pk, d}, rng));
    Tensor eye = Tensor::zeros({pk, pk});
    for (int i = 0; i < pk; ++i) eye.at(i, i) = 1.0;
    auto out = scaled_dot_attention(q, k, constant(eye), d);
    for (int r = 0; r < 2; ++r) {
        double sum = 0.0;
        for (int c = 0; c < pk; ++c) {
            CHECK(out->value.at(r, c) >= 0.0);
            sum += out->value.at(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("attention shape errors") {
    Rng rng(3);
    auto q = constant(random_tensor({2, 4}, rng));
    auto k = constant(random_tensor({3, 5}, rng));
    auto v = constant(random_tensor({3, 2}, rng));
    CHECK_THROWS_AS(scaled_dot_attention(q, k, v, 4), ShapeError);
    auto k2 = constant(random_tensor({3, 4}, rng));
    auto v2 = constant(random_tensor({2, 2}, rng));
    CHECK_THROWS_AS(scaled_dot_attention(q, k2, v2, 4), ShapeError);
}

TEST_CASE("matmul matches a naive triple loop") {
    PrecisionGuard g(Precision::f64);
    Rng rng(17);
    Tensor a = random_tensor({3, 5}, rng), b = random_tensor({5, 2}, rng);
    auto c = matmul(constant(a), constant(b));
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
            CHECK(c->value.at(i, j) == doctest::Approx(s).epsilon(1e-12));
        }
    }
}

TEST_CASE("cross entropy equals -log softmax oracle") {
    PrecisionGuard g(Precision::f64);
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor logits = random_tensor({1, 2}, rng, 4.0);
        const int target = rng.uniform_int(0, 1);
        auto loss = cross_entropy_logits(constant(logits), target);
        const double z = std::exp(logits.data[0]) + std::exp(logits.data[1]);
        const double expect = -std::log(std::exp(logits.data[target]) / z);
        CHECK(std::abs(loss->value.data[0] - expect) < 1e-6);
    }
}

TEST_CASE("bilinear resize preserves constants and total mass direction") {
    PrecisionGuard g(Precision::f64);
    auto x = constant(Tensor::full({2, 4, 4}, 3.25));
    auto up = upsample_2x(x);
    REQUIRE(up->value.shape == std::vector<int>{2, 8, 8});
    for (double v : up->value.data) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("conv2d output shape and zero padding") {
    PrecisionGuard g(Precision::f64);
    Rng rng(29);
    auto x = constant(random_tensor({3, 6, 5}, rng));
    auto w = constant(random_tensor({2, 3, 3, 3}, rng));
    auto b = constant(Tensor::zeros({2}));
    auto y = conv2d_3x3(x, w, b);
    CHECK(y->value.shape == std::vector<int>{2, 6, 5});

    // all-ones kernel on an all-ones image counts the 3x3 in-bounds window
    auto x1 = constant(Tensor::full({1, 4, 4}, 1.0));
    auto w1 = constant(Tensor::full({1, 1, 3, 3}, 1.0));
    auto y1 = conv2d_3x3(x1, w1, constant(Tensor::zeros({1})));
    CHECK(y1->value.data[0] == doctest::Approx(4.0));   // corner
    CHECK(y1->value.data[1] == doctest::Approx(6.0));   // edge
    CHECK(y1->value.data[5] == doctest::Approx(9.0));   // interior
}

TEST_CASE("determinism: identical inputs give bit-identical outputs in 64-bit mode") {
    PrecisionGuard g(Precision::f64);
    Rng rng(31);
    Tensor x = random_tensor({4, 8}, rng);
    auto a = softmax(constant(x), 1);
    auto b = softmax(constant(x), 1);
    CHECK(a->value.data == b->value.data);
}

TEST_CASE("f32 mode rounds forward outputs to float") {
    PrecisionGuard g(Precision::f32);
    auto v = constant(Tensor({1, 1}, {0.1}));
    CHECK(v->value.data[0] == static_cast<double>(0.1f));
}

TEST_CASE("layer norm output has zero mean and unit variance per row") {
    PrecisionGuard g(Precision::f64);
    Rng rng(37);
    Tensor x = random_tensor({3, 16}, rng, 2.0);
    auto y = layer_norm(constant(x), constant(Tensor::full({16}, 1.0)), constant(Tensor::zeros({16})));
    for (int r = 0; r < 3; ++r) {
        double mu = 0.0, var = 0.0;
        for (int c = 0; c < 16; ++c) mu += y->value.at(r, c);
        mu /= 16;
        for (int c = 0; c < 16; ++c) var += (y->value.at(r, c) - mu) * (y->value.at(r, c) - mu);
        var /= 16;
        CHECK(std::abs(mu) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("frozen parameters receive exactly zero gradient") {
    PrecisionGuard g(Precision::f64);
    Params params;
    auto frozen = params.create("frozen_w", Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}), false);
    auto train = params.create("train_w", Tensor({2, 2}, {0.5, -0.5, 1.5, 0.25}), true);
    auto x = constant(Tensor({1, 2}, {1.0, -1.0}));
    auto loss = mean_all(matmul(matmul(x, frozen), train));
    params.zero_grad();
    backward(loss);
    for (double gv : frozen->ensure_grad().data) CHECK(gv == 0.0);
    bool any = false;
    for (double gv : train->ensure_grad().data) any = any || gv != 0.0;
    CHECK(any);
}

#include <doctest.h>

#include "fgl/gradcheck.hpp"
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

TEST_CASE("grad check passes for a linear layer with mean-square loss") {
    PrecisionGuard g(Precision::f64);
    Rng rng(41);
    Params params;
    auto w = params.create("w", random_tensor({4, 3}, rng, 0.5), true);
    auto b = params.create("b", random_tensor({3}, rng, 0.5), true);
    Tensor xval = random_tensor({5, 4}, rng);
    Tensor tval = random_tensor({5, 3}, rng);

    auto loss_fn = [&]() {
        auto y = linear(constant(xval), w, b);
        auto d = sub(y, constant(tval));
        return mean_all(mul(d, d));
    };
    auto report = grad_check(params, loss_fn);
    CHECK(report.pass);
    CHECK(report.max_relative_error <= 1e-4);
    CHECK(report.per_parameter.size() == 2);
}

TEST_CASE("grad check with all parameters frozen reports empty") {
    PrecisionGuard g(Precision::f64);
    Rng rng(43);
    Params params;
    auto w = params.create("w", random_tensor({2, 2}, rng), false);
    Tensor x = random_tensor({1, 2}, rng);
    auto loss_fn = [&]() { return mean_all(matmul(constant(x), w)); };
    auto report = grad_check(params, loss_fn);
    CHECK(report.per_parameter.empty());
    CHECK(report.pass);
    CHECK(report.max_relative_error == 0.0);
    for (double gv : w->ensure_grad().data) CHECK(gv == 0.0);
}

TEST_CASE("grad check through softmax, layer norm and attention") {
    PrecisionGuard g(Precision::f64);
    Rng rng(47);
    Params params;
    auto w1 = params.create("w1", random_tensor({6, 6}, rng, 0.2), true);
    auto gamma = params.create("gamma", Tensor::full({6}, 1.0), true);
    auto beta = params.create("beta", Tensor::zeros({6}), true);
    auto wq = params.create("wq", random_tensor({6, 4}, rng, 0.2), true);
    auto wk = params.create("wk", random_tensor({6, 4}, rng, 0.2), true);
    auto wv = params.create("wv", random_tensor({6, 5}, rng, 0.2), true);
    Tensor xval = random_tensor({7, 6}, rng, 0.6);
    Tensor readout = random_tensor({7, 5}, rng);
    Tensor readout2 = random_tensor({7, 6}, rng);

    auto loss_fn = [&]() {
        auto h = gelu(matmul(constant(xval), w1));
        h = layer_norm(h, gamma, beta);
        auto att = scaled_dot_attention(matmul(h, wq), matmul(h, wk), matmul(h, wv), 4);
        auto sm = softmax(h, 1);
        return add(mean_all(mul(att, constant(readout))), mean_all(mul(sm, constant(readout2))));
    };
    auto report = grad_check(params, loss_fn);
    CHECK(report.pass);
    CHECK(report.max_relative_error <= 1e-4);
}

TEST_CASE("grad check through conv, upsample and sigmoid") {
    PrecisionGuard g(Precision::f64);
    Rng rng(53);
    Params params;
    auto cw1 = params.create("cw1", random_tensor({3, 2, 3, 3}, rng, 0.3), true);
    auto cb1 = params.create("cb1", random_tensor({3}, rng, 0.1), true);
    auto cw2 = params.create("cw2", random_tensor({1, 3, 3, 3}, rng, 0.3), true);
    auto cb2 = params.create("cb2", random_tensor({1}, rng, 0.1), true);
    Tensor xval = random_tensor({2, 4, 4}, rng);

    auto loss_fn = [&]() {
        auto h = gelu(conv2d_3x3(constant(xval), cw1, cb1));
        h = upsample_2x(h);
        h = conv2d_3x3(h, cw2, cb2);
        h = resize_bilinear(h, 12, 12);
        return mean_all(sigmoid(h));
    };
    auto report = grad_check(params, loss_fn);
    CHECK(report.pass);
    CHECK(report.max_relative_error <= 1e-4);
}

TEST_CASE("grad check through shape ops and normalization") {
    PrecisionGuard g(Precision::f64);
    Rng rng(59);
    Params params;
    auto table = params.create("table", random_tensor({5, 4}, rng, 0.4), true);
    auto wa = params.create("wa", random_tensor({4, 4}, rng, 0.25), true);
    auto wb = params.create("wb", random_tensor({4, 2}, rng, 0.25), true);
    auto bias = params.create("bias", random_tensor({6}, rng, 0.1), true);

    auto loss_fn = [&]() {
        auto rows = select_rows(table, {0, 2, 4, 1});
        auto h = l2_normalize_rows(matmul(rows, wa));
        auto pieces = concat_cols({h, matmul(h, wb)});          // 4 x 6
        pieces = add_rowvec(pieces, bias);
        auto stacked = concat_rows({pieces, affine(pieces, -1.0, 0.5)});  // 8 x 6
        auto grid = rows_to_chw(slice_rows(stacked, 0, 4), 2, 2);
        auto both = concat_chw(grid, grid);
        auto flat = reshape(both, {12, 4});
        auto ratio = div(flat, affine(mul(flat, flat), 1.0, 1.0));
        return mean_all(ratio);
    };
    auto report = grad_check(params, loss_fn);
    CHECK(report.pass);
    CHECK(report.max_relative_error <= 1e-4);
}

TEST_CASE("grad check through cross entropy") {
    PrecisionGuard g(Precision::f64);
    Rng rng(61);
    Params params;
    auto w = params.create("w", random_tensor({3, 2}, rng, 0.5), true);
    Tensor xval = random_tensor({1, 3}, rng);
    auto loss_fn = [&]() { return cross_entropy_logits(matmul(constant(xval), w), 1); };
    auto report = grad_check(params, loss_fn);
    CHECK(report.pass);
}

TEST_CASE("grad check subsampling still reports every trainable parameter") {
    PrecisionGuard g(Precision::f64);
    Rng rng(67);
    Params params;
    auto w1 = params.create("w1", random_tensor({8, 8}, rng, 0.4), true);
    auto w2 = params.create("w2", random_tensor({8, 8}, rng, 0.4), true);
    params.create("frozen", random_tensor({4, 4}, rng), false);
    Tensor xval = random_tensor({3, 8}, rng);

    auto loss_fn = [&]() { return mean_all(gelu(matmul(gelu(matmul(constant(xval), w1)), w2))); };
    GradCheckOptions opts;
    opts.samples_per_param = 5;
    auto report = grad_check(params, loss_fn, opts);
    CHECK(report.per_parameter.size() == 2);
    for (const auto& e : report.per_parameter) CHECK(e.components_checked <= 5);
    CHECK(report.pass);
}

TEST_CASE("grad check rejects a non-scalar loss") {
    PrecisionGuard g(Precision::f64);
    Rng rng(71);
    Params params;
    auto w = params.create("w", random_tensor({2, 2}, rng), true);
    auto loss_fn = [&]() { return matmul(constant(random_tensor({1, 2}, rng)), w); };
    CHECK_THROWS_AS(grad_check(params, loss_fn), ContractError);
}

#include <cmath>
#include <functional>

#include "doctest.h"
#include "recast/nn/adam.h"
#include "recast/nn/layers.h"
#include "recast/nn/ops.h"
#include "recast/rng.h"

using namespace recast;
using nn::Array;
using nn::Tensor;

namespace {

Array<double> randn(Rng& rng, nn::Shape shape, double scale = 1.0) {
    Array<double> a(std::move(shape));
    for (int64_t i = 0; i < a.numel(); ++i) a[i] = rng.normal() * scale;
    return a;
}

// Central-difference gradient oracle: checks every coordinate of every
// differentiable leaf against the autograd result.
void gradcheck(std::vector<Tensor<double>> leaves,
               const std::function<Tensor<double>()>& loss_fn, double eps = 1e-5,
               double tol = 1e-7) {
    Tensor<double> loss = loss_fn();
    REQUIRE(loss.numel() == 1);
    loss.backward();
    std::vector<Array<double>> analytic;
    for (auto& leaf : leaves) {
        REQUIRE(leaf.has_grad());
        analytic.push_back(leaf.grad());
        leaf.zero_grad();
    }
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& leaf = leaves[li];
        for (int64_t i = 0; i < leaf.numel(); ++i) {
            double orig = leaf.val()[i];
            leaf.val()[i] = orig + eps;
            double lp = loss_fn().val()[0];
            leaf.val()[i] = orig - eps;
            double lm = loss_fn().val()[0];
            leaf.val()[i] = orig;
            double numeric = (lp - lm) / (2.0 * eps);
            double a = analytic[li][i];
            double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            CHECK_MESSAGE(std::abs(a - numeric) / denom < tol,
                          "leaf ", li, " coord ", i, ": analytic ", a, " numeric ", numeric);
        }
    }
}

// Projects an op output to a scalar with fixed random weights so every
// output coordinate participates in the loss.
Tensor<double> project(const Tensor<double>& out, Rng& rng) {
    Array<double> r(out.shape());
    for (int64_t i = 0; i < r.numel(); ++i) r[i] = rng.normal();
    return nn::sum_all(nn::mul(out, Tensor<double>::leaf(std::move(r))));
}

}  // namespace

TEST_CASE("elementwise op gradients") {
    Rng rng(1);
    auto a = Tensor<double>::leaf(randn(rng, {2, 3, 4}), true);
    auto b = Tensor<double>::leaf(randn(rng, {2, 3, 4}), true);
    Rng proj(2);

    gradcheck({a, b}, [&] {
        Rng p(2);
        return project(nn::add(nn::mul(a, b), nn::mul_scalar(nn::silu(a), 0.7)), p);
    });
    gradcheck({a, b}, [&] {
        Rng p(3);
        return project(nn::sub(a, nn::add_scalar(b, 0.3)), p);
    });
}

TEST_CASE("matmul and linear gradients") {
    Rng rng(5);
    auto a = Tensor<double>::leaf(randn(rng, {4, 6}), true);
    auto b = Tensor<double>::leaf(randn(rng, {6, 3}), true);
    gradcheck({a, b}, [&] {
        Rng p(7);
        return project(nn::matmul(a, b), p);
    });

    auto x = Tensor<double>::leaf(randn(rng, {2, 5, 6}), true);
    auto w = Tensor<double>::leaf(randn(rng, {4, 6}), true);
    auto bias = Tensor<double>::leaf(randn(rng, {4}), true);
    gradcheck({x, w, bias}, [&] {
        Rng p(8);
        return project(nn::linear(x, w, bias), p);
    });

    auto ba = Tensor<double>::leaf(randn(rng, {3, 4, 5}), true);
    auto bb = Tensor<double>::leaf(randn(rng, {3, 5, 2}), true);
    gradcheck({ba, bb}, [&] {
        Rng p(9);
        return project(nn::bmm(ba, bb), p);
    });
}

TEST_CASE("conv2d forward matches the direct convolution oracle") {
    Rng rng(11);
    for (auto [stride, pad] : {std::pair{1, 1}, {2, 1}, {1, 0}, {2, 0}}) {
        auto x = Tensor<double>::leaf(randn(rng, {2, 3, 8, 8}));
        auto w = Tensor<double>::leaf(randn(rng, {4, 3, 3, 3}));
        auto b = Tensor<double>::leaf(randn(rng, {4}));
        auto y = nn::conv2d(x, w, b, stride, pad);
        int Ho = (8 + 2 * pad - 3) / stride + 1;
        REQUIRE(y.shape() == nn::Shape({2, 4, Ho, Ho}));
        // direct six-loop convolution
        for (int n = 0; n < 2; ++n)
            for (int o = 0; o < 4; ++o)
                for (int oy = 0; oy < Ho; ++oy)
                    for (int ox = 0; ox < Ho; ++ox) {
                        double acc = b.val()[o];
                        for (int c = 0; c < 3; ++c)
                            for (int ky = 0; ky < 3; ++ky)
                                for (int kx = 0; kx < 3; ++kx) {
                                    int iy = oy * stride - pad + ky;
                                    int ix = ox * stride - pad + kx;
                                    if (iy < 0 || iy >= 8 || ix < 0 || ix >= 8) continue;
                                    acc += x.val().at4(n, c, iy, ix) * w.val().at4(o, c, ky, kx);
                                }
                        CHECK(y.val().at4(n, o, oy, ox) == doctest::Approx(acc).epsilon(1e-12));
                    }
    }
}

TEST_CASE("conv2d gradients") {
    Rng rng(13);
    for (auto [stride, pad] : {std::pair{1, 1}, {2, 1}}) {
        auto x = Tensor<double>::leaf(randn(rng, {2, 2, 6, 6}), true);
        auto w = Tensor<double>::leaf(randn(rng, {3, 2, 3, 3}), true);
        auto b = Tensor<double>::leaf(randn(rng, {3}), true);
        int s = stride, p = pad;
        gradcheck({x, w, b}, [&, s, p] {
            Rng pr(17);
            return project(nn::conv2d(x, w, b, s, p), pr);
        });
    }
}

TEST_CASE("group_norm gradients and statistics") {
    Rng rng(19);
    auto x = Tensor<double>::leaf(randn(rng, {2, 4, 3, 3}), true);
    auto gamma = Tensor<double>::leaf(randn(rng, {4}, 0.5), true);
    auto beta = Tensor<double>::leaf(randn(rng, {4}, 0.5), true);
    for (int64_t i = 0; i < gamma.numel(); ++i) gamma.val()[i] += 1.0;

    auto y = nn::group_norm(x, gamma, beta, 2);
    REQUIRE(y.shape() == x.shape());

    gradcheck({x, gamma, beta}, [&] {
        Rng p(23);
        return project(nn::group_norm(x, gamma, beta, 2), p);
    }, 1e-5, 1e-6);

    // unit gamma / zero beta => per-group mean 0 and var 1
    auto g1 = Tensor<double>::leaf(Array<double>({4}, std::vector<double>(4, 1.0)));
    auto b0 = Tensor<double>::leaf(Array<double>({4}));
    auto z = nn::group_norm(x, g1, b0, 2);
    for (int n = 0; n < 2; ++n)
        for (int g = 0; g < 2; ++g) {
            double mean = 0.0, var = 0.0;
            for (int ci = 0; ci < 2; ++ci)
                for (int i = 0; i < 9; ++i)
                    mean += z.val()[((n * 4 + g * 2 + ci) * 9) + i];
            mean /= 18.0;
            for (int ci = 0; ci < 2; ++ci)
                for (int i = 0; i < 9; ++i) {
                    double d = z.val()[((n * 4 + g * 2 + ci) * 9) + i] - mean;
                    var += d * d;
                }
            var /= 18.0;
            CHECK(std::abs(mean) < 1e-10);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
        }
}

TEST_CASE("softmax, shape ops, pooling gradients") {
    Rng rng(29);
    auto x = Tensor<double>::leaf(randn(rng, {3, 4, 5}), true);
    gradcheck({x}, [&] {
        Rng p(31);
        return project(nn::softmax_last(x), p);
    });

    auto y = Tensor<double>::leaf(randn(rng, {2, 3, 4, 4}), true);
    gradcheck({y}, [&] {
        Rng p(37);
        return project(nn::permute(nn::reshape(y, {2, 3, 16}), {2, 0, 1}), p);
    });
    gradcheck({y}, [&] {
        Rng p(41);
        return project(nn::upsample_nearest2(y), p);
    });
    gradcheck({y}, [&] {
        Rng p(43);
        return project(nn::avg_pool_to(y, 2, 2), p);
    });
    gradcheck({y}, [&] {
        Rng p(47);
        return project(nn::slice(y, 1, 1, 2), p);
    });

    auto z = Tensor<double>::leaf(randn(rng, {2, 2, 4, 4}), true);
    gradcheck({y, z}, [&] {
        Rng p(53);
        return project(nn::concat<double>({y, z}, 1), p);
    });

    auto bias = Tensor<double>::leaf(randn(rng, {3}), true);
    gradcheck({y, bias}, [&] {
        Rng p(59);
        return project(nn::add_channel_bias(y, bias), p);
    });

    auto tok = Tensor<double>::leaf(randn(rng, {5, 3}), true);
    gradcheck({tok}, [&] {
        Rng p(61);
        return project(nn::tile0(tok, 4), p);
    });
}

TEST_CASE("multi-head attention gradients (self and cross)") {
    Rng rng(67);
    nn::ParamStore<double> store;
    Rng init(68);
    auto mha = nn::MultiHeadAttention<double>::make(store, "attn", 8, 6, 2, init);
    auto x = Tensor<double>::leaf(randn(rng, {2, 5, 8}, 0.5), true);
    auto ctx = Tensor<double>::leaf(randn(rng, {2, 3, 6}, 0.5), true);

    std::vector<Tensor<double>> leaves = {x, ctx};
    for (auto& [name, p] : store.params) leaves.push_back(p);
    gradcheck(leaves, [&] {
        Rng p(71);
        return project(mha.forward(x, ctx), p);
    }, 1e-5, 1e-6);
}

TEST_CASE("grad mode and determinism") {
    Rng rng(73);
    auto x = Tensor<double>::leaf(randn(rng, {4, 4}), true);

    {
        nn::NoGradGuard guard;
        auto y = nn::mul(x, x);
        CHECK_FALSE(y.requires_grad());
    }
    auto y = nn::mul(x, x);
    CHECK(y.requires_grad());

    // identical inputs give bitwise-identical outputs
    Rng r1(99), r2(100), r3(99), r4(100);
    auto a = nn::conv2d(Tensor<double>::leaf(randn(r1, {2, 3, 8, 8})),
                        Tensor<double>::leaf(randn(r2, {4, 3, 3, 3})), Tensor<double>(), 1, 1);
    auto b = nn::conv2d(Tensor<double>::leaf(randn(r3, {2, 3, 8, 8})),
                        Tensor<double>::leaf(randn(r4, {4, 3, 3, 3})), Tensor<double>(), 1, 1);
    CHECK(a.val().data == b.val().data);
}

TEST_CASE("adam minimizes a quadratic deterministically") {
    auto run = [] {
        nn::ParamStore<float> store;
        Rng rng(7);
        auto w = store.create("w", {8}, nn::init_normal<float>(rng, 1.0));
        nn::Adam<float> opt;
        opt.lr = 0.05;
        float last = 0;
        for (int i = 0; i < 200; ++i) {
            store.zero_grads();
            auto loss = nn::mean_all(nn::mul(w, w));
            loss.backward();
            opt.step(store);
            last = loss.val()[0];
        }
        return std::pair{last, store.checksum()};
    };
    auto [l1, c1] = run();
    auto [l2, c2] = run();
    CHECK(l1 == l2);
    CHECK(c1 == c2);
    CHECK(l1 < 1e-3);
}

TEST_CASE("frozen parameters receive no updates") {
    nn::ParamStore<float> store;
    Rng rng(11);
    auto w = store.create("enc.w", {4}, nn::init_normal<float>(rng, 1.0));
    auto v = store.create("head.w", {4}, nn::init_normal<float>(rng, 1.0));
    store.set_trainable("enc.", false);
    uint32_t before = store.checksum("enc.");
    nn::Adam<float> opt;
    opt.lr = 0.1;
    for (int i = 0; i < 10; ++i) {
        store.zero_grads();
        auto loss = nn::mean_all(nn::mul(nn::add(w, v), nn::add(w, v)));
        loss.backward();
        opt.step(store);
    }
    CHECK(store.checksum("enc.") == before);
    CHECK(store.checksum("head.") != 0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.h"
#include "unitok/autograd.h"
#include "unitok/error.h"
#include "unitok/nn.h"

using namespace unitok;
using testutil::fd_check;
using testutil::random_tensor;

TEST_CASE("elementwise forward values") {
    Tape t;
    NodeId a = t.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    NodeId b = t.constant(Tensor({2, 2}, {10, 20, 30, 40}));
    REQUIRE(t.val(t.add(a, b)).data == std::vector<float>({11, 22, 33, 44}));
    REQUIRE(t.val(t.sub(b, a)).data == std::vector<float>({9, 18, 27, 36}));
    REQUIRE(t.val(t.mul(a, a)).data == std::vector<float>({1, 4, 9, 16}));
    REQUIRE(t.scalar(t.mean_all(a)) == doctest::Approx(2.5));
    REQUIRE(t.scalar(t.sum_all(a)) == doctest::Approx(10.0));
}

TEST_CASE("shape mismatch raises") {
    Tape t;
    NodeId a = t.constant(Tensor({2, 2}));
    NodeId b = t.constant(Tensor({2, 3}));
    REQUIRE_THROWS_AS((void)t.add(a, b), DataError);
    REQUIRE_THROWS_AS((void)t.mse(a, b), DataError);
}

TEST_CASE("finite differences: core op gradients") {
    Rng rng(3, "fd-core");
    auto check = [&](const testutil::LossFn& fn, std::vector<Tensor> inputs, double tol = 3e-3) {
        auto stats = fd_check(fn, inputs);
        CAPTURE(stats.worst);
        REQUIRE(stats.worst < tol);
    };

    check([](Tape& t, const std::vector<NodeId>& in) { return t.mse(in[0], in[1]); },
          {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});

    check([](Tape& t, const std::vector<NodeId>& in) { return t.l1(in[0], in[1]); },
          {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});

    check([](Tape& t, const std::vector<NodeId>& in) { return t.mean_all(t.matmul(in[0], in[1])); },
          {random_tensor(rng, {3, 5}), random_tensor(rng, {5, 4})});

    check([](Tape& t, const std::vector<NodeId>& in) { return t.mean_all(t.matmul_nt(in[0], in[1])); },
          {random_tensor(rng, {3, 5}), random_tensor(rng, {4, 5})});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mean_all(t.linear(in[0], in[1], in[2]));
          },
          {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 6}), random_tensor(rng, {6})});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mse(t.layernorm(in[0], in[1], in[2]), t.constant(Tensor({4, 6}, 0.3f)));
          },
          {random_tensor(rng, {4, 6}), random_tensor(rng, {6}, 0.5, 1.5), random_tensor(rng, {6})});

    check([](Tape& t, const std::vector<NodeId>& in) { return t.mean_all(t.gelu(in[0])); },
          {random_tensor(rng, {3, 4}, -2, 2)});

    check([](Tape& t, const std::vector<NodeId>& in) { return t.mean_all(t.tanh_(in[0])); },
          {random_tensor(rng, {3, 4}, -2, 2)});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mean_all(t.mul(t.sin_(in[0]), t.cos_(in[0])));
          },
          {random_tensor(rng, {3, 4}, -3, 3)});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mse(t.softmax_rows(in[0]), t.constant(Tensor({3, 5}, 0.2f)));
          },
          {random_tensor(rng, {3, 5}, -2, 2)});

    // keep FD probes away from the clamp/hinge kinks
    auto away_from = [](Tensor x, float kink, float margin) {
        for (auto& v : x.data)
            if (std::fabs(v - kink) < margin) v += 2 * margin;
        return x;
    };
    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mean_all(t.exp_clamped(in[0], 0.5f));
          },
          {away_from(random_tensor(rng, {3, 4}, -2, 2), 0.5f, 0.06f)});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mean_relu_affine(in[0], -1.0f, 1.0f);
          },
          {away_from(random_tensor(rng, {4, 4}, -2, 2), 1.0f, 0.06f)});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.cross_entropy(in[0], {0, 2, 1});
          },
          {random_tensor(rng, {3, 3}, -2, 2)});

    check([](Tape& t, const std::vector<NodeId>& in) {
            auto parts = std::vector<NodeId>{t.slice_cols(in[0], 0, 2), t.slice_cols(in[0], 2, 3)};
            return t.mean_all(t.mul(t.concat_cols(parts), in[0]));
          },
          {random_tensor(rng, {3, 5})});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mean_all(t.add_rowvec(in[0], in[1]));
          },
          {random_tensor(rng, {4, 3}), random_tensor(rng, {1, 3})});

    check([](Tape& t, const std::vector<NodeId>& in) {
            return t.mse(t.mean_rows(in[0]), t.constant(Tensor({1, 4}, 0.1f)));
          },
          {random_tensor(rng, {5, 4})});
}

TEST_CASE("exp_clamped saturates value and gradient") {
    Tape t;
    NodeId x = t.input(Tensor({1, 2}, {5.0f, -1.0f}));
    NodeId y = t.exp_clamped(x, 1.0f);
    REQUIRE(t.val(y).data[0] == doctest::Approx(std::exp(1.0)));
    REQUIRE(t.val(y).data[1] == doctest::Approx(std::exp(-1.0)));
    NodeId loss = t.sum_all(y);
    t.backward(loss);
    REQUIRE(t.grad_buf(x).data[0] == 0.0f);  // clamped region: zero grad
    REQUIRE(t.grad_buf(x).data[1] == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("leaf gradient accumulation into Param") {
    Param p;
    p.init_shape("w", {2, 2});
    p.w.data = {1, 2, 3, 4};
    Tape t;
    NodeId w = t.leaf(p);
    NodeId loss = t.mse(w, t.constant(Tensor({2, 2}, 0.0f)));
    t.backward(loss);
    t.accumulate_leaf_grads();
    // d/dw mean(w^2) = 2w/4
    REQUIRE(p.g.data[0] == doctest::Approx(0.5));
    REQUIRE(p.g.data[3] == doctest::Approx(2.0));
    // leaf() caches: same node for repeated use
    REQUIRE(t.leaf(p) == w);
}

TEST_CASE("detach blocks gradients") {
    Tape t;
    Tensor x({2, 2}, {1, 2, 3, 4});
    NodeId a = t.input(x);
    NodeId d = t.detach(a);
    REQUIRE(!t.needs_grad(d));
    NodeId loss = t.mse(d, t.constant(Tensor({2, 2}, 0.0f)));
    REQUIRE(!t.needs_grad(loss));
}

TEST_CASE("transformer block gradcheck") {
    Rng rng(5, "fd-tblock");
    nn::TransformerBlock block;
    block.init(rng, "blk", 8, 2, 2.0f);
    std::vector<Param*> params;
    block.collect(params);

    auto stats = fd_check(
        [&](Tape& t, const std::vector<NodeId>& in) {
            NodeId y = block.forward(t, in[0]);
            return t.mse(y, t.constant(Tensor({4, 8}, 0.05f)));
        },
        {random_tensor(rng, {4, 8})}, 2e-2);
    CAPTURE(stats.worst);
    // composed float32 forward: slightly looser bars than the per-op checks
    REQUIRE(stats.frac_below(2e-3) >= 0.95);
    REQUIRE(stats.worst < 1e-2);
}

TEST_CASE("mha attends: output differs when keys permuted") {
    Rng rng(6, "mha");
    nn::MultiHeadAttention mha;
    mha.init(rng, "mha", 8, 2);
    Tensor x = random_tensor(rng, {5, 8});
    Tape t;
    NodeId y = mha.forward(t, t.constant(x));
    REQUIRE(t.val(y).shape == std::vector<int>({5, 8}));
    // changing the content of row 0 must change the output at other rows
    Tensor xp = x;
    for (int j = 0; j < 8; ++j) xp.data[std::size_t(j)] += 0.5f;
    Tape t2;
    NodeId y2 = mha.forward(t2, t2.constant(xp));
    double diff = 0;
    for (int j = 0; j < 8; ++j)
        diff += std::fabs(double(t.val(y).data[std::size_t(16 + j)]) -
                          double(t2.val(y2).data[std::size_t(16 + j)]));
    REQUIRE(diff > 1e-6);
}

TEST_CASE("dwconv1d: forward oracle and gradcheck") {
    Rng rng(9, "dwconv");
    // forward vs direct scalar loop
    Tensor x = random_tensor(rng, {6, 3});
    Tensor w = random_tensor(rng, {5, 3});
    Tensor b = random_tensor(rng, {3});
    {
        Tape t;
        NodeId y = nn::dwconv1d(t, t.constant(x), t.constant(w), t.constant(b));
        for (int i = 0; i < 6; ++i)
            for (int c = 0; c < 3; ++c) {
                double acc = b.data[std::size_t(c)];
                for (int k = 0; k < 5; ++k) {
                    const int src = i + k - 2;
                    if (src < 0 || src >= 6) continue;
                    acc += double(w.data[std::size_t(k * 3 + c)]) * x.data[std::size_t(src * 3 + c)];
                }
                REQUIRE(t.val(y).data[std::size_t(i * 3 + c)] == doctest::Approx(acc).epsilon(1e-5));
            }
    }
    auto stats = fd_check(
        [](Tape& t, const std::vector<NodeId>& in) {
            return t.mse(nn::dwconv1d(t, in[0], in[1], in[2]), t.constant(Tensor({6, 3}, 0.1f)));
        },
        {x, w, b});
    REQUIRE(stats.worst < 3e-3);
}

TEST_CASE("conv1d_transpose_x2: length contract, oracle, gradcheck") {
    Rng rng(10, "convT");
    Tensor x = random_tensor(rng, {5, 3});
    Tensor w = random_tensor(rng, {4, 3, 2});
    Tensor b = random_tensor(rng, {2});
    Tape t;
    NodeId y = nn::conv1d_transpose_x2(t, t.constant(x), t.constant(w), t.constant(b));
    REQUIRE(t.val(y).shape == std::vector<int>({10, 2}));
    // oracle: out[o] = b + sum_i x[i] . W[o - 2i + 1]
    for (int o = 0; o < 10; ++o)
        for (int co = 0; co < 2; ++co) {
            double acc = b.data[std::size_t(co)];
            for (int i = 0; i < 5; ++i) {
                const int k = o - 2 * i + 1;
                if (k < 0 || k >= 4) continue;
                for (int ci = 0; ci < 3; ++ci)
                    acc += double(x.data[std::size_t(i * 3 + ci)]) *
                           w.data[std::size_t((k * 3 + ci) * 2 + co)];
            }
            REQUIRE(t.val(y).data[std::size_t(o * 2 + co)] == doctest::Approx(acc).epsilon(1e-5));
        }
    auto stats = fd_check(
        [](Tape& t2, const std::vector<NodeId>& in) {
            return t2.mse(nn::conv1d_transpose_x2(t2, in[0], in[1], in[2]),
                          t2.constant(Tensor({10, 2}, -0.2f)));
        },
        {x, w, b});
    REQUIRE(stats.worst < 3e-3);
}

TEST_CASE("conv2d via im2col: shape and gradcheck") {
    Rng rng(11, "conv2d");
    Tensor x = random_tensor(rng, {5, 6, 2});   // (h, w, c)
    Tensor w = random_tensor(rng, {3 * 3 * 2, 4});
    Tensor b = random_tensor(rng, {4});
    Tape t;
    NodeId cols = nn::im2col(t, t.constant(x), 3, 3, 2, 2, 1, 1);
    NodeId y = t.linear(cols, t.constant(w), t.constant(b));
    REQUIRE(t.val(cols).shape == std::vector<int>({3 * 3, 18}));
    REQUIRE(t.val(y).shape == std::vector<int>({9, 4}));
    auto stats = fd_check(
        [](Tape& t2, const std::vector<NodeId>& in) {
            NodeId c2 = nn::im2col(t2, in[0], 3, 3, 2, 2, 1, 1);
            return t2.mse(t2.linear(c2, in[1], in[2]), t2.constant(Tensor({9, 4}, 0.0f)));
        },
        {x, w, b});
    REQUIRE(stats.worst < 3e-3);
}

TEST_CASE("adamw: converges on a quadratic and decays weights") {
    Param p;
    p.init_shape("w", {4});
    p.w.data = {1.0f, -2.0f, 3.0f, 0.5f};
    std::vector<Param*> ps = {&p};
    nn::AdamW opt;
    opt.weight_decay = 0.0;
    opt.init(ps);
    for (int i = 0; i < 400; ++i) {
        Tape t;
        NodeId w = t.leaf(p);
        NodeId loss = t.mse(w, t.constant(Tensor({4}, 0.25f)));
        t.backward(loss);
        nn::zero_grads(ps);
        t.accumulate_leaf_grads();
        opt.update(ps, 0.05);
    }
    for (float v : p.w.data) REQUIRE(v == doctest::Approx(0.25).epsilon(1e-3));
}

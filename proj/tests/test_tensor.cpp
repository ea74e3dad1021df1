#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "typoflow/kernels.hpp"
#include "typoflow/rng.hpp"
#include "typoflow/tensor.hpp"

using namespace typoflow;

TEST_CASE("softmax of equal logits is uniform") {
    Tensor x = Tensor::from({3}, {0, 0, 0});
    Tensor y = softmax_lastdim(x);
    for (int i = 0; i < 3; ++i) CHECK(y.at({i}) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("softmax rows are stochastic and in range") {
    Rng rng(7);
    Tensor x = Tensor::randn({5, 9}, rng, 3.f);
    Tensor y = softmax_lastdim(x);
    for (int r = 0; r < 5; ++r) {
        float s = 0.f;
        for (int j = 0; j < 9; ++j) {
            const float v = y.at({r, j});
            CHECK(v >= 0.f);
            CHECK(v <= 1.f);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("matmul identity and hand arithmetic") {
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor a = Tensor::from({2, 2}, {3.5f, -2.f, 0.25f, 9.f});
    Tensor r = matmul(eye, a);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(r.at({i, j}) == a.at({i, j}));
    Tensor b = Tensor::from({2, 1}, {5, 6});
    Tensor c = matmul(Tensor::from({2, 2}, {1, 2, 3, 4}), b);
    CHECK(c.at({0, 0}) == 17.f);
    CHECK(c.at({1, 0}) == 39.f);
}

TEST_CASE("matmul shape mismatch names the kind and shapes") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({2, 3});
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("matmul") != std::string::npos);
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("backward of sum_sq") {
    Tensor x = Tensor::from({1}, {3.f});
    x.set_requires_grad(true);
    Tensor loss = sum_sq(x);
    backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(6.f));
    CHECK(graph_size() == 0);
}

TEST_CASE("loss independent of a tensor leaves zero grad") {
    Tensor x = Tensor::from({2}, {1.f, 2.f});
    x.set_requires_grad(true);
    Tensor z = Tensor::from({2}, {4.f, 5.f});
    z.set_requires_grad(true);
    Tensor unused = mul(x, Tensor::scalar(2.f));  // recorded, but not part of loss
    Tensor loss = sum_sq(z);
    backward(loss);
    REQUIRE(x.has_grad());
    CHECK(x.grad()[0] == 0.f);
    CHECK(x.grad()[1] == 0.f);
    CHECK(z.grad()[0] == doctest::Approx(8.f));
    (void)unused;
}

TEST_CASE("backward rejects non-scalar loss and empty graph") {
    Tensor x = Tensor::zeros({2});
    x.set_requires_grad(true);
    Tensor y = add(x, x);
    CHECK_THROWS_AS(backward(y), ShapeError);
    clear_graph();
    Tensor s = Tensor::scalar(1.f);
    CHECK_THROWS_AS(backward(s), ShapeError);
}

TEST_CASE("GradPause suppresses recording") {
    Tensor x = Tensor::zeros({4});
    x.set_requires_grad(true);
    {
        GradPause pause;
        Tensor y = gelu(x);
        CHECK(!y.requires_grad());
    }
    CHECK(graph_size() == 0);
}

TEST_CASE("grad_check on sum_sq is exact to second order") {
    Rng rng(11);
    Tensor x = Tensor::randn({6}, rng);
    const double err = grad_check([](const Tensor& t) { return sum_sq(t); }, x, 1e-4);
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check on constant softmax-sum is near zero") {
    Rng rng(12);
    Tensor x = Tensor::randn({3, 5}, rng);
    const double err = grad_check(
        [](const Tensor& t) { return scale(mean_all(softmax_lastdim(t)), 15.f); }, x, 1e-4);
    CHECK(err < 1e-6);
}

TEST_CASE("3-layer MLP gradients match central differences") {
    Rng rng(99);
    Tensor w1 = Tensor::randn({4, 8}, rng, 0.5f);
    Tensor w2 = Tensor::randn({8, 8}, rng, 0.5f);
    Tensor w3 = Tensor::randn({8, 2}, rng, 0.5f);
    Tensor x = Tensor::randn({1, 4}, rng);

    auto net = [&](const Tensor& in, const Tensor& a, const Tensor& b, const Tensor& c) {
        Tensor h = gelu(matmul(in, a));
        h = gelu(matmul(h, b));
        return sum_sq(matmul(h, c));
    };

    const double ex = grad_check([&](const Tensor& t) { return net(t, w1, w2, w3); }, x, 1e-4);
    CHECK(ex < 1e-4);
    const double ew2 = grad_check([&](const Tensor& t) { return net(x, w1, t, w3); }, w2, 1e-4);
    CHECK(ew2 < 1e-4);
}

TEST_CASE("grad_check over every op kind on randomized shapes") {
    Rng rng(0xabcdef);
    Tensor a23 = Tensor::randn({2, 3}, rng);
    Tensor b34 = Tensor::randn({3, 4}, rng);
    Tensor b23 = Tensor::randn({2, 3}, rng);
    Tensor v3 = Tensor::randn({3}, rng);
    Tensor g3 = Tensor::randn({3}, rng, 0.3f);
    Tensor nt = Tensor::randn({5, 3}, rng);

    struct Case {
        const char* name;
        std::function<Tensor(const Tensor&)> f;
        Tensor x;
    };
    std::vector<Case> cases = {
        {"matmul lhs", [&](const Tensor& t) { return sum_sq(matmul(t, b34)); }, a23},
        {"matmul rhs", [&](const Tensor& t) { return sum_sq(matmul(a23, t)); }, b34},
        {"matmul_nt lhs", [&](const Tensor& t) { return sum_sq(matmul_nt(t, nt)); }, a23},
        {"matmul_nt rhs", [&](const Tensor& t) { return sum_sq(matmul_nt(a23, t)); }, nt},
        {"add", [&](const Tensor& t) { return sum_sq(add(t, b23)); }, a23},
        {"add scalar", [&](const Tensor& t) { return sum_sq(add(t, Tensor::scalar(0.7f))); }, a23},
        {"sub", [&](const Tensor& t) { return sum_sq(sub(b23, t)); }, a23},
        {"mul", [&](const Tensor& t) { return sum_sq(mul(t, b23)); }, a23},
        {"mul scalar side", [&](const Tensor& t) { return sum_sq(mul(b23, t)); }, Tensor::randn({1}, rng)},
        {"add_rowvec x", [&](const Tensor& t) { return sum_sq(add_rowvec(t, v3)); }, a23},
        {"add_rowvec v", [&](const Tensor& t) { return sum_sq(add_rowvec(a23, t)); }, v3},
        {"mul_rowvec x", [&](const Tensor& t) { return sum_sq(mul_rowvec(t, v3)); }, a23},
        {"mul_rowvec v", [&](const Tensor& t) { return sum_sq(mul_rowvec(a23, t)); }, v3},
        {"scale", [&](const Tensor& t) { return sum_sq(scale(t, -1.3f)); }, a23},
        {"softmax", [&](const Tensor& t) { return sum_sq(softmax_lastdim(t)); }, a23},
        {"rmsnorm x", [&](const Tensor& t) { return sum_sq(rmsnorm(t, g3)); }, a23},
        {"rmsnorm gain", [&](const Tensor& t) { return sum_sq(rmsnorm(a23, t)); }, g3},
        {"gelu", [&](const Tensor& t) { return sum_sq(gelu(t)); }, a23},
        {"concat_lastdim", [&](const Tensor& t) { return sum_sq(concat_lastdim(t, b23)); }, a23},
        {"slice", [&](const Tensor& t) { return sum_sq(slice_lastdim(t, 1, 2)); }, a23},
        {"reshape", [&](const Tensor& t) { return sum_sq(reshape(t, {3, 2})); }, a23},
        {"mean", [&](const Tensor& t) { return mean_all(t); }, a23},
        {"sum_sq", [&](const Tensor& t) { return sum_sq(t); }, a23},
        {"concat_rows", [&](const Tensor& t) { return sum_sq(concat_rows(t, b23)); }, a23},
        {"slice_rows", [&](const Tensor& t) { return sum_sq(slice_rows(t, 1, 1)); }, a23},
    };
    for (auto& c : cases) {
        const double err = grad_check(c.f, c.x, 1e-4);
        INFO(c.name);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("embed_rows gathers and routes gradients to the right tables") {
    Tensor base = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor ctrl = Tensor::from({2, 2}, {10, 11, 12, 13});
    base.set_requires_grad(true);
    ctrl.set_requires_grad(true);
    Tensor out = embed_rows(base, ctrl, {0, 3, 1});
    CHECK(out.at({0, 0}) == 1.f);
    CHECK(out.at({1, 0}) == 10.f);
    CHECK(out.at({2, 1}) == 4.f);
    Tensor loss = sum_sq(out);
    backward(loss);
    CHECK(base.grad()[0] == doctest::Approx(2.f));   // row 0 used once
    CHECK(base.grad()[4] == doctest::Approx(0.f));   // row 2 unused
    CHECK(ctrl.grad()[0] == doctest::Approx(20.f));  // ctrl row 0 used
    CHECK(ctrl.grad()[2] == doctest::Approx(0.f));   // ctrl row 1 unused
}

TEST_CASE("op_forward dispatches the documented kinds") {
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from({2, 2}, {5, 6, 7, 8});
    CHECK(op_forward(OpKind::Add, {a, b}).at({0, 0}) == 6.f);
    CHECK(op_forward(OpKind::Matmul, {a, b}).at({0, 0}) == 19.f);
    CHECK(op_forward(OpKind::Reshape, {a}, {4}).rank() == 1);
    CHECK(op_forward(OpKind::Slice, {a}, {0, 1}).shape()[1] == 1);
    CHECK(op_forward(OpKind::SumSq, {a}).item() == doctest::Approx(30.f));
    CHECK_THROWS_AS(op_forward(OpKind::Matmul, {a}), ShapeError);
}

TEST_CASE("reductions are bitwise reproducible") {
    Rng rng(5150);
    Tensor x = Tensor::randn({301}, rng);
    const float a = mean_all(x).item();
    const float b = mean_all(x).item();
    CHECK(std::memcmp(&a, &b, sizeof(float)) == 0);

    Tensor m1 = Tensor::randn({9, 13}, rng);
    Tensor m2 = Tensor::randn({13, 11}, rng);
    Tensor p = matmul(m1, m2);
    Tensor q = matmul(m1, m2);
    CHECK(std::memcmp(p.data().data(), q.data().data(), sizeof(float) * p.numel()) == 0);
}

TEST_CASE("tensor invariants") {
    Tensor t = Tensor::zeros({2, 3, 4});
    CHECK(t.numel() == 24);
    CHECK_THROWS_AS(Tensor::from({2}, {1.f, 2.f, 3.f}), ShapeError);
    Tensor f64 = t.to_f64();
    CHECK_THROWS_AS(f64.set_requires_grad(true), ShapeError);
}

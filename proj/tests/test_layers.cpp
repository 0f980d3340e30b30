#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "headsynth/gradient_check.hpp"
#include "headsynth/layers.hpp"
#include "headsynth/rng.hpp"
#include "headsynth/timegan.hpp"

using namespace headsynth;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

void collect_gru(GruStack& s, GruGrads& g, std::vector<Tensor*>& ps,
                 std::vector<const Tensor*>& gs) {
    g.match(s);
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
        auto& P = s.layers[l];
        auto& G = g.layers[l];
        Tensor* pp[9] = {&P.wz, &P.wr, &P.wn, &P.uz, &P.ur, &P.un, &P.bz, &P.br, &P.bn};
        Tensor* gg[9] = {&G.wz, &G.wr, &G.wn, &G.uz, &G.ur, &G.un, &G.bz, &G.br, &G.bn};
        for (int i = 0; i < 9; ++i) {
            ps.push_back(pp[i]);
            gs.push_back(gg[i]);
        }
    }
}

} // namespace

TEST_CASE("zero-weight GRU maps any input to zero") {
    GruStack s;
    s.input_dim = 3;
    s.hidden_dim = 4;
    s.layers.resize(2);
    for (std::size_t l = 0; l < 2; ++l) {
        std::size_t in = l == 0 ? 3 : 4;
        auto& L = s.layers[l];
        L.wz = Tensor({4, in});
        L.wr = Tensor({4, in});
        L.wn = Tensor({4, in});
        L.uz = Tensor({4, 4});
        L.ur = Tensor({4, 4});
        L.un = Tensor({4, 4});
        L.bz = Tensor({4});
        L.br = Tensor({4});
        L.bn = Tensor({4});
    }
    Rng rng(1);
    Tensor x = random_tensor({5, 3}, rng);
    GruCache cache;
    Tensor y = gru_forward(s, x, cache);
    for (double v : y.values) REQUIRE(v == 0.0);
}

TEST_CASE("zero-weight GRU halves a nonzero initial hidden unit per step") {
    GruStack s;
    s.input_dim = 2;
    s.hidden_dim = 3;
    s.layers.resize(1);
    auto& L = s.layers[0];
    L.wz = Tensor({3, 2});
    L.wr = Tensor({3, 2});
    L.wn = Tensor({3, 2});
    L.uz = Tensor({3, 3});
    L.ur = Tensor({3, 3});
    L.un = Tensor({3, 3});
    L.bz = Tensor({3});
    L.br = Tensor({3});
    L.bn = Tensor({3});
    Tensor x({1, 2}); // T=1, zero input
    Tensor h0({1, 1, 3});
    h0.values[0] = 1.0;
    GruCache cache;
    Tensor y = gru_forward(s, x, h0, cache);
    // z = sigmoid(0) = 0.5, n = 0, h' = 0.5 * h0
    REQUIRE(y.values[0] == Catch::Approx(0.5));
    REQUIRE(y.values[1] == 0.0);
}

TEST_CASE("GRU forward is deterministic") {
    Rng rng(2);
    GruStack s = GruStack::glorot(3, 6, 2, rng);
    Tensor x = random_tensor({5, 4, 3}, rng);
    GruCache c1, c2;
    Tensor y1 = gru_forward(s, x, Tensor{}, c1);
    Tensor y2 = gru_forward(s, x, Tensor{}, c2);
    REQUIRE(y1.values == y2.values);
}

TEST_CASE("zero output gradient yields zero parameter gradients") {
    Rng rng(3);
    GruStack s = GruStack::glorot(3, 5, 2, rng);
    Tensor x = random_tensor({4, 2, 3}, rng);
    GruCache cache;
    Tensor y = gru_forward(s, x, Tensor{}, cache);
    GruGrads g;
    g.match(s);
    g.zero();
    Tensor dy(y.shape);
    auto res = gru_backward(s, cache, dy, g);
    for (const auto& L : g.layers)
        for (const Tensor* t : {&L.wz, &L.wr, &L.wn, &L.uz, &L.ur, &L.un, &L.bz, &L.br, &L.bn})
            for (double v : t->values) REQUIRE(v == 0.0);
    for (double v : res.grad_input.values) REQUIRE(v == 0.0);
}

TEST_CASE("GRU parameter and input gradients match finite differences") {
    Rng rng(4);
    const std::size_t T = 6, B = 2, in = 3, H = 8, layers = 2;
    GruStack s = GruStack::glorot(in, H, layers, rng);
    Tensor x = random_tensor({T, B, in}, rng);
    Tensor target = random_tensor({T, B, H}, rng);

    // Loss: squared error against a fixed target.
    auto loss = [&]() {
        GruCache c;
        Tensor y = gru_forward(s, x, Tensor{}, c);
        double sum = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            double e = y.values[i] - target.values[i];
            sum += e * e;
        }
        return sum / static_cast<double>(y.numel());
    };

    GruCache cache;
    Tensor y = gru_forward(s, x, Tensor{}, cache);
    Tensor dy(y.shape);
    for (std::size_t i = 0; i < y.numel(); ++i)
        dy.values[i] = 2.0 * (y.values[i] - target.values[i]) / static_cast<double>(y.numel());
    GruGrads g;
    g.match(s);
    g.zero();
    auto res = gru_backward(s, cache, dy, g);

    std::vector<Tensor*> params;
    std::vector<const Tensor*> grads;
    collect_gru(s, g, params, grads);
    auto report = gradient_check(params, grads, loss, 1e-4);
    INFO("max rel error " << report.max_rel_error);
    REQUIRE(report.passed());

    // Input gradients against finite differences as well.
    std::vector<Tensor*> xparam{&x};
    std::vector<const Tensor*> xgrad{&res.grad_input};
    auto xreport = gradient_check(xparam, xgrad, loss, 1e-4);
    INFO("input max rel error " << xreport.max_rel_error);
    REQUIRE(xreport.passed());
}

TEST_CASE("gru_backward rejects a mismatched cache") {
    Rng rng(5);
    GruStack s = GruStack::glorot(3, 4, 1, rng);
    GruCache cache; // never ran forward
    GruGrads g;
    Tensor dy({2, 1, 4});
    REQUIRE_THROWS_AS(gru_backward(s, cache, dy, g), ArgumentError);
}

TEST_CASE("dense layer basics") {
    DenseLayer l;
    l.w = Tensor({3, 3});
    for (int i = 0; i < 3; ++i) l.w.at(i, i) = 1.0;
    l.b = Tensor({3});
    l.act = Activation::identity;
    Rng rng(6);
    Tensor x = random_tensor({4, 3}, rng);
    Tensor y = dense_forward(l, x);
    REQUIRE(y.values == x.values);

    l.act = Activation::sigmoid;
    l.w.fill(0.0);
    Tensor y2 = dense_forward(l, x);
    for (double v : y2.values) REQUIRE(v == Catch::Approx(0.5));
}

TEST_CASE("dense gradients match finite differences") {
    Rng rng(7);
    for (Activation act : {Activation::identity, Activation::sigmoid, Activation::tanh}) {
        DenseLayer l = DenseLayer::glorot(5, 4, act, rng);
        Tensor x = random_tensor({6, 5}, rng);
        Tensor target = random_tensor({6, 4}, rng);
        auto loss = [&]() {
            Tensor y = dense_forward(l, x);
            double sum = 0.0;
            for (std::size_t i = 0; i < y.numel(); ++i) {
                double e = y.values[i] - target.values[i];
                sum += e * e;
            }
            return sum / static_cast<double>(y.numel());
        };
        DenseCache cache;
        Tensor y = dense_forward(l, x, &cache);
        Tensor dy(y.shape);
        for (std::size_t i = 0; i < y.numel(); ++i)
            dy.values[i] = 2.0 * (y.values[i] - target.values[i]) / static_cast<double>(y.numel());
        DenseGrads g;
        g.match(l);
        g.zero();
        Tensor dx = dense_backward(l, cache, dy, g);

        std::vector<Tensor*> params{&l.w, &l.b, &x};
        std::vector<const Tensor*> grads{&g.w, &g.b, &dx};
        auto report = gradient_check(params, grads, loss, 1e-4);
        INFO("activation " << static_cast<int>(act) << " max rel " << report.max_rel_error);
        REQUIRE(report.passed());
    }
}

TEST_CASE("gradient_check on a linear model with squared loss is near-exact") {
    Rng rng(8);
    DenseLayer l = DenseLayer::glorot(4, 2, Activation::identity, rng);
    Tensor x = random_tensor({5, 4}, rng);
    Tensor target = random_tensor({5, 2}, rng);
    auto loss = [&]() {
        Tensor y = dense_forward(l, x);
        double sum = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            double e = y.values[i] - target.values[i];
            sum += e * e;
        }
        return 0.5 * sum;
    };
    DenseCache cache;
    Tensor y = dense_forward(l, x, &cache);
    Tensor dy(y.shape);
    for (std::size_t i = 0; i < y.numel(); ++i) dy.values[i] = y.values[i] - target.values[i];
    DenseGrads g;
    g.match(l);
    g.zero();
    dense_backward(l, cache, dy, g);
    std::vector<Tensor*> params{&l.w, &l.b};
    std::vector<const Tensor*> grads{&g.w, &g.b};
    auto report = gradient_check(params, grads, loss, 1e-4);
    REQUIRE(report.max_rel_error < 1e-8);
}

TEST_CASE("2-layer GRU with sigmoid head and cross-entropy passes the gradient check") {
    Rng rng(9);
    SeqNet net = SeqNet::make(3, 6, 2, 1, Activation::identity, rng);
    Tensor x = random_tensor({5, 2, 3}, rng);

    auto loss = [&]() {
        SeqNet::Cache c;
        Tensor logits = net.forward(x, c);
        return bce_logits(logits, 1.0);
    };

    SeqNet::Cache cache;
    Tensor logits = net.forward(x, cache);
    Tensor dlogits;
    bce_logits(logits, 1.0, &dlogits);
    SeqNet::Grads g;
    g.match(net);
    g.zero();
    net.backward(cache, dlogits, g);

    std::vector<Tensor*> params;
    std::vector<const Tensor*> grads;
    collect_params(net, g, params, grads);
    auto report = gradient_check(params, grads, loss, 1e-4);
    INFO("max rel error " << report.max_rel_error);
    REQUIRE(report.passed());
}

TEST_CASE("a corrupted gradient coordinate is flagged exactly") {
    Rng rng(10);
    DenseLayer l = DenseLayer::glorot(3, 2, Activation::tanh, rng);
    Tensor x = random_tensor({4, 3}, rng);
    Tensor target = random_tensor({4, 2}, rng);
    auto loss = [&]() {
        Tensor y = dense_forward(l, x);
        double sum = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            double e = y.values[i] - target.values[i];
            sum += e * e;
        }
        return sum;
    };
    DenseCache cache;
    Tensor y = dense_forward(l, x, &cache);
    Tensor dy(y.shape);
    for (std::size_t i = 0; i < y.numel(); ++i)
        dy.values[i] = 2.0 * (y.values[i] - target.values[i]);
    DenseGrads g;
    g.match(l);
    g.zero();
    dense_backward(l, cache, dy, g);

    g.w.values[3] *= 2.0; // corrupt one coordinate
    std::vector<Tensor*> params{&l.w, &l.b};
    std::vector<const Tensor*> grads{&g.w, &g.b};
    auto report = gradient_check(params, grads, loss, 1e-4);
    REQUIRE(report.failures.size() == 1);
    REQUIRE(report.failures[0].param == 0);
    REQUIRE(report.failures[0].coord == 3);
}

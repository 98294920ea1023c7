#include <cmath>
#include <functional>

#include "doctest.h"
#include "mfin/autodiff.hpp"
#include "mfin/errors.hpp"
#include "mfin/rng.hpp"

using namespace mfin;
using ad::Graph;
using ad::NodeId;
using ad::Tensor;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.v) v = scale * rng.normal();
    return t;
}

// Central-difference gradient check: builder maps parameter tensors to a
// scalar loss inside a fresh graph. Returns max relative error across all
// parameter entries.
double gradient_check(const std::vector<Tensor>& params,
                      const std::function<NodeId(Graph&, const std::vector<NodeId>&)>& build) {
    Graph g;
    std::vector<NodeId> ids;
    for (const auto& p : params) ids.push_back(g.param(p));
    const NodeId loss = build(g, ids);
    g.backward(loss);

    double max_rel = 0.0;
    const double h = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k].v.size(); ++i) {
            auto eval = [&](double delta) {
                std::vector<Tensor> bumped = params;
                bumped[k].v[i] += delta;
                Graph g2;
                std::vector<NodeId> ids2;
                for (const auto& p : bumped) ids2.push_back(g2.param(p));
                return g2.scalar_val(build(g2, ids2));
            };
            const double fd = (eval(h) - eval(-h)) / (2.0 * h);
            const double an = g.grad(ids[k]).v[i];
            const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace

TEST_CASE("identity 1x1 convolution passes input through") {
    Rng rng(1);
    Graph g;
    const NodeId in = g.input(random_tensor(rng, {6, 4, 1}));
    Tensor k(std::vector<int>{1, 1, 1, 1});
    k.v[0] = 1.0;
    const NodeId out = g.conv2d_causal(in, g.input(k), g.input(Tensor(std::vector<int>{1})));
    CHECK(g.val(out).v == g.val(in).v);
}

TEST_CASE("causal convolution smears an impulse forward only") {
    Graph g;
    Tensor x(std::vector<int>{8, 1, 1});
    x.v[3] = 1.0;  // impulse at t=3
    Tensor k(std::vector<int>{2, 1, 1, 1}, 1.0);  // two-tap all-ones kernel
    const NodeId out =
        g.conv2d_causal(g.input(x), g.input(k), g.input(Tensor(std::vector<int>{1})));
    const auto& v = g.val(out).v;
    for (int t = 0; t < 8; ++t) {
        if (t == 3 || t == 4)
            CHECK(v[t] == 1.0);  // impulse and one-step smear
        else
            CHECK(v[t] == 0.0);  // never before the impulse
    }
}

TEST_CASE("perturbing future rows never changes past conv output") {
    Rng rng(5);
    Tensor x = random_tensor(rng, {10, 3, 2});
    Tensor k = random_tensor(rng, {3, 2, 2, 4});
    Tensor b = random_tensor(rng, {4});
    Graph g1;
    const NodeId o1 = g1.conv2d_causal(g1.input(x), g1.input(k), g1.input(b));
    Tensor x2 = x;
    for (int t = 6; t < 10; ++t)
        for (int j = 0; j < 6; ++j) x2.v[t * 6 + j] += 100.0;
    Graph g2;
    const NodeId o2 = g2.conv2d_causal(g2.input(x2), g2.input(k), g2.input(b));
    const int wo = 3 - 2 + 1, co = 4;
    for (int t = 0; t < 6; ++t)
        for (int j = 0; j < wo * co; ++j)
            CHECK(g1.val(o1).v[t * wo * co + j] == g2.val(o2).v[t * wo * co + j]);
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(7);
    std::vector<Tensor> params = {random_tensor(rng, {6, 3, 1}),
                                  random_tensor(rng, {2, 3, 1, 2}),
                                  random_tensor(rng, {2})};
    const double err = gradient_check(params, [](Graph& g, const std::vector<NodeId>& p) {
        const NodeId out = g.conv2d_causal(p[0], p[1], p[2]);
        return g.sum(g.mul(out, out));  // quadratic readout
    });
    CHECK(err < 1e-5);
}

TEST_CASE("elementwise and reduction gradients match finite differences") {
    Rng rng(11);
    std::vector<Tensor> params = {random_tensor(rng, {4, 3}), random_tensor(rng, {4, 3})};
    const double err = gradient_check(params, [](Graph& g, const std::vector<NodeId>& p) {
        const NodeId s = g.sigmoid(p[0]);
        const NodeId t = g.tanh_(p[1]);
        const NodeId e = g.elu(g.sub(s, t));
        const NodeId q = g.abs_(g.mul(e, p[0]));
        const NodeId m = g.mean(q);
        const NodeId dev = g.sub_bcast(q, m);
        const NodeId var = g.scale(g.sum(g.mul(dev, dev)), 1.0 / 11.0);
        return g.divide(g.mean(p[1]), g.add_const(g.sqrt_(var), 1.0));
    });
    CHECK(err < 1e-5);
}

TEST_CASE("matmul and structural op gradients match finite differences") {
    Rng rng(13);
    std::vector<Tensor> params = {random_tensor(rng, {5, 4}), random_tensor(rng, {4, 3}),
                                  random_tensor(rng, {1, 3})};
    const double err = gradient_check(params, [](Graph& g, const std::vector<NodeId>& p) {
        const NodeId mm = g.add_rowvec(g.matmul(p[0], p[1]), p[2]);
        const NodeId shifted = g.shift_rows_down(mm, 1);
        const NodeId cat = g.concat_cols({mm, shifted});
        const NodeId sl = g.slice_cols(cat, 1, 5);
        const NodeId rows = g.row_sum(g.abs_(sl));
        return g.mean(rows);
    });
    CHECK(err < 1e-5);
}

TEST_CASE("lstm with zero weights outputs zeros") {
    Graph g;
    Rng rng(3);
    const int T = 5, D = 2, H = 3;
    const NodeId x = g.input(random_tensor(rng, {T, D}));
    const NodeId w = g.input(Tensor::matrix(D, 4 * H));
    const NodeId u = g.input(Tensor::matrix(H, 4 * H));
    const NodeId b = g.input(Tensor::matrix(1, 4 * H));
    const NodeId h = ad::lstm_forward(g, x, w, u, b, H);
    for (double v : g.val(h).v) CHECK(v == 0.0);
}

TEST_CASE("lstm forward matches a hand-rolled recursion") {
    Rng rng(17);
    const int T = 4, D = 2, H = 3;
    Tensor x = random_tensor(rng, {T, D});
    Tensor w = random_tensor(rng, {D, 4 * H}, 0.5);
    Tensor u = random_tensor(rng, {H, 4 * H}, 0.5);
    Tensor b = random_tensor(rng, {1, 4 * H}, 0.5);

    Graph g;
    const NodeId out = ad::lstm_forward(g, g.input(x), g.input(w), g.input(u), g.input(b), H);

    // Oracle: explicit gate recursion, gate order [i, f, g, o].
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    std::vector<double> hprev(H, 0.0), cprev(H, 0.0);
    for (int t = 0; t < T; ++t) {
        std::vector<double> z(4 * H, 0.0);
        for (int j = 0; j < 4 * H; ++j) {
            double s = b.at2(0, j);
            for (int d = 0; d < D; ++d) s += x.at2(t, d) * w.at2(d, j);
            for (int k = 0; k < H; ++k) s += hprev[k] * u.at2(k, j);
            z[j] = s;
        }
        std::vector<double> hnew(H), cnew(H);
        for (int k = 0; k < H; ++k) {
            const double gi = sig(z[k]);
            const double gf = sig(z[H + k]);
            const double gc = std::tanh(z[2 * H + k]);
            const double go = sig(z[3 * H + k]);
            cnew[k] = gf * cprev[k] + gi * gc;
            hnew[k] = go * std::tanh(cnew[k]);
            CHECK(g.val(out).at2(t, k) == doctest::Approx(hnew[k]).epsilon(1e-12));
        }
        hprev = hnew;
        cprev = cnew;
    }
}

TEST_CASE("lstm gradients match finite differences") {
    Rng rng(19);
    const int T = 4, D = 2, H = 3;
    std::vector<Tensor> params = {random_tensor(rng, {T, D}), random_tensor(rng, {D, 4 * H}, 0.4),
                                  random_tensor(rng, {H, 4 * H}, 0.4),
                                  random_tensor(rng, {1, 4 * H}, 0.4)};
    const double err = gradient_check(params, [H](Graph& g, const std::vector<NodeId>& p) {
        const NodeId h = ad::lstm_forward(g, p[0], p[1], p[2], p[3], H);
        return g.mean(g.mul(h, h));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("composite conv -> lstm -> dense gradient matches finite differences") {
    Rng rng(23);
    const int T = 6, W = 3, H = 2;
    std::vector<Tensor> params = {
        random_tensor(rng, {T, W, 1}),        // input
        random_tensor(rng, {2, 1, 1, 2}),     // ts-style kernel
        random_tensor(rng, {2}),              // kernel bias
        random_tensor(rng, {6, 4 * H}, 0.5),  // lstm W (D = 3*2)
        random_tensor(rng, {H, 4 * H}, 0.5),  // lstm U
        random_tensor(rng, {1, 4 * H}, 0.5),  // lstm b
        random_tensor(rng, {H, 1}),           // head
        random_tensor(rng, {1, 1}),           // head bias
    };
    const double err = gradient_check(params, [H](Graph& g, const std::vector<NodeId>& p) {
        const NodeId conv = g.conv2d_causal(p[0], p[1], p[2]);
        const NodeId flat = g.flatten_width(conv);
        const NodeId h = ad::lstm_forward(g, flat, p[3], p[4], p[5], H);
        const NodeId y = g.tanh_(ad::dense(g, h, p[6], p[7]));
        return g.mean(y);
    });
    CHECK(err < 1e-4);
}

TEST_CASE("simple quadratic gradient: d/dp sum(p^2) = 2p") {
    Rng rng(29);
    Tensor p = random_tensor(rng, {3, 3});
    Graph g;
    const NodeId pid = g.param(p);
    g.backward(g.sum(g.mul(pid, pid)));
    for (std::size_t i = 0; i < p.v.size(); ++i)
        CHECK(g.grad(pid).v[i] == doctest::Approx(2.0 * p.v[i]).epsilon(1e-12));
}

TEST_CASE("adam step matches the closed-form update") {
    std::vector<Tensor> params = {Tensor::matrix(1, 2)};
    params[0].v = {1.0, -2.0};
    std::vector<Tensor> grads = {Tensor::matrix(1, 2)};
    grads[0].v = {0.5, -0.25};

    ad::AdamState adam;
    adam.lr = 0.01;
    adam.init(params);
    adam.update(params, grads);

    for (int i = 0; i < 2; ++i) {
        const double gv = grads[0].v[i];
        const double m_hat = (0.1 * gv) / (1 - 0.9);
        const double v_hat = (0.001 * gv * gv) / (1 - 0.999);
        const double expect = (i == 0 ? 1.0 : -2.0) - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
        CHECK(params[0].v[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("dropout is the identity in eval mode and rescales in training") {
    Rng rng(31);
    Graph g;
    Tensor x(std::vector<int>{20, 10}, 1.0);
    const NodeId in = g.input(x);
    CHECK(g.dropout(in, 0.3, rng, false) == in);

    const NodeId dropped = g.dropout(in, 0.3, rng, true);
    int zeros = 0;
    for (double v : g.val(dropped).v) {
        if (v == 0.0)
            ++zeros;
        else
            CHECK(v == doctest::Approx(1.0 / 0.7));
    }
    CHECK(zeros > 20);
    CHECK(zeros < 120);
}

TEST_CASE("identical seeds give bitwise-identical graphs and updates") {
    auto run = [] {
        Rng rng(777);
        Graph g;
        std::vector<NodeId> pids;
        Tensor p = Tensor::matrix(3, 4);
        for (auto& v : p.v) v = rng.normal();
        pids.push_back(g.param(p));
        const NodeId act = g.tanh_(pids[0]);
        const NodeId dropped = g.dropout(act, 0.2, rng, true);
        const NodeId loss = g.mean(g.mul(dropped, dropped));
        g.backward(loss);
        return std::make_pair(g.val(loss).v[0], g.grad(pids[0]).v);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("shape mismatches are rejected") {
    Graph g;
    const NodeId a = g.input(Tensor::matrix(2, 3));
    const NodeId b = g.input(Tensor::matrix(3, 2));
    CHECK_THROWS_AS(g.add(a, b), ConfigError);
    CHECK_THROWS_AS(g.conv2d_causal(a, b, a), ConfigError);
    const NodeId wide = g.input(Tensor(std::vector<int>{4, 2, 1}));
    const NodeId kern = g.input(Tensor(std::vector<int>{1, 3, 1, 1}));
    const NodeId bias = g.input(Tensor(std::vector<int>{1}));
    CHECK_THROWS_AS(g.conv2d_causal(wide, kern, bias), ConfigError);  // kernel wider than input
}

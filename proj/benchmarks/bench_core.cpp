#include <benchmark/benchmark.h>

#include <vector>

#include "mfin/autodiff.hpp"
#include "mfin/ewstats.hpp"
#include "mfin/metrics.hpp"
#include "mfin/mfin.hpp"
#include "mfin/portfolio.hpp"
#include "mfin/rng.hpp"
#include "mfin/signals.hpp"

using namespace mfin;

namespace {

std::vector<double> random_returns(int n, unsigned seed) {
    Rng rng(seed);
    std::vector<double> r(n);
    for (auto& v : r) v = rng.normal(0.0003, 0.02);
    return r;
}

void BM_EwStd(benchmark::State& state) {
    const auto r = random_returns(2000, 1);
    for (auto _ : state) {
        EwStats stats = EwStats::from_span(63, 10);
        double acc = 0.0;
        for (double v : r) {
            stats.add(v);
            acc += stats.stddev();
        }
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_EwStd);

void BM_Adf(benchmark::State& state) {
    Rng rng(2);
    std::vector<double> series(1000);
    double x = 0.0;
    for (auto& v : series) {
        x = 0.9 * x + rng.normal();
        v = x;
    }
    for (auto _ : state) {
        auto res = adf_pvalue(series);
        benchmark::DoNotOptimize(res.pvalue);
    }
}
BENCHMARK(BM_Adf);

void BM_ConvForward(benchmark::State& state) {
    Rng rng(3);
    ad::Tensor x(std::vector<int>{100, 22, 1});
    for (auto& v : x.v) v = rng.normal();
    ad::Tensor k(std::vector<int>{10, 22, 1, 16});
    for (auto& v : k.v) v = 0.05 * rng.normal();
    ad::Tensor b(std::vector<int>{16});
    for (auto _ : state) {
        ad::Graph g;
        const auto out = g.conv2d_causal(g.input(x), g.input(k), g.input(b));
        benchmark::DoNotOptimize(g.val(out).v[0]);
    }
}
BENCHMARK(BM_ConvForward);

void BM_MfinTrainStep(benchmark::State& state) {
    const int T = 100, NA = 7, NI = 22;
    MfinHyper h;
    h.hidden = 32;
    h.n_filters = 16;
    h.ts_filter_len = 5;
    h.learning_rate = 1e-3;
    MfinModel model;
    model.init(NA, NI, h, 1);
    Rng rng(4);
    std::vector<double> x(static_cast<std::size_t>(T) * NA * NI);
    for (auto& v : x) v = rng.normal();
    std::vector<double> y1(static_cast<std::size_t>(T) * NA);
    for (auto& v : y1) v = rng.normal(0.001, 0.02);
    std::vector<double> y2(y1.size(), 1.0);

    ad::AdamState adam;
    adam.lr = h.learning_rate;
    adam.init(model.params);
    for (auto _ : state) {
        ForwardGraph fg;
        mfin_forward_graph(fg, model, x, T, false, nullptr);
        const auto loss = sharpe_loss_graph(fg, y1, y2, T, NA, 0.0, 1.0);
        fg.graph.backward(loss.loss);
        std::vector<ad::Tensor> grads;
        grads.reserve(fg.param_ids.size());
        for (auto pid : fg.param_ids) grads.push_back(fg.graph.grad(pid));
        adam.update(model.params, grads);
        benchmark::DoNotOptimize(model.params[0].v[0]);
    }
}
BENCHMARK(BM_MfinTrainStep)->Unit(benchmark::kMillisecond);

void BM_PortfolioBacktest(benchmark::State& state) {
    const int T = 2000, NA = 7;
    Rng rng(5);
    ReturnsMatrix rm;
    rm.first_day = 0;
    rm.n_assets = NA;
    rm.r.resize(static_cast<std::size_t>(T) * NA);
    rm.valid.assign(rm.r.size(), 1);
    VolEstimate vols;
    vols.first_day = 0;
    vols.n_assets = NA;
    vols.sigma.assign(rm.r.size(), 0.5);
    vols.valid.assign(rm.r.size(), 1);
    for (auto& v : rm.r) v = rng.normal(0.0, 0.03);
    WeightsMatrix w;
    w.first_day = 0;
    w.n_assets = NA;
    w.w.resize(static_cast<std::size_t>(T - 1) * NA);
    for (auto& v : w.w) v = rng.uniform() < 0.5 ? -1.0 : 1.0;

    for (auto _ : state) {
        auto bt = run_weights(w, rm, vols, 5e-4);
        benchmark::DoNotOptimize(bt.series.net[0]);
    }
}
BENCHMARK(BM_PortfolioBacktest);

void BM_Psr(benchmark::State& state) {
    const auto r = random_returns(2000, 6);
    for (auto _ : state) {
        auto p = psr(r, 0.0);
        benchmark::DoNotOptimize(p);
    }
}
BENCHMARK(BM_Psr);

}  // namespace

BENCHMARK_MAIN();

#include <cmath>

#include "doctest.h"
#include "mfin/errors.hpp"
#include "mfin/metrics.hpp"
#include "mfin/rng.hpp"

using namespace mfin;

TEST_CASE("sharpe basics") {
    std::vector<double> constant(100, 0.01);
    CHECK_FALSE(sharpe(constant).has_value());  // zero std flagged

    std::vector<double> alternating(100);
    for (int t = 0; t < 100; ++t) alternating[t] = t % 2 ? 0.02 : -0.02;
    CHECK(*sharpe(alternating) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sharpe matches the analytic value on seeded Gaussian returns") {
    Rng rng(101);
    const double mu = 0.001, sd = 0.02;
    std::vector<double> r(20000);
    for (auto& v : r) v = rng.normal(mu, sd);
    const double expect = std::sqrt(252.0) * mu / sd;
    // Standard error of the daily Sharpe estimate is about 1/sqrt(n).
    const double half_width = 3.0 * std::sqrt(252.0 / 20000.0);
    CHECK(std::abs(*sharpe(r) - expect) < half_width);
}

TEST_CASE("drawdown of a monotone gainer is zero and calmar flagged") {
    std::vector<double> gains(50, 0.004);
    auto dd = max_drawdown(gains);
    CHECK(dd.pct == 0.0);
    CHECK_FALSE(calmar(gains).has_value());
}

TEST_CASE("drawdown arithmetic on a hand path") {
    // Equity 1 -> 0.5 -> 0.75: 50% trough from the peak.
    std::vector<double> r = {-0.5, 0.5};
    auto dd = max_drawdown(r);
    CHECK(dd.pct == doctest::Approx(0.50));
}

TEST_CASE("drawdown matches the running-max oracle on a GBM path") {
    Rng rng(55);
    std::vector<double> r(1500);
    for (auto& v : r) v = 0.0002 + 0.025 * rng.normal();
    auto dd = max_drawdown(r);

    double equity = 1.0, peak = 1.0, worst = 0.0;
    for (double v : r) {
        equity *= 1.0 + v;
        if (equity > peak) peak = equity;
        worst = std::max(worst, (peak - equity) / peak);
    }
    CHECK(dd.pct == doctest::Approx(worst).epsilon(1e-12));
    CHECK(dd.sigma_mult == doctest::Approx(worst / annualized_vol(r)).epsilon(1e-12));
}

TEST_CASE("hit rate and pnl ratio") {
    std::vector<double> winners(40, 0.01);
    CHECK(hit_rate(winners) == 1.0);
    CHECK_FALSE(pnl_ratio(winners).has_value());  // flagged infinite

    std::vector<double> pm(40);
    for (int t = 0; t < 40; ++t) pm[t] = t % 2 ? 0.015 : -0.015;
    CHECK(hit_rate(pm) == doctest::Approx(0.5));
    CHECK(*pnl_ratio(pm) == doctest::Approx(1.0));

    Rng rng(8);
    std::vector<double> r(777);
    for (auto& v : r) v = rng.normal(0.0003, 0.01);
    // Counting oracle.
    double up = 0, dn = 0;
    int nu = 0, nd = 0, pos = 0;
    for (double v : r) {
        if (v > 0) {
            up += v;
            ++nu;
            ++pos;
        } else if (v < 0) {
            dn += v;
            ++nd;
        }
    }
    CHECK(hit_rate(r) == doctest::Approx(static_cast<double>(pos) / 777));
    CHECK(*pnl_ratio(r) == doctest::Approx((up / nu) / std::abs(dn / nd)));
}

TEST_CASE("correlation pairs") {
    std::vector<double> a = {1, 2, 3, 4, 5, 6};
    auto same = correlation(a, a);
    CHECK(same.pearson == doctest::Approx(1.0));
    CHECK(same.spearman == doctest::Approx(1.0));

    // Exact monotone nonlinear map: Spearman 1, Pearson below 1.
    std::vector<double> b;
    for (double v : a) b.push_back(std::exp(v));
    auto mono = correlation(a, b);
    CHECK(mono.spearman == doctest::Approx(1.0));
    CHECK(mono.pearson < 1.0);
}

TEST_CASE("correlation recovers the generating rho of a bivariate normal") {
    Rng rng(19);
    const double rho = 0.5;
    std::vector<double> a(30000), b(30000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double z1 = rng.normal(), z2 = rng.normal();
        a[i] = z1;
        b[i] = rho * z1 + std::sqrt(1 - rho * rho) * z2;
    }
    auto c = correlation(a, b);
    CHECK(c.pearson == doctest::Approx(rho).epsilon(0.1));
    CHECK(std::abs(c.pearson - rho) < 0.05);
}

TEST_CASE("scaling behaviour of the report statistics") {
    Rng rng(4);
    std::vector<double> r(800), scaled(800);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = rng.normal(0.0004, 0.012);
        scaled[i] = 3.0 * r[i];
    }
    CHECK(*sharpe(scaled) == doctest::Approx(*sharpe(r)).epsilon(1e-12));
    CHECK(*sortino(scaled) == doctest::Approx(*sortino(r)).epsilon(1e-12));
    CHECK(annualized_return(scaled) == doctest::Approx(3.0 * annualized_return(r)));
    CHECK(annualized_vol(scaled) == doctest::Approx(3.0 * annualized_vol(r)));
    auto c = correlation(r, scaled);
    CHECK(c.pearson == doctest::Approx(1.0));
}

TEST_CASE("psr is exactly one half at the benchmark Sharpe") {
    Rng rng(23);
    std::vector<double> r(750);
    for (auto& v : r) v = rng.normal(0.0005, 0.01);
    const double sr_daily = mean_of(r) / stddev_of(r);
    auto p = psr(r, sr_daily);
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(0.5).epsilon(1e-12));

    auto below = psr(r, sr_daily + 0.01);
    CHECK(*below < 0.5);
}

TEST_CASE("psr matches a bootstrap of the Sharpe sampling distribution") {
    Rng rng(452);
    const int n = 750;
    std::vector<double> r(n);
    for (auto& v : r) v = rng.normal(0.0005, 0.01);

    auto p = psr(r, 0.0);
    REQUIRE(p.has_value());
    // Saturated values would make the comparison vacuous.
    CHECK(*p > 0.85);
    CHECK(*p < 0.995);

    // 10,000-resample bootstrap: fraction of resampled Sharpe estimates
    // above the benchmark.
    Rng boot(99);
    int above = 0;
    const int B = 10000;
    std::vector<double> sample(n);
    for (int b = 0; b < B; ++b) {
        for (int i = 0; i < n; ++i) sample[i] = r[boot.below(n)];
        if (mean_of(sample) / stddev_of(sample) > 0.0) ++above;
    }
    const double boot_psr = static_cast<double>(above) / B;
    CHECK(std::abs(*p - boot_psr) < 0.02);
}

TEST_CASE("minimum track record is the smallest qualifying n") {
    Rng rng(37);
    std::vector<double> r(600);
    for (auto& v : r) v = rng.normal(0.0012, 0.011);
    auto mtr = min_track_record(r, 0.0, 0.99);
    REQUIRE(mtr.has_value());
    auto at = psr_at_length(r, *mtr, 0.0);
    auto before = psr_at_length(r, *mtr - 1, 0.0);
    REQUIRE(at.has_value());
    REQUIRE(before.has_value());
    CHECK(*at >= 0.99);
    CHECK(*before < 0.99);

    // PSR grows with track length at fixed moments.
    CHECK(*psr_at_length(r, 400, 0.0) < *psr_at_length(r, 800, 0.0));

    // A clearly better series needs no more data.
    std::vector<double> better(600);
    Rng rng2(37);
    for (auto& v : better) v = rng2.normal(0.0030, 0.011);
    auto mtr2 = min_track_record(better, 0.0, 0.99);
    REQUIRE(mtr2.has_value());
    CHECK(*mtr2 <= *mtr);

    // No edge over the benchmark: undefined.
    std::vector<double> flat(100, 0.0);
    CHECK_FALSE(min_track_record(flat).has_value());
}

TEST_CASE("compute_metrics assembles a full report") {
    Rng rng(61);
    std::vector<double> r(500), bench(500);
    for (int i = 0; i < 500; ++i) {
        bench[i] = rng.normal(0.0005, 0.012);
        r[i] = 0.3 * bench[i] + rng.normal(0.0004, 0.01);
    }
    auto rep = compute_metrics(r, "demo", bench);
    CHECK(rep.n_days == 500);
    CHECK(rep.vol > 0.0);
    CHECK(rep.mdd.pct >= 0.0);
    CHECK(rep.mdd.pct <= 1.0);
    CHECK(rep.sharpe.has_value());
    REQUIRE(rep.corr_to_benchmark.has_value());
    CHECK(rep.corr_to_benchmark->pearson > 0.0);
    CHECK(rep.psr.has_value());
    CHECK(*rep.psr >= 0.0);
    CHECK(*rep.psr <= 1.0);
}

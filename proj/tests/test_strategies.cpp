#include <cmath>
#include <set>

#include "doctest.h"
#include "mfin/errors.hpp"
#include "mfin/strategies.hpp"
#include "test_util.hpp"

using namespace mfin;

namespace {
const Day kDay0 = days_from_civil(2020, 1, 1);
}

TEST_CASE("mop weights follow the sign of the trailing k-day return") {
    std::vector<double> rising(60), flat(60, 10.0);
    for (int t = 0; t < 60; ++t) rising[t] = 100.0 * std::pow(1.01, t);
    auto panel =
        testutil::panel_from_levels({"A"}, {"open", "alt"}, {{flat, rising}}, kDay0);
    PanelView view(panel);
    auto w = mop_weights(view, 1, MopParams{5}, kDay0 + 10, kDay0 + 59);
    for (int t = 0; t < w.rows(); ++t) CHECK(w.at(t, 0) == 1.0);

    auto wz = mop_weights(view, 0, MopParams{5}, kDay0 + 10, kDay0 + 59);
    for (int t = 0; t < wz.rows(); ++t) CHECK(wz.at(t, 0) == 0.0);  // sign(0) = 0
}

TEST_CASE("mop weights flip within k days of a drift regime change") {
    Rng rng(3);
    const int block = 200, k = 21, n = 1200;
    std::vector<double> levels(n);
    double x = 100.0;
    for (int t = 0; t < n; ++t) {
        const double drift = ((t / block) % 2 == 0) ? 0.02 : -0.02;
        x *= std::exp(drift + 0.001 * rng.normal());  // strong drift, little noise
        levels[t] = x;
    }
    auto panel = testutil::panel_from_levels({"A"}, {"alt"}, {{levels}}, kDay0);
    PanelView view(panel);
    auto w = mop_weights(view, 0, MopParams{k}, kDay0 + 30, kDay0 + n - 1);

    // Simulation oracle: recompute the signal directly and check the weight
    // matches its sign one day later; also check flips happen within k days
    // of each regime boundary.
    for (int b = 1; b * block + k + 2 < n; ++b) {
        const int boundary = b * block;
        const double want = ((b % 2 == 0) ? 1.0 : -1.0);
        bool flipped = false;
        for (int t = boundary; t <= boundary + k + 1; ++t) {
            const int row = t - 30;
            if (row >= 0 && row < w.rows() && w.at(row, 0) == want) {
                flipped = true;
                break;
            }
        }
        CHECK(flipped);
    }
}

TEST_CASE("baz weights: constant feature flat, monotone feature long, odd symmetry") {
    std::vector<double> flat(150, 5.0), up(150), down(150);
    for (int t = 0; t < 150; ++t) {
        up[t] = 100.0 + 3.0 * t;
        down[t] = -up[t];
    }
    auto panel = testutil::panel_from_levels({"A"}, {"c", "u", "d"}, {{flat, up, down}}, kDay0);
    PanelView view(panel);

    auto wc = baz_weights(view, 0, BazParams{4, 12}, kDay0 + 40, kDay0 + 149);
    for (int t = 0; t < wc.rows(); ++t) CHECK(wc.at(t, 0) == 0.0);

    auto wu = baz_weights(view, 1, BazParams{8, 24}, kDay0 + 40, kDay0 + 149);
    for (int t = 0; t < wu.rows(); ++t) CHECK(wu.at(t, 0) == 1.0);

    auto wd = baz_weights(view, 2, BazParams{8, 24}, kDay0 + 40, kDay0 + 149);
    for (int t = 0; t < wd.rows(); ++t) CHECK(wd.at(t, 0) == -wu.at(t, 0));
}

TEST_CASE("mop and baz positions are invariant to positive signal rescaling") {
    Rng rng(11);
    auto levels = testutil::gbm_levels(rng, 200, 0.0005, 0.03);
    std::vector<double> scaled;
    for (double v : levels) scaled.push_back(8.5 * v);
    auto p1 = testutil::panel_from_levels({"A"}, {"f"}, {{levels}}, kDay0);
    auto p2 = testutil::panel_from_levels({"A"}, {"f"}, {{scaled}}, kDay0);
    PanelView v1(p1), v2(p2);
    auto a = mop_weights(v1, 0, MopParams{21}, kDay0 + 40, kDay0 + 199);
    auto b = mop_weights(v2, 0, MopParams{21}, kDay0 + 40, kDay0 + 199);
    CHECK(a.w == b.w);
    auto c = baz_weights(v1, 0, BazParams{4, 12}, kDay0 + 40, kDay0 + 199);
    auto d = baz_weights(v2, 0, BazParams{4, 12}, kDay0 + 40, kDay0 + 199);
    CHECK(c.w == d.w);
    for (double x : a.w) CHECK((x == 1.0 || x == 0.0 || x == -1.0));
    for (double x : c.w) CHECK((x == 1.0 || x == 0.0 || x == -1.0));
}

TEST_CASE("rev state machine follows the entry/hold/exit rules literally") {
    Series z(4);
    z.set(0, 0.0);
    z.set(1, 2.0);
    z.set(2, 1.2);
    z.set(3, 0.6);
    auto w = rev_state_machine(z, 1.75, 0.75);
    CHECK(w == std::vector<double>{0.0, -1.0, -1.0, 0.0});

    // Never reaching the entry threshold keeps the book flat.
    Series quiet(50);
    for (int t = 0; t < 50; ++t) quiet.set(t, 1.2 * std::sin(0.3 * t));
    for (double v : rev_state_machine(quiet, 1.75, 0.75)) CHECK(v == 0.0);

    // Masked z forces an exit.
    Series gap(3);
    gap.set(0, 2.0);
    gap.set(2, 2.0);
    auto wg = rev_state_machine(gap, 1.75, 0.75);
    CHECK(wg[0] == -1.0);
    CHECK(wg[1] == 0.0);
    CHECK(wg[2] == -1.0);
}

TEST_CASE("rev positions always trace back to a valid entry chain") {
    Rng rng(21);
    // OU spread with ~5-day half-life.
    const int n = 1500;
    const double phi = std::exp(-std::log(2.0) / 5.0);
    Series z(n);
    double s = 0.0;
    for (int t = 0; t < n; ++t) {
        s = phi * s + std::sqrt(1 - phi * phi) * rng.normal();
        z.set(t, 1.4 * s);
    }
    const double zu = 1.75, zl = 0.75;
    auto w = rev_state_machine(z, zu, zl);

    int flat_days = 0;
    std::vector<int> holds;
    int hold = 0;
    for (int t = 0; t < n; ++t) {
        if (w[t] == 0.0) {
            ++flat_days;
            if (hold > 0) holds.push_back(hold);
            hold = 0;
            continue;
        }
        ++hold;
        // Nonzero position implies an entry at |z| >= zu with |z| >= zl since.
        if (t == 0 || w[t - 1] == 0.0)
            CHECK(std::abs(z.values[t]) >= zu);
        else
            CHECK(std::abs(z.values[t]) >= zl);
        // Entries are short the signal.
        if (t == 0 || w[t - 1] == 0.0) CHECK(w[t] == -((z.values[t] > 0) - (z.values[t] < 0)));
    }
    if (hold > 0) holds.push_back(hold);
    REQUIRE_FALSE(holds.empty());
    double avg = 0.0;
    for (int h : holds) avg += h;
    avg /= holds.size();
    CHECK(avg >= 2.0);
    CHECK(avg <= 40.0);
    CHECK(flat_days > n / 2);
}

TEST_CASE("long-only weights are all ones, masks ignored") {
    std::vector<double> a(20, 10.0);
    std::vector<double> b(20, 5.0);
    auto panel = testutil::panel_from_levels({"X", "Y", "Z"}, {"open"},
                                             {{a}, {b}, {a}}, kDay0);
    PanelView view(panel);
    auto w = long_only_weights(view, kDay0, kDay0 + 4);
    REQUIRE(w.rows() == 5);
    int ones = 0;
    for (double v : w.w) ones += v == 1.0;
    CHECK(ones == 15);
    // Constant over time.
    for (int t = 1; t < w.rows(); ++t)
        for (int i = 0; i < 3; ++i) CHECK(w.at(t, i) == w.at(0, i));
}

TEST_CASE("grid sizes match the declared parameter sets") {
    std::vector<std::string> features(16);
    for (int i = 0; i < 16; ++i) features[i] = "f" + std::to_string(i);
    CHECK(enumerate_grid(StrategyKind::MOP, features).size() == 80);
    CHECK(enumerate_grid(StrategyKind::BAZ, features).size() == 64);
    CHECK(enumerate_grid(StrategyKind::REV, features).size() == 576);
}

TEST_CASE("select_top2 picks the best pair with distinct features") {
    auto mk = [](const std::string& f, int k, double sr) {
        ScoredCombo s;
        s.combo.kind = StrategyKind::MOP;
        s.combo.feature = f;
        s.combo.mop.k = k;
        s.train_sharpe = sr;
        return s;
    };
    std::vector<ScoredCombo> scored = {mk("fA", 5, 2.0), mk("fA", 21, 1.9), mk("fB", 63, 1.5)};
    auto sel = select_top2(scored);
    CHECK(sel.first.combo.feature == "fA");
    CHECK(sel.first.combo.mop.k == 5);
    CHECK(sel.second.combo.feature == "fB");

    // Permutation invariance.
    std::vector<ScoredCombo> shuffled = {scored[2], scored[0], scored[1]};
    auto sel2 = select_top2(shuffled);
    CHECK(sel2.first.combo.params_key() == sel.first.combo.params_key());
    CHECK(sel2.second.combo.feature == sel.second.combo.feature);

    // Tie at the top breaks lexicographically on (feature, params).
    std::vector<ScoredCombo> tied = {mk("fB", 5, 2.0), mk("fA", 21, 2.0), mk("fA", 5, 2.0)};
    auto sel3 = select_top2(tied);
    CHECK(sel3.first.combo.feature == "fA");
    CHECK(sel3.first.combo.mop.k == 5);
    CHECK(sel3.second.combo.feature == "fB");

    // A single-feature universe cannot diversify.
    std::vector<ScoredCombo> mono = {mk("fA", 5, 2.0), mk("fA", 21, 1.0)};
    CHECK_THROWS_AS(select_top2(mono), ConfigError);
}

TEST_CASE("rev spread adf filter flags stationary spreads per asset") {
    Rng rng(13);
    const int n = 600;
    // Asset X: open mean-reverts around the alt feature -> stationary spread.
    std::vector<double> fund = testutil::gbm_levels(rng, n, 0.0, 0.005);
    std::vector<double> open_x(n);
    const double phi = std::exp(-std::log(2.0) / 5.0);
    double u = 0.0;
    for (int t = 0; t < n; ++t) {
        u = phi * u + 0.03 * rng.normal();
        open_x[t] = fund[t] * std::exp(u);
    }
    auto panel = testutil::panel_from_levels({"X"}, {"open", "alt"}, {{open_x, fund}}, kDay0);
    PanelView view(panel);
    auto res = rev_spread_adf(view, 0, 1, 5, kDay0 + 30, kDay0 + n - 1);
    REQUIRE(res.size() == 1);
    CHECK_FALSE(res[0].degenerate);
    CHECK(res[0].pvalue <= 0.01);
}

TEST_CASE("apply_asset_filter zeroes excluded assets only") {
    WeightsMatrix w;
    w.first_day = kDay0;
    w.n_assets = 3;
    w.w = {1, -1, 1, 1, 1, -1};
    apply_asset_filter(w, {true, false, true});
    CHECK(w.at(0, 0) == 1.0);
    CHECK(w.at(0, 1) == 0.0);
    CHECK(w.at(1, 1) == 0.0);
    CHECK(w.at(1, 2) == -1.0);
}

TEST_CASE("panel view enforces its date bound") {
    std::vector<double> lv(50, 10.0);
    auto panel = testutil::panel_from_levels({"A"}, {"open"}, {{lv}}, kDay0);
    PanelView bounded(panel, 30);
    CHECK(bounded.level(29, 0, 0) == 10.0);
    CHECK_THROWS_AS(bounded.level(30, 0, 0), LookaheadViolation);
    // Weight construction that would peek beyond the bound aborts.
    CHECK_THROWS_AS(mop_weights(bounded, 0, MopParams{5}, kDay0 + 35, kDay0 + 45),
                    LookaheadViolation);
}

TEST_CASE("weights computed through a bounded view match the full view on the past") {
    Rng rng(29);
    auto levels = testutil::gbm_levels(rng, 300, 0.0, 0.03);
    auto panel = testutil::panel_from_levels({"A"}, {"f"}, {{levels}}, kDay0);
    PanelView full(panel), bounded(panel, 200);
    auto a = mop_weights(full, 0, MopParams{21}, kDay0 + 50, kDay0 + 198);
    auto b = mop_weights(bounded, 0, MopParams{21}, kDay0 + 50, kDay0 + 198);
    CHECK(a.w == b.w);
}

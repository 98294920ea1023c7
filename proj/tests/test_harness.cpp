#include <cmath>

#include "doctest.h"
#include "mfin/csv.hpp"
#include "mfin/errors.hpp"
#include "mfin/harness.hpp"
#include "test_util.hpp"

using namespace mfin;

TEST_CASE("split plan reproduces the reference calendar's four test spans") {
    auto cal = Calendar::daily_range(days_from_civil(2018, 1, 1), days_from_civil(2023, 3, 31));
    auto plan = make_splits(cal, days_from_civil(2019, 4, 1));
    REQUIRE(plan.size() == 4);
    const struct {
        int y0, y1;
    } spans[] = {{2019, 2020}, {2020, 2021}, {2021, 2022}, {2022, 2023}};
    for (int i = 0; i < 4; ++i) {
        CHECK(plan[i].test_start == days_from_civil(spans[i].y0, 4, 1));
        CHECK(plan[i].test_end == days_from_civil(spans[i].y1, 3, 31));
        CHECK_FALSE(plan[i].truncated);
        CHECK(plan[i].train_start == cal.front());
        CHECK(plan[i].train_end == plan[i].test_start - 1);
        // Validation is the last tenth of the training window.
        const auto train_len = plan[i].train_end - plan[i].train_start + 1;
        CHECK(plan[i].valid_start == plan[i].train_start + (train_len * 9) / 10);
    }
    CHECK(plan[0].test_label() == "2019-2020");
}

TEST_CASE("split plan edge cases") {
    // Two-year calendar, one test year.
    auto cal = Calendar::daily_range(days_from_civil(2020, 1, 1), days_from_civil(2021, 12, 31));
    auto plan = make_splits(cal, days_from_civil(2021, 1, 1));
    REQUIRE(plan.size() == 1);
    CHECK(plan[0].test_end == days_from_civil(2021, 12, 31));
    CHECK_FALSE(plan[0].truncated);

    // Final partial year is truncated and flagged.
    auto cal2 = Calendar::daily_range(days_from_civil(2020, 1, 1), days_from_civil(2022, 6, 30));
    auto plan2 = make_splits(cal2, days_from_civil(2021, 1, 1));
    REQUIRE(plan2.size() == 2);
    CHECK(plan2[1].test_end == days_from_civil(2022, 6, 30));
    CHECK(plan2[1].truncated);

    // First test start needs at least a year of training data.
    CHECK_THROWS_AS(make_splits(cal, days_from_civil(2020, 6, 1)), ConfigError);
}

TEST_CASE("realistic momentum run selects the trending feature in every split") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1400;
    spec.seed = 3;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 500);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);
    REQUIRE(plan.size() >= 2);

    auto res = run_realistic(panel, StrategyKind::MOP, cfg, plan);
    REQUIRE(res.selections.size() == plan.size());
    for (const auto& sel : res.selections) {
        REQUIRE_FALSE(sel.picks.empty());
        CHECK(sel.picks[0].combo.feature == "trend");
    }

    // Concatenated out-of-sample length equals the sum of test span lengths.
    std::int64_t expect = 0;
    for (const auto& s : plan) expect += s.test_end - s.test_start + 1;
    CHECK(res.backtest.series.size() == expect);
    CHECK(res.backtest.series.dates.front() == plan.front().test_start);
    CHECK(res.backtest.series.dates.back() == plan.back().test_end);

    // Deterministic across reruns.
    auto res2 = run_realistic(panel, StrategyKind::MOP, cfg, plan);
    CHECK(res2.backtest.series.net == res.backtest.series.net);
    for (std::size_t i = 0; i < res.selections.size(); ++i)
        CHECK(res2.selections[i].picks[0].combo.params_key() ==
              res.selections[i].picks[0].combo.params_key());
}

TEST_CASE("threaded grid scoring matches single-threaded") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 900;
    spec.seed = 5;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 450);
    const Day tradeable = first_tradeable_day(panel, 0);
    auto a = score_grid(panel, StrategyKind::MOP, cfg, tradeable,
                        panel.calendar.front() + 449, 1);
    auto b = score_grid(panel, StrategyKind::MOP, cfg, tradeable,
                        panel.calendar.front() + 449, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].combo.params_key() == b[i].combo.params_key());
        CHECK(a[i].train_sharpe.value_or(-1) == b[i].train_sharpe.value_or(-1));
    }
}

TEST_CASE("a single-feature grid degenerates to the best single pick") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1000;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 500);
    cfg.bic_features = {"trend"};  // one feature only
    auto plan = make_splits(panel.calendar, cfg.first_test_start);
    auto res = run_realistic(panel, StrategyKind::MOP, cfg, plan);
    for (const auto& sel : res.selections) {
        CHECK(sel.picks.size() == 1);
        CHECK(sel.picks[0].combo.feature == "trend");
    }
}

TEST_CASE("exploration is labeled ex-post and beats the realistic run in-sample") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1400;
    spec.seed = 11;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 500);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);

    auto realistic = run_realistic(panel, StrategyKind::MOP, cfg, plan);
    auto explored = run_exploration(panel, StrategyKind::MOP, cfg);
    CHECK(explored.ex_post);
    CHECK(explored.selections[0].test_label == "ex-post");

    const auto sr_real = sharpe(realistic.backtest.series.net);
    const auto sr_expl = sharpe(explored.backtest.series.net);
    REQUIRE(sr_real.has_value());
    REQUIRE(sr_expl.has_value());
    // Selection bias: optimizing picks on the evaluation window itself.
    CHECK(*sr_expl >= *sr_real - 1e-9);
}

TEST_CASE("cost sweep rows are non-increasing and anchored at the zero-cost Sharpe") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1200;
    spec.seed = 19;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 500);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);

    auto mop = run_realistic(panel, StrategyKind::MOP, cfg, plan);
    auto lo = run_long_only(panel, cfg, plan);
    auto rows = cost_sweep({&mop, &lo}, panel, cfg);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        REQUIRE(row.sharpe_by_cost.size() == cfg.cost_grid_bps.size());
        for (std::size_t c = 1; c < row.sharpe_by_cost.size(); ++c) {
            REQUIRE(row.sharpe_by_cost[c].has_value());
            CHECK(*row.sharpe_by_cost[c] <= *row.sharpe_by_cost[c - 1] + 1e-12);
        }
    }
    // The zero-cost column equals the headline Sharpe of the stored book.
    CHECK(*rows[0].sharpe_by_cost[0] ==
          doctest::Approx(*sharpe(mop.backtest.series.net)).epsilon(1e-12));

    // A hand-built constant-position book sweeps flat after inception.
    StrategyResult constant;
    constant.name = "const";
    const int open_idx = panel.feature_index("open");
    const auto returns = asset_returns(panel, open_idx);
    std::vector<double> pos(static_cast<std::size_t>(200) * panel.n_assets(), 0.1);
    constant.backtest = backtest_positions(plan.front().test_start - 1, panel.n_assets(),
                                           std::move(pos), returns, 0.0, "const");
    auto crow = cost_sweep({&constant}, panel, cfg);
    for (std::size_t c = 1; c < crow[0].sharpe_by_cost.size(); ++c) {
        // Only the inception day pays costs; Sharpe barely moves.
        CHECK(*crow[0].sharpe_by_cost[c] ==
              doctest::Approx(*crow[0].sharpe_by_cost[0]).epsilon(0.02));
    }
}

TEST_CASE("toy MFIN pipeline runs end to end with bounded weights") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 760;
    spec.n_assets = 2;
    spec.block = 150;
    spec.seed = 23;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 560);
    cfg.n_seeds = 2;
    cfg.mfin.fixed.seq_len = 40;
    cfg.mfin.fixed.max_epochs = 3;
    cfg.mfin.fixed.hb_max_epochs = 2;
    cfg.mfin.fixed.hb_max_trials = 2;
    cfg.mfin.space = MfinSearchSpace{{0.0}, {0.0}, {0.1}, {1e-2}, {4}, {2}, {3}};
    auto plan = make_splits(panel.calendar, cfg.first_test_start);

    auto dir = testutil::temp_dir("mfin_run");
    std::vector<MfinSplitArtifacts> artifacts;
    auto res = run_mfin(panel, cfg, plan, 0.0, dir, &artifacts);

    std::int64_t expect = 0;
    for (const auto& s : plan) expect += s.test_end - s.test_start + 1;
    CHECK(res.backtest.series.size() == expect);
    REQUIRE(artifacts.size() == plan.size());
    CHECK(artifacts[0].checkpoints.size() == 2);

    // Checkpoints reload to the same weights the ensemble averaged.
    auto m0 = load_model(artifacts[0].checkpoints[0]);
    auto m1 = load_model(artifacts[0].checkpoints[1]);
    CHECK(m0.hyper.hidden == 4);
    CHECK(m0.seed != m1.seed);

    // Rerun is deterministic, and worker threads must not change results.
    auto res2 = run_mfin(panel, cfg, plan, 0.0);
    CHECK(res2.backtest.series.net == res.backtest.series.net);
    auto cfg_mt = cfg;
    cfg_mt.threads = 3;
    auto res3 = run_mfin(panel, cfg_mt, plan, 0.0);
    CHECK(res3.backtest.series.net == res.backtest.series.net);
}

TEST_CASE("combined strategies and report tables") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1200;
    spec.seed = 29;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 500);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);

    auto mop = run_realistic(panel, StrategyKind::MOP, cfg, plan);
    auto baz = run_realistic(panel, StrategyKind::BAZ, cfg, plan);
    auto lo = run_long_only(panel, cfg, plan);
    auto cmb = combine_results({&mop, &baz}, panel, cfg, 0.0, "CMB");
    CHECK(cmb.backtest.series.size() > 0);

    auto tables = build_report({&mop, &baz, &cmb, &lo}, &lo);
    REQUIRE(tables.rows.size() == 4);
    CHECK(tables.rows[0].label == "MOP");
    CHECK(tables.rows[0].corr_to_benchmark.has_value());
    // Long-only row has no self-correlation entry.
    CHECK_FALSE(tables.rows[3].corr_to_benchmark.has_value());
    // Correlation matrix has unit diagonal.
    for (int i = 0; i < 4; ++i) CHECK(tables.corr_matrix[i * 4 + i] == 1.0);

    auto dir = testutil::temp_dir("report");
    write_metrics_csv(tables, dir / "metrics.csv");
    write_metrics_json(tables, dir / "metrics.json");
    write_corr_matrix_csv(tables, dir / "corr.csv");
    write_equity_csv({&mop, &baz, &cmb, &lo}, dir / "equity.csv");
    write_equity_svg({&mop, &lo}, dir / "equity.svg");
    write_selection_log({&mop, &baz}, dir / "selections.json");
    CHECK(std::filesystem::file_size(dir / "metrics.csv") > 100);
    CHECK(std::filesystem::file_size(dir / "equity.svg") > 200);

    // Single-strategy report: a one-by-one unit matrix.
    auto solo = build_report({&mop}, nullptr);
    REQUIRE(solo.corr_labels.size() == 1);
    CHECK(solo.corr_matrix[0] == 1.0);
}

TEST_CASE("series CSV round-trips bit-exactly") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 700;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 450);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);
    auto lo = run_long_only(panel, cfg, plan, 2.5e-4);

    auto dir = testutil::temp_dir("series_io");
    write_series_csv(lo.backtest.series, dir / "series_lo.csv");
    auto loaded = read_series_csv(dir / "series_lo.csv");
    REQUIRE(loaded.size() == lo.backtest.series.size());
    for (int i = 0; i < loaded.size(); ++i) {
        CHECK(loaded.dates[i] == lo.backtest.series.dates[i]);
        CHECK(loaded.net[i] == lo.backtest.series.net[i]);  // %.17g survives the trip
        CHECK(loaded.gross[i] == lo.backtest.series.gross[i]);
    }

    // Positions round-trip and re-cost identically.
    write_positions_csv(lo.backtest, panel.assets, dir / "positions_lo.csv");
    auto rebuilt = read_positions_csv(dir / "positions_lo.csv", panel, 0, 2.5e-4);
    REQUIRE(rebuilt.series.size() == lo.backtest.series.size());
    for (int i = 0; i < rebuilt.series.size(); ++i)
        CHECK(rebuilt.series.net[i] == doctest::Approx(lo.backtest.series.net[i]).epsilon(1e-15));

    // Equity of an all-zero stream stays at one.
    StrategyResult flat;
    flat.name = "flat";
    const auto returns = asset_returns(panel, 0);
    std::vector<double> zeros(static_cast<std::size_t>(50) * panel.n_assets(), 0.0);
    flat.backtest = backtest_positions(plan.front().test_start, panel.n_assets(),
                                       std::move(zeros), returns, 0.0, "flat");
    write_equity_csv({&flat}, dir / "flat.csv");
    auto t = read_csv(dir / "flat.csv");
    for (const auto& row : t.rows) CHECK(row[1] == "1");
}

TEST_CASE("breakeven identity holds for harness-produced books") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1100;
    spec.seed = 31;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 500);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);
    const auto returns = asset_returns(panel, 0);

    for (auto kind : {StrategyKind::MOP, StrategyKind::BAZ}) {
        auto res = run_realistic(panel, kind, cfg, plan);
        auto brk = breakeven_cost(res.backtest);
        REQUIRE(brk.has_value());
        auto rerun = backtest_positions(res.backtest.first_trade_day, res.backtest.n_assets,
                                        res.backtest.positions, returns, *brk, res.name);
        CHECK(std::abs(rerun.series.total_net()) < 1e-9);
    }
}

TEST_CASE("config round-trips through JSON with defaults intact") {
    FrameworkConfig cfg;
    cfg.assets = {"BTC", "ETH"};
    cfg.n_seeds = 4;
    cfg.mfin.hyper.hidden = 64;
    cfg.mfin.fixed.seq_len = 50;
    cfg.cost_grid_bps = {0.0, 5.0};

    auto dir = testutil::temp_dir("config_io");
    save_config(cfg, dir / "config.json");
    auto loaded = load_config(dir / "config.json");
    CHECK(loaded.assets == cfg.assets);
    CHECK(loaded.n_seeds == 4);
    CHECK(loaded.mfin.hyper.hidden == 64);
    CHECK(loaded.mfin.fixed.seq_len == 50);
    CHECK(loaded.cost_grid_bps == cfg.cost_grid_bps);
    CHECK(loaded.calendar_first == cfg.calendar_first);
    CHECK(loaded.all_features().size() == 22);
    CHECK(loaded.alt_features().size() == 16);

    // Hash is stable and sensitive to content.
    const auto h1 = file_hash(dir / "config.json");
    CHECK(h1 == file_hash(dir / "config.json"));
    loaded.n_seeds = 5;
    save_config(loaded, dir / "config2.json");
    CHECK(h1 != file_hash(dir / "config2.json"));
}

TEST_CASE("config loader rejects malformed input") {
    auto dir = testutil::temp_dir("config_bad");
    testutil::write_file(dir, "bad.json", "{ not json");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
    testutil::write_file(dir, "empty_assets.json", R"({"assets": []})");
    CHECK_THROWS_AS(load_config(dir / "empty_assets.json"), ConfigError);
    testutil::write_file(dir, "bad_date.json",
                         R"({"calendar": {"first": "2020-13-01"}})");
    CHECK_THROWS_AS(load_config(dir / "bad_date.json"), ConfigError);
}

TEST_CASE("identical runs write byte-identical reports") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 800;
    spec.seed = 41;
    auto panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(panel, panel.calendar.front() + 450);
    auto plan = make_splits(panel.calendar, cfg.first_test_start);

    auto dir = testutil::temp_dir("byte_identical");
    auto read_bytes = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    std::vector<std::string> first;
    for (int pass = 0; pass < 2; ++pass) {
        auto mop = run_realistic(panel, StrategyKind::MOP, cfg, plan);
        auto lo = run_long_only(panel, cfg, plan);
        auto tables = build_report({&mop, &lo}, &lo);
        write_metrics_csv(tables, dir / "metrics.csv");
        write_series_csv(mop.backtest.series, dir / "series.csv");
        write_corr_matrix_csv(tables, dir / "corr.csv");
        std::vector<std::string> bytes = {read_bytes(dir / "metrics.csv"),
                                          read_bytes(dir / "series.csv"),
                                          read_bytes(dir / "corr.csv")};
        if (pass == 0)
            first = bytes;
        else
            CHECK(first == bytes);
    }
}

TEST_CASE("snapshot tree loads wide sources and links trend segments") {
    auto dir = testutil::temp_dir("snapshot_tree");
    std::filesystem::create_directories(dir / "CMC");
    std::filesystem::create_directories(dir / "BIC");
    std::filesystem::create_directories(dir / "GT");
    testutil::write_file(dir / "CMC", "BTC.csv",
                         "date,open,close\n2021-01-01,100,101\n2021-01-02,102,103\n");
    testutil::write_file(dir / "BIC", "BTC.csv",
                         "date,tweets\n2021-01-01,5\n2021-01-02,6\n");
    // Two GT segments overlapping on 2021-01-02; second segment rescaled, so
    // the first must be adjusted by 40/20 = 2x.
    testutil::write_file(dir / "GT", "BTC_seg0.csv",
                         "date,value\n2021-01-01,10\n2021-01-02,20\n");
    testutil::write_file(dir / "GT", "BTC_seg1.csv",
                         "date,value\n2021-01-02,40\n2021-01-03,50\n");

    FrameworkConfig cfg;
    cfg.assets = {"BTC"};
    auto series = load_snapshot_tree(dir, cfg);
    REQUIRE(series.size() == 4);  // open, close, tweets, google_trends

    const RawSeries* gt = nullptr;
    for (const auto& s : series)
        if (s.feature == "google_trends") gt = &s;
    REQUIRE(gt != nullptr);
    REQUIRE(gt->observations.size() == 3);
    CHECK(gt->observations[0].value == doctest::Approx(20.0));  // 10 * 40/20
    CHECK(gt->observations[1].value == doctest::Approx(40.0));
    CHECK(gt->observations[2].value == doctest::Approx(50.0));

    std::filesystem::remove_all(dir / "CMC");
    std::filesystem::remove_all(dir / "BIC");
    std::filesystem::remove_all(dir / "GT");
    CHECK_THROWS_AS(load_snapshot_tree(dir, cfg), DataError);
}

TEST_CASE("perturbing future data never changes earlier selections or results") {
    testutil::DriftPanelSpec spec;
    spec.n_days = 1300;
    spec.seed = 53;
    auto base_panel = testutil::alternating_drift_panel(spec);
    auto cfg = testutil::drift_panel_config(base_panel, base_panel.calendar.front() + 500);
    auto plan = make_splits(base_panel.calendar, cfg.first_test_start);
    REQUIRE(plan.size() >= 2);

    auto base = run_realistic(base_panel, StrategyKind::MOP, cfg, plan);

    // Rebuild the panel with the final test span wildly corrupted. Every
    // selection is frozen before that span, so picks and all out-of-sample
    // rows before it must be bit-identical.
    const Day cut = plan.back().test_start;
    mfin::Rng rng(spec.seed);
    std::vector<std::string> assets;
    std::vector<std::vector<std::vector<double>>> levels(spec.n_assets);
    {
        // Reuse the generator, then corrupt in place.
        auto panel2 = testutil::alternating_drift_panel(spec);
        for (int i = 0; i < panel2.n_assets(); ++i) {
            assets.push_back(panel2.assets[i]);
            levels[i].resize(3);
            for (int j = 0; j < 3; ++j) {
                levels[i][j].resize(panel2.n_dates());
                for (int t = 0; t < panel2.n_dates(); ++t) {
                    double v = panel2.level(t, i, j);
                    if (panel2.calendar.days[t] >= cut) v *= (j == 0 ? 13.7 : 0.01);
                    levels[i][j][t] = v;
                }
            }
        }
    }
    auto corrupted = testutil::panel_from_levels(assets, {"open", "trend", "noise"}, levels,
                                                 base_panel.calendar.front());
    auto bumped = run_realistic(corrupted, StrategyKind::MOP, cfg, plan);

    REQUIRE(bumped.selections.size() == base.selections.size());
    for (std::size_t si = 0; si < base.selections.size(); ++si) {
        REQUIRE(bumped.selections[si].picks.size() == base.selections[si].picks.size());
        for (std::size_t p = 0; p < base.selections[si].picks.size(); ++p) {
            CHECK(bumped.selections[si].picks[p].combo.feature ==
                  base.selections[si].picks[p].combo.feature);
            CHECK(bumped.selections[si].picks[p].combo.params_key() ==
                  base.selections[si].picks[p].combo.params_key());
            CHECK(bumped.selections[si].picks[p].train_sharpe.value_or(-1) ==
                  base.selections[si].picks[p].train_sharpe.value_or(-1));
        }
    }
    for (int t = 0; t < base.backtest.series.size(); ++t) {
        if (base.backtest.series.dates[t] >= cut) break;
        CHECK(base.backtest.series.net[t] == bumped.backtest.series.net[t]);
    }
}

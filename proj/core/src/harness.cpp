#include "mfin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "mfin/csv.hpp"
#include "mfin/errors.hpp"

namespace mfin {

std::string Split::test_label() const {
    int y1, m, d, y2;
    civil_from_days(test_start, y1, m, d);
    civil_from_days(test_end, y2, m, d);
    return std::to_string(y1) + "-" + std::to_string(y2);
}

SplitPlan make_splits(const Calendar& calendar, Day first_test_start, int increment_years) {
    calendar.validate();
    if (increment_years < 1) throw ConfigError("make_splits: increment must be >= 1 year");
    const Day start = calendar.front();
    if (first_test_start - start < 365)
        throw ConfigError("make_splits: first test start leaves less than one year of "
                          "training data");
    if (first_test_start > calendar.back())
        throw ConfigError("make_splits: first test start beyond calendar");

    SplitPlan plan;
    Day test_start = first_test_start;
    while (test_start <= calendar.back()) {
        Split s;
        s.train_start = start;
        s.train_end = test_start - 1;
        const Day nominal_end = add_years(test_start, increment_years) - 1;
        s.test_start = test_start;
        s.test_end = std::min(nominal_end, calendar.back());
        s.truncated = nominal_end > calendar.back();
        const std::int64_t train_len = s.train_end - s.train_start + 1;
        s.valid_start = s.train_start + static_cast<Day>((train_len * 9) / 10);
        plan.push_back(s);
        test_start = add_years(test_start, increment_years);
    }
    return plan;
}

std::vector<RawSeries> load_snapshot_tree(const std::filesystem::path& data_dir,
                                          const FrameworkConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<RawSeries> all;
    const std::pair<Source, const char*> sources[] = {
        {Source::CMC, "CMC"}, {Source::BIC, "BIC"}, {Source::BC, "BC"}};
    for (const auto& [src, name] : sources) {
        const fs::path dir = data_dir / name;
        if (!fs::exists(dir)) continue;
        for (const auto& asset : cfg.assets) {
            const fs::path file = dir / (asset + ".csv");
            if (!fs::exists(file)) continue;
            auto series = load_csv(file, src, asset);
            for (auto& s : series) all.push_back(std::move(s));
        }
    }
    const fs::path gt = data_dir / "GT";
    if (fs::exists(gt)) {
        for (const auto& asset : cfg.assets) {
            std::vector<fs::path> segs;
            for (const auto& entry : fs::directory_iterator(gt)) {
                const std::string stem = entry.path().stem().string();
                if (stem.rfind(asset + "_seg", 0) == 0) segs.push_back(entry.path());
            }
            if (segs.empty()) continue;
            std::sort(segs.begin(), segs.end());
            std::vector<RawSeries> parts;
            for (const auto& p : segs) {
                auto loaded = load_csv(p, Source::GT, asset, "google_trends");
                parts.push_back(std::move(loaded.at(0)));
            }
            all.push_back(link_segments(parts));
        }
    }
    if (all.empty()) throw DataError("no snapshot files under " + data_dir.string());
    return all;
}

Day first_tradeable_day(const FactorPanel& panel, int open_feature) {
    for (int t = 0; t < panel.n_dates(); ++t) {
        bool all = true;
        for (int i = 0; i < panel.n_assets(); ++i)
            if (!panel.has_std(t, i, open_feature)) {
                all = false;
                break;
            }
        if (all) return panel.calendar.days[t] + 1;  // tradeable the next day
    }
    throw DataError("no date with defined volatility for every asset");
}

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&fn, &errors, w, n, workers]() {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Weights for one combo over [first_trade, last_trade], REV assets gated by
// the training-window stationarity filter.
WeightsMatrix combo_weights(const PanelView& view, const GridCombo& combo, int open_idx,
                            Day first_trade, Day last_trade,
                            const std::vector<bool>* rev_allowed) {
    const int feat = view.panel().feature_index(combo.feature);
    if (feat < 0) throw ConfigError("unknown feature " + combo.feature);
    switch (combo.kind) {
        case StrategyKind::MOP:
            return mop_weights(view, feat, combo.mop, first_trade, last_trade);
        case StrategyKind::BAZ:
            return baz_weights(view, feat, combo.baz, first_trade, last_trade);
        case StrategyKind::REV: {
            WeightsMatrix w =
                rev_weights(view, open_idx, feat, combo.rev, first_trade, last_trade);
            if (rev_allowed) apply_asset_filter(w, *rev_allowed);
            return w;
        }
        case StrategyKind::LongOnly:
            return long_only_weights(view, first_trade, last_trade);
    }
    throw ConfigError("unknown strategy kind");
}

std::vector<bool> rev_filter(const PanelView& view, const GridCombo& combo,
                             const FrameworkConfig& cfg, int open_idx, Day first, Day last) {
    const int feat = view.panel().feature_index(combo.feature);
    const auto adf = rev_spread_adf(view, open_idx, feat, combo.rev.k, first, last);
    std::vector<bool> allowed(adf.size());
    for (std::size_t i = 0; i < adf.size(); ++i)
        allowed[i] = !adf[i].degenerate && adf[i].pvalue <= cfg.adf_max_pvalue;
    return allowed;
}

bool any_allowed(const std::vector<bool>& allowed) {
    for (bool b : allowed)
        if (b) return true;
    return false;
}

// Top-two distinct-feature picks; degenerate grids fall back to the single
// best combo.
std::vector<ScoredCombo> pick_top(const std::vector<ScoredCombo>& scored) {
    std::vector<ScoredCombo> usable;
    for (const auto& s : scored)
        if (s.train_sharpe) usable.push_back(s);
    if (usable.empty()) throw ConfigError("no scoreable combos in the grid");
    try {
        const auto sel = select_top2(usable);
        return {sel.first, sel.second};
    } catch (const ConfigError&) {
        auto best = usable.front();
        for (const auto& s : usable)
            if (s.train_sharpe.value_or(-1e300) > best.train_sharpe.value_or(-1e300)) best = s;
        return {best};
    }
}

}  // namespace

std::vector<ScoredCombo> score_grid(const FactorPanel& panel, StrategyKind kind,
                                    const FrameworkConfig& cfg, Day score_start,
                                    Day train_end, int threads) {
    const int open_idx = panel.feature_index(cfg.open_feature);
    if (open_idx < 0) throw ConfigError("open feature missing from panel");
    const int bound = panel.calendar.index_of(train_end) + 1;
    if (bound <= 0) throw ConfigError("train end not on calendar");
    PanelView view(panel, bound);

    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    const VolEstimate vols = asset_vols(panel, open_idx);
    const auto grid = enumerate_grid(kind, cfg.alt_features());
    // Trading beyond train_end - 1 would need the return at train_end + 1.
    const Day last_score_trade = train_end - 1;

    std::vector<ScoredCombo> scored(grid.size());
    parallel_for(static_cast<int>(grid.size()), threads, [&](int gi) {
        const GridCombo& combo = grid[gi];
        ScoredCombo sc;
        sc.combo = combo;
        try {
            std::vector<bool> allowed;
            const std::vector<bool>* filter = nullptr;
            if (combo.kind == StrategyKind::REV) {
                allowed = rev_filter(view, combo, cfg, open_idx, panel.calendar.front(),
                                     train_end);
                if (!any_allowed(allowed)) {
                    scored[gi] = sc;  // unscoreable: every spread failed the test
                    return;
                }
                filter = &allowed;
            }
            const WeightsMatrix w =
                combo_weights(view, combo, open_idx, score_start, last_score_trade, filter);
            const PortfolioSeries series = portfolio_returns(w, returns, vols, 0.0,
                                                             cfg.sigma_target);
            sc.train_sharpe = sharpe(series.net);
        } catch (const LookaheadViolation&) {
            throw;  // a guard trip is a bug, never swallow it
        } catch (const std::exception&) {
            // combos that cannot produce a valid book score as unusable
        }
        scored[gi] = sc;
    });
    return scored;
}

StrategyResult run_realistic(const FactorPanel& panel, StrategyKind kind,
                             const FrameworkConfig& cfg, const SplitPlan& plan,
                             double cost_c) {
    if (plan.empty()) throw ConfigError("run_realistic: empty split plan");
    const int open_idx = panel.feature_index(cfg.open_feature);
    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    const VolEstimate vols = asset_vols(panel, open_idx);
    const Day tradeable = first_tradeable_day(panel, open_idx);

    StrategyResult result;
    result.name = kind_name(kind);

    std::vector<double> positions;
    Day first_trade = 0;
    for (std::size_t si = 0; si < plan.size(); ++si) {
        const Split& split = plan[si];
        const auto scored =
            score_grid(panel, kind, cfg, tradeable, split.train_end, cfg.threads);
        auto picks = pick_top(scored);

        SplitSelection sel;
        sel.split_index = static_cast<int>(si);
        sel.test_label = split.test_label();
        sel.picks = picks;
        result.selections.push_back(sel);

        // Evaluate the picks with full history; the stationarity filter stays
        // frozen at its training-window decision.
        PanelView full(panel);
        std::vector<StrategyBacktest> books;
        for (const auto& pick : picks) {
            std::vector<bool> allowed;
            const std::vector<bool>* filter = nullptr;
            if (pick.combo.kind == StrategyKind::REV) {
                allowed = rev_filter(full, pick.combo, cfg, open_idx,
                                     panel.calendar.front(), split.train_end);
                filter = &allowed;
            }
            const WeightsMatrix w = combo_weights(full, pick.combo, open_idx, tradeable,
                                                  split.test_end - 1, filter);
            books.push_back(
                run_weights(w, returns, vols, 0.0, cfg.sigma_target, result.name));
        }

        // Equal-weight pair at the scaled-position level over the test span:
        // trade dates test_start-1 .. test_end-1 earn returns on the span.
        const int NA = panel.n_assets();
        if (positions.empty()) first_trade = split.test_start - 1;
        for (Day d = split.test_start - 1; d <= split.test_end - 1; ++d) {
            for (int i = 0; i < NA; ++i) {
                double p = 0.0;
                for (const auto& bt : books) {
                    const int row = static_cast<int>(d - bt.first_trade_day);
                    p += bt.position(row, i);
                }
                positions.push_back(p / static_cast<double>(books.size()));
            }
        }
    }

    result.backtest = backtest_positions(first_trade, panel.n_assets(), std::move(positions),
                                         returns, cost_c, result.name);
    return result;
}

StrategyResult run_exploration(const FactorPanel& panel, StrategyKind kind,
                               const FrameworkConfig& cfg, double cost_c) {
    const int open_idx = panel.feature_index(cfg.open_feature);
    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    const VolEstimate vols = asset_vols(panel, open_idx);
    const Day tradeable = first_tradeable_day(panel, open_idx);
    const Day eval_end = panel.calendar.back() - 1;  // last trade needs a next-day return

    // Ex-post: the scoring window IS the evaluation window.
    const auto scored = score_grid(panel, kind, cfg, tradeable, eval_end, cfg.threads);

    // Re-score on the out-of-sample window only, so the picks optimize the
    // span the report shows (the deliberate overestimate).
    std::vector<ScoredCombo> oos_scored = scored;
    PanelView full(panel);
    for (auto& sc : oos_scored) {
        if (!sc.train_sharpe) continue;
        try {
            std::vector<bool> allowed;
            const std::vector<bool>* filter = nullptr;
            if (sc.combo.kind == StrategyKind::REV) {
                allowed = rev_filter(full, sc.combo, cfg, panel.feature_index(cfg.open_feature),
                                     panel.calendar.front(), eval_end);
                filter = &allowed;
            }
            const WeightsMatrix w = combo_weights(full, sc.combo, open_idx,
                                                  cfg.first_test_start - 1, eval_end, filter);
            const auto bt = run_weights(w, returns, vols, 0.0, cfg.sigma_target);
            sc.train_sharpe = sharpe(bt.series.net);
        } catch (const std::exception&) {
            sc.train_sharpe.reset();
        }
    }
    auto picks = pick_top(oos_scored);

    StrategyResult result;
    result.name = kind_name(kind);
    result.ex_post = true;
    SplitSelection sel;
    sel.split_index = -1;
    sel.test_label = "ex-post";
    sel.picks = picks;
    result.selections.push_back(sel);

    std::vector<StrategyBacktest> books;
    std::vector<const StrategyBacktest*> ptrs;
    for (const auto& pick : picks) {
        std::vector<bool> allowed;
        const std::vector<bool>* filter = nullptr;
        if (pick.combo.kind == StrategyKind::REV) {
            allowed = rev_filter(full, pick.combo, cfg, open_idx, panel.calendar.front(),
                                 eval_end);
            filter = &allowed;
        }
        const WeightsMatrix w =
            combo_weights(full, pick.combo, open_idx, tradeable, eval_end, filter);
        books.push_back(run_weights(w, returns, vols, 0.0, cfg.sigma_target, result.name));
    }
    for (const auto& b : books) ptrs.push_back(&b);

    // Slice the pair book to the reporting window.
    const int NA = panel.n_assets();
    std::vector<double> positions;
    for (Day d = cfg.first_test_start - 1; d <= eval_end; ++d)
        for (int i = 0; i < NA; ++i) {
            double p = 0.0;
            for (const auto& bt : books) p += bt.position(static_cast<int>(d - bt.first_trade_day), i);
            positions.push_back(p / static_cast<double>(books.size()));
        }
    result.backtest = backtest_positions(cfg.first_test_start - 1, NA, std::move(positions),
                                         returns, cost_c, result.name);
    return result;
}

StrategyResult run_long_only(const FactorPanel& panel, const FrameworkConfig& cfg,
                             const SplitPlan& plan, double cost_c) {
    if (plan.empty()) throw ConfigError("run_long_only: empty split plan");
    const int open_idx = panel.feature_index(cfg.open_feature);
    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    const VolEstimate vols = asset_vols(panel, open_idx);
    const Day tradeable = first_tradeable_day(panel, open_idx);

    PanelView view(panel);
    const WeightsMatrix w = long_only_weights(view, tradeable, plan.back().test_end - 1);
    const auto bt = run_weights(w, returns, vols, 0.0, cfg.sigma_target, "LongOnly");

    const int NA = panel.n_assets();
    std::vector<double> positions;
    for (Day d = plan.front().test_start - 1; d <= plan.back().test_end - 1; ++d)
        for (int i = 0; i < NA; ++i)
            positions.push_back(bt.position(static_cast<int>(d - bt.first_trade_day), i));

    StrategyResult result;
    result.name = "LongOnly";
    result.backtest = backtest_positions(plan.front().test_start - 1, NA,
                                         std::move(positions), returns, cost_c, "LongOnly");
    return result;
}

StrategyResult combine_results(const std::vector<const StrategyResult*>& components,
                               const FactorPanel& panel, const FrameworkConfig& cfg,
                               double cost_c, const std::string& name) {
    const int open_idx = panel.feature_index(cfg.open_feature);
    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    std::vector<const StrategyBacktest*> books;
    for (const auto* c : components) books.push_back(&c->backtest);
    StrategyResult result;
    result.name = name;
    result.backtest =
        combine_strategies(books, returns, cost_c, cfg.sigma_target, name);
    for (const auto* c : components)
        for (const auto& sel : c->selections) result.selections.push_back(sel);
    return result;
}

StrategyResult run_mfin(const FactorPanel& panel, const FrameworkConfig& cfg,
                        const SplitPlan& plan, double cost_c,
                        const std::filesystem::path& out_dir,
                        std::vector<MfinSplitArtifacts>* artifacts) {
    if (plan.empty()) throw ConfigError("run_mfin: empty split plan");
    const int open_idx = panel.feature_index(cfg.open_feature);
    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    const VolEstimate vols = asset_vols(panel, open_idx);
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

    const int T = cfg.mfin.fixed.seq_len;
    const int warm_rows = 30;  // extra rows ahead of the test span to warm scaling state

    StrategyResult result;
    result.name = "MFIN";
    std::vector<double> positions;
    Day first_trade = 0;

    for (std::size_t si = 0; si < plan.size(); ++si) {
        const Split& split = plan[si];

        // Training rows: targets two days forward must stay inside train.
        const int train_first = panel.calendar.index_of(split.train_start);
        const int train_last = panel.calendar.index_of(split.train_end) - 2;
        if (train_first < 0 || train_last <= train_first)
            throw ConfigError("run_mfin: split not on calendar");
        // Skip the leading unavailable region.
        int row0 = train_first;
        const int open_i = open_idx;
        for (; row0 < train_last; ++row0) {
            bool ok = true;
            for (int i = 0; i < panel.n_assets(); ++i)
                if (!panel.has_std(row0, i, open_i)) ok = false;
            if (ok) break;
        }
        const int n_rows = train_last - row0 + 1;
        if (n_rows < 4 * T / 2)
            throw ConfigError("run_mfin: training window too short for sequence length");
        const ModelInputs train_inputs =
            build_model_inputs(panel, row0, n_rows, open_idx, cfg.sigma_target);

        MfinConfig model_cfg = cfg.mfin;
        std::uint64_t hb_seed = cfg.base_seed * 1000003ull + si;
        const auto hb = hyperband_search(model_cfg, train_inputs, hb_seed, cfg.threads);
        model_cfg.hyper = hb.best;

        MfinSplitArtifacts art;
        art.split_index = static_cast<int>(si);
        art.chosen = hb.best;

        // Seed ensemble at the chosen configuration.
        std::vector<MfinModel> models(cfg.n_seeds);
        std::vector<std::vector<TrainLogRow>> logs(cfg.n_seeds);
        parallel_for(cfg.n_seeds, cfg.threads, [&](int s) {
            auto tr = train_mfin(model_cfg, train_inputs,
                                 cfg.base_seed + 7919ull * (si + 1) + s);
            models[s] = std::move(tr.model);
            logs[s] = std::move(tr.log);
        });
        art.first_seed_log = logs.empty() ? std::vector<TrainLogRow>{} : logs[0];

        // Evaluation rows: sequence context plus scale warm-up ahead of the
        // test span. Trade dates run test_start-1-warm .. test_end-1, so the
        // net series covers the span; output rows sit one day before trades.
        const int test_first = panel.calendar.index_of(split.test_start);
        const int test_last = panel.calendar.index_of(split.test_end);
        const int first_trade_idx = std::max(row0 + 1, test_first - 1 - warm_rows);
        const int eval_row0 = std::max(row0, first_trade_idx - 1 - (T - 1));
        const int eval_rows = test_last - 1 - eval_row0;  // last row = test_end - 2
        const ModelInputs eval_inputs =
            build_model_inputs(panel, eval_row0, eval_rows, open_idx, cfg.sigma_target);
        const int first_out_row = first_trade_idx - 1 - eval_row0;

        std::vector<WeightsMatrix> seed_weights(models.size());
        parallel_for(static_cast<int>(models.size()), cfg.threads, [&](int s) {
            seed_weights[s] = mfin_weights(models[s], eval_inputs, std::max(0, first_out_row));
        });
        const WeightsMatrix ensemble = ensemble_average(seed_weights);

        if (!out_dir.empty()) {
            for (std::size_t s = 0; s < models.size(); ++s) {
                auto path = out_dir / ("checkpoint_split" + std::to_string(si) + "_seed" +
                                       std::to_string(s) + ".json");
                save_model(models[s], path);
                art.checkpoints.push_back(path);
            }
            std::ofstream log(out_dir / ("training_split" + std::to_string(si) + ".csv"));
            log << "epoch,train_loss,valid_loss,lr\n";
            for (const auto& row : logs[0])
                log << row.epoch << ',' << format_double(row.train_loss) << ','
                    << format_double(row.valid_loss) << ',' << format_double(row.learning_rate)
                    << "\n";
        }
        if (artifacts) artifacts->push_back(art);

        const auto bt =
            run_weights(ensemble, returns, vols, 0.0, cfg.sigma_target, "MFIN");
        if (positions.empty()) first_trade = split.test_start - 1;
        for (Day d = split.test_start - 1; d <= split.test_end - 1; ++d) {
            const int row = static_cast<int>(d - bt.first_trade_day);
            for (int i = 0; i < panel.n_assets(); ++i)
                positions.push_back(bt.position(row, i));
        }

        SplitSelection sel;
        sel.split_index = static_cast<int>(si);
        sel.test_label = split.test_label();
        ScoredCombo pseudo;
        pseudo.combo.kind = StrategyKind::LongOnly;  // placeholder kind, label via feature
        pseudo.combo.feature = hb.best.key();
        pseudo.train_sharpe = -hb.best_valid;
        sel.picks.push_back(pseudo);
        result.selections.push_back(sel);
    }

    result.backtest = backtest_positions(first_trade, panel.n_assets(), std::move(positions),
                                         returns, cost_c, "MFIN");
    return result;
}

std::vector<CostSweepRow> cost_sweep(const std::vector<const StrategyResult*>& strategies,
                                     const FactorPanel& panel, const FrameworkConfig& cfg) {
    const int open_idx = panel.feature_index(cfg.open_feature);
    const ReturnsMatrix returns = asset_returns(panel, open_idx);
    std::vector<CostSweepRow> rows;
    for (const auto* s : strategies) {
        CostSweepRow row;
        row.name = s->name;
        double total_turnover = 0.0;
        for (double tv : s->backtest.series.turnover) total_turnover += tv;
        row.zero_turnover = total_turnover <= 0.0;
        for (double bps : cfg.cost_grid_bps) {
            const auto bt =
                backtest_positions(s->backtest.first_trade_day, s->backtest.n_assets,
                                   s->backtest.positions, returns, bps * 1e-4, s->name);
            row.sharpe_by_cost.push_back(sharpe(bt.series.net));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---- persistence ----

void write_series_csv(const PortfolioSeries& series, const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"date", "gross", "net", "turnover", "scale_factor"};
    for (int i = 0; i < series.size(); ++i)
        t.rows.push_back({format_date(series.dates[i]), format_double(series.gross[i], 17),
                          format_double(series.net[i], 17),
                          format_double(series.turnover[i], 17),
                          format_double(series.scale_factor[i], 17)});
    write_csv(path, t);
}

PortfolioSeries read_series_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header != std::vector<std::string>{"date", "gross", "net", "turnover",
                                             "scale_factor"})
        throw DataError("unexpected series header in " + path.string());
    PortfolioSeries s;
    s.stage = ScalingStage::DoublyScaled;
    for (const auto& row : t.rows) {
        Day d;
        double g, n, to, sf;
        if (!parse_date(row[0], d) || !parse_double(row[1], g) || !parse_double(row[2], n) ||
            !parse_double(row[3], to) || !parse_double(row[4], sf))
            throw DataError("malformed series row in " + path.string());
        s.dates.push_back(d);
        s.gross.push_back(g);
        s.net.push_back(n);
        s.turnover.push_back(to);
        s.scale_factor.push_back(sf);
    }
    return s;
}

void write_positions_csv(const StrategyBacktest& bt, const std::vector<std::string>& assets,
                         const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"date"};
    for (const auto& a : assets) t.header.push_back(a);
    for (int r = 0; r < bt.rows(); ++r) {
        std::vector<std::string> row = {format_date(bt.first_trade_day + r)};
        for (int i = 0; i < bt.n_assets; ++i)
            row.push_back(format_double(bt.position(r, i), 17));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

StrategyBacktest read_positions_csv(const std::filesystem::path& path,
                                    const FactorPanel& panel, int open_feature,
                                    double cost_c) {
    const CsvTable t = read_csv(path);
    if (t.header.empty() || t.header[0] != "date" || t.rows.empty())
        throw DataError("unexpected positions file " + path.string());
    const int NA = static_cast<int>(t.header.size()) - 1;
    Day first;
    if (!parse_date(t.rows[0][0], first)) throw DataError("bad date in " + path.string());
    std::vector<double> positions;
    positions.reserve(t.rows.size() * NA);
    for (const auto& row : t.rows)
        for (int i = 0; i < NA; ++i) {
            double v;
            if (!parse_double(row[i + 1], v))
                throw DataError("bad position value in " + path.string());
            positions.push_back(v);
        }
    const ReturnsMatrix returns = asset_returns(panel, open_feature);
    return backtest_positions(first, NA, std::move(positions), returns, cost_c,
                              path.stem().string());
}

void write_selection_log(const std::vector<const StrategyResult*>& strategies,
                         const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto* s : strategies) {
        for (const auto& sel : s->selections) {
            nlohmann::json picks = nlohmann::json::array();
            for (const auto& p : sel.picks)
                picks.push_back({{"feature", p.combo.feature},
                                 {"params", p.combo.params_key()},
                                 {"train_sharpe",
                                  p.train_sharpe ? nlohmann::json(*p.train_sharpe)
                                                 : nlohmann::json()}});
            j.push_back({{"strategy", s->name},
                         {"test_set", sel.test_label},
                         {"ex_post", s->ex_post},
                         {"picks", picks}});
        }
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

ReportTables build_report(const std::vector<const StrategyResult*>& strategies,
                          const StrategyResult* benchmark) {
    ReportTables tables;
    for (const auto* s : strategies) {
        std::span<const double> bench;
        std::vector<double> aligned;
        if (benchmark && benchmark != s) {
            // Align the benchmark on this strategy's dates.
            const auto& bs = benchmark->backtest.series;
            aligned.reserve(s->backtest.series.size());
            bool ok = true;
            for (Day d : s->backtest.series.dates) {
                const auto it =
                    std::lower_bound(bs.dates.begin(), bs.dates.end(), d);
                if (it == bs.dates.end() || *it != d) {
                    ok = false;
                    break;
                }
                aligned.push_back(bs.net[it - bs.dates.begin()]);
            }
            if (ok) bench = aligned;
        }
        auto rep = compute_metrics(s->backtest.series.net, s->name, bench);
        rep.breakeven_bps = breakeven_cost_bps(s->backtest);
        tables.rows.push_back(std::move(rep));
    }

    // Pairwise correlation matrix on the common overlap.
    const int n = static_cast<int>(strategies.size());
    tables.corr_labels.resize(n);
    tables.corr_matrix.assign(static_cast<std::size_t>(n) * n, 1.0);
    for (int a = 0; a < n; ++a) tables.corr_labels[a] = strategies[a]->name;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const auto& sa = strategies[a]->backtest.series;
            const auto& sb = strategies[b]->backtest.series;
            std::vector<double> xa, xb;
            for (int i = 0; i < sa.size(); ++i) {
                const auto it = std::lower_bound(sb.dates.begin(), sb.dates.end(), sa.dates[i]);
                if (it != sb.dates.end() && *it == sa.dates[i]) {
                    xa.push_back(sa.net[i]);
                    xb.push_back(sb.net[it - sb.dates.begin()]);
                }
            }
            if (xa.size() >= 2) {
                const auto c = correlation(xa, xb);
                tables.corr_matrix[static_cast<std::size_t>(a) * n + b] = c.pearson;
                tables.corr_matrix[static_cast<std::size_t>(b) * n + a] = c.spearman;
            }
        }
    return tables;
}

namespace {

std::string opt_str(const std::optional<double>& v, double scale = 1.0, int precision = 6) {
    if (!v) return "inf";
    return format_double(*v * scale, precision);
}

}  // namespace

void write_metrics_csv(const ReportTables& tables, const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"strategy", "MAR_pct", "HR_pct",  "PNL",     "Sharpe", "Sortino", "Calmar",
                "VOL_pct",  "MDD_pct", "MDD_sigma", "CORR_pct", "BRK_bps", "PSR_pct",
                "MTR_days", "days"};
    for (const auto& r : tables.rows) {
        std::vector<std::string> row;
        row.push_back(r.label);
        row.push_back(format_double(r.mar * 100.0, 6));
        row.push_back(format_double(r.hit_rate * 100.0, 6));
        row.push_back(opt_str(r.pnl_ratio));
        row.push_back(opt_str(r.sharpe));
        row.push_back(opt_str(r.sortino));
        row.push_back(opt_str(r.calmar));
        row.push_back(format_double(r.vol * 100.0, 6));
        row.push_back(format_double(r.mdd.pct * 100.0, 6));
        row.push_back(format_double(r.mdd.sigma_mult, 6));
        row.push_back(r.corr_to_benchmark
                          ? format_double(r.corr_to_benchmark->pearson * 100.0, 6)
                          : "-");
        row.push_back(opt_str(r.breakeven_bps));
        row.push_back(opt_str(r.psr, 100.0));
        row.push_back(r.mtr_days ? std::to_string(*r.mtr_days) : "inf");
        row.push_back(std::to_string(r.n_days));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

void write_metrics_json(const ReportTables& tables, const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    auto put = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json();
    };
    for (const auto& r : tables.rows) {
        nlohmann::json row = {{"strategy", r.label},
                              {"days", r.n_days},
                              {"mar", r.mar},
                              {"vol", r.vol},
                              {"mdd_pct", r.mdd.pct},
                              {"mdd_sigma", r.mdd.sigma_mult},
                              {"sharpe", put(r.sharpe)},
                              {"sortino", put(r.sortino)},
                              {"calmar", put(r.calmar)},
                              {"hit_rate", r.hit_rate},
                              {"pnl_ratio", put(r.pnl_ratio)},
                              {"breakeven_bps", put(r.breakeven_bps)},
                              {"psr", put(r.psr)}};
        row["mtr_days"] = r.mtr_days ? nlohmann::json(*r.mtr_days) : nlohmann::json();
        if (r.corr_to_benchmark)
            row["corr"] = {{"pearson", r.corr_to_benchmark->pearson},
                           {"spearman", r.corr_to_benchmark->spearman}};
        j.push_back(std::move(row));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_corr_matrix_csv(const ReportTables& tables, const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"strategy"};
    for (const auto& l : tables.corr_labels) t.header.push_back(l);
    const int n = static_cast<int>(tables.corr_labels.size());
    for (int a = 0; a < n; ++a) {
        std::vector<std::string> row = {tables.corr_labels[a]};
        for (int b = 0; b < n; ++b)
            row.push_back(format_double(tables.corr_matrix[static_cast<std::size_t>(a) * n + b], 6));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

void write_equity_csv(const std::vector<const StrategyResult*>& strategies,
                      const std::filesystem::path& path) {
    // Compounded equity curves on the union calendar (flat before a
    // strategy's first date).
    Day first = strategies.front()->backtest.series.dates.front();
    Day last = strategies.front()->backtest.series.dates.back();
    for (const auto* s : strategies) {
        first = std::min(first, s->backtest.series.dates.front());
        last = std::max(last, s->backtest.series.dates.back());
    }
    CsvTable t;
    t.header = {"date"};
    for (const auto* s : strategies) t.header.push_back(s->name);
    std::vector<double> equity(strategies.size(), 1.0);
    for (Day d = first; d <= last; ++d) {
        std::vector<std::string> row = {format_date(d)};
        for (std::size_t k = 0; k < strategies.size(); ++k) {
            const auto& s = strategies[k]->backtest.series;
            const auto it = std::lower_bound(s.dates.begin(), s.dates.end(), d);
            if (it != s.dates.end() && *it == d) equity[k] *= 1.0 + s.net[it - s.dates.begin()];
            row.push_back(format_double(equity[k], 12));
        }
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

void write_equity_svg(const std::vector<const StrategyResult*>& strategies,
                      const std::filesystem::path& path) {
    static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2"};
    Day first = strategies.front()->backtest.series.dates.front();
    Day last = strategies.front()->backtest.series.dates.back();
    double lo = 1.0, hi = 1.0;
    std::vector<std::vector<double>> curves;
    for (const auto* s : strategies) {
        first = std::min(first, s->backtest.series.dates.front());
        last = std::max(last, s->backtest.series.dates.back());
    }
    for (const auto* s : strategies) {
        std::vector<double> curve;
        double eq = 1.0;
        for (Day d = first; d <= last; ++d) {
            const auto& ser = s->backtest.series;
            const auto it = std::lower_bound(ser.dates.begin(), ser.dates.end(), d);
            if (it != ser.dates.end() && *it == d) eq *= 1.0 + ser.net[it - ser.dates.begin()];
            curve.push_back(eq);
            lo = std::min(lo, eq);
            hi = std::max(hi, eq);
        }
        curves.push_back(std::move(curve));
    }
    const double wpx = 960, hpx = 480, pad = 50;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << wpx << "\" height=\""
        << hpx << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const int n_days = static_cast<int>(last - first + 1);
    for (std::size_t k = 0; k < curves.size(); ++k) {
        out << "<polyline fill=\"none\" stroke=\"" << kColors[k % 7]
            << "\" stroke-width=\"1.5\" points=\"";
        for (int i = 0; i < n_days; ++i) {
            const double x = pad + (wpx - 2 * pad) * i / std::max(1, n_days - 1);
            const double y =
                hpx - pad - (hpx - 2 * pad) * (curves[k][i] - lo) / std::max(1e-12, hi - lo);
            out << format_double(x, 6) << ',' << format_double(y, 6) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << pad + 8 << "\" y=\"" << pad + 16 + 16 * k << "\" fill=\""
            << kColors[k % 7] << "\" font-size=\"13\">" << strategies[k]->name << "</text>\n";
    }
    out << "</svg>\n";
}

void write_cost_sweep_csv(const std::vector<CostSweepRow>& rows,
                          const std::vector<double>& grid_bps,
                          const std::filesystem::path& path) {
    CsvTable t;
    t.header = {"strategy"};
    for (double c : grid_bps) t.header.push_back("sharpe_at_" + format_double(c, 6) + "bps");
    t.header.push_back("note");
    for (const auto& r : rows) {
        std::vector<std::string> row = {r.name};
        for (const auto& s : r.sharpe_by_cost) row.push_back(opt_str(s));
        row.push_back(r.zero_turnover ? "zero-turnover" : "");
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j = {{"config_hash", manifest.config_hash},
                        {"data_hash", manifest.data_hash},
                        {"base_seed", manifest.base_seed},
                        {"n_seeds", manifest.n_seeds},
                        {"strategies", manifest.strategies},
                        {"cost_grid_bps", manifest.cost_grid_bps}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace mfin

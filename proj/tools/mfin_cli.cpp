#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfin/config.hpp"
#include "mfin/csv.hpp"
#include "mfin/errors.hpp"
#include "mfin/harness.hpp"
#include "mfin/ingest.hpp"
#include "mfin/mfin.hpp"

namespace fs = std::filesystem;
using namespace mfin;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::uint64_t seed = 0;  // overrides config when nonzero
    int threads = 0;         // overrides config when nonzero
};

FrameworkConfig resolve_config(const GlobalArgs& g) {
    FrameworkConfig cfg;
    if (!g.config_path.empty()) cfg = load_config(g.config_path);
    if (g.seed) cfg.base_seed = g.seed;
    if (g.threads) cfg.threads = g.threads;
    return cfg;
}

FactorPanel load_or_build_panel(const GlobalArgs& g, const std::string& panel_dir) {
    const fs::path dir = panel_dir.empty() ? fs::path(g.out_dir) / "panel" : fs::path(panel_dir);
    if (!fs::exists(dir / "manifest.json"))
        throw DataError("panel not found at " + dir.string() + " (run `mfin ingest` first)");
    return load_panel(dir);
}

RunManifest make_manifest(const GlobalArgs& g, const FrameworkConfig& cfg,
                          const std::string& panel_dir,
                          const std::vector<std::string>& strategies) {
    RunManifest m;
    m.config_hash = g.config_path.empty() ? 0 : file_hash(g.config_path);
    const fs::path dir = panel_dir.empty() ? fs::path(g.out_dir) / "panel" : fs::path(panel_dir);
    m.data_hash = file_hash(dir / "manifest.json");
    m.base_seed = cfg.base_seed;
    m.n_seeds = cfg.n_seeds;
    m.strategies = strategies;
    m.cost_grid_bps = cfg.cost_grid_bps;
    return m;
}

void write_strategy_outputs(const StrategyResult& s, const FactorPanel& panel,
                            const fs::path& out) {
    write_series_csv(s.backtest.series, out / ("series_" + s.name + ".csv"));
    write_positions_csv(s.backtest, panel.assets, out / ("positions_" + s.name + ".csv"));
}

int cmd_ingest(const GlobalArgs& g) {
    const auto cfg = resolve_config(g);
    const auto snapshots = load_snapshot_tree(g.data_dir, cfg);
    const auto calendar = Calendar::daily_range(cfg.calendar_first, cfg.calendar_last);
    const auto panel = build_panel(snapshots, calendar, cfg.assets, cfg.all_features(),
                                   MissingPolicy::NeutralFill);
    const fs::path out = fs::path(g.out_dir) / "panel";
    save_panel(panel, out);
    std::cout << "panel: " << panel.n_assets() << " assets x " << panel.n_features()
              << " features x " << panel.n_dates() << " days -> " << out.string() << "\n";
    return 0;
}

int cmd_backtest(const GlobalArgs& g, const std::string& panel_dir,
                 const std::string& mfin_positions) {
    const auto cfg = resolve_config(g);
    const auto panel = load_or_build_panel(g, panel_dir);
    const auto plan = make_splits(panel.calendar, cfg.first_test_start);
    const fs::path out = g.out_dir;
    fs::create_directories(out);

    std::vector<StrategyResult> owned;
    owned.push_back(run_realistic(panel, StrategyKind::MOP, cfg, plan));
    owned.push_back(run_realistic(panel, StrategyKind::BAZ, cfg, plan));
    owned.push_back(run_realistic(panel, StrategyKind::REV, cfg, plan));
    owned.push_back(
        combine_results({&owned[0], &owned[1], &owned[2]}, panel, cfg, 0.0, "CMB"));
    owned.push_back(run_long_only(panel, cfg, plan));

    if (!mfin_positions.empty()) {
        StrategyResult mfin_res;
        mfin_res.name = "MFIN";
        mfin_res.backtest =
            read_positions_csv(mfin_positions, panel, panel.feature_index(cfg.open_feature), 0.0);
        mfin_res.backtest.label = "MFIN";
        owned.push_back(std::move(mfin_res));
        owned.push_back(combine_results({&owned[3], &owned.back()}, panel, cfg, 0.0,
                                        "CMB+MFIN"));
    }

    std::vector<const StrategyResult*> all;
    std::vector<std::string> names;
    for (const auto& s : owned) {
        all.push_back(&s);
        names.push_back(s.name);
    }
    const StrategyResult* benchmark = nullptr;
    for (const auto& s : owned)
        if (s.name == "LongOnly") benchmark = &s;

    for (const auto& s : owned) write_strategy_outputs(s, panel, out);
    write_selection_log(all, out / "selections.json");
    const auto tables = build_report(all, benchmark);
    write_metrics_csv(tables, out / "metrics.csv");
    write_metrics_json(tables, out / "metrics.json");
    write_corr_matrix_csv(tables, out / "corr_matrix.csv");
    write_equity_csv(all, out / "equity.csv");
    write_manifest(make_manifest(g, cfg, panel_dir, names), out / "run_manifest.json");

    for (const auto& r : tables.rows)
        std::printf("%-10s sharpe=%8s  brk=%8s bps  days=%d\n", r.label.c_str(),
                    r.sharpe ? format_double(*r.sharpe, 4).c_str() : "n/a",
                    r.breakeven_bps ? format_double(*r.breakeven_bps, 4).c_str() : "n/a",
                    r.n_days);
    return 0;
}

int cmd_explore(const GlobalArgs& g, const std::string& panel_dir) {
    const auto cfg = resolve_config(g);
    const auto panel = load_or_build_panel(g, panel_dir);
    const fs::path out = g.out_dir;
    fs::create_directories(out);

    std::vector<StrategyResult> owned;
    for (auto kind : {StrategyKind::MOP, StrategyKind::BAZ, StrategyKind::REV})
        owned.push_back(run_exploration(panel, kind, cfg));

    std::vector<const StrategyResult*> all;
    for (const auto& s : owned) all.push_back(&s);
    write_selection_log(all, out / "exploration_selections.json");
    const auto tables = build_report(all, nullptr);
    write_metrics_csv(tables, out / "exploration_metrics.csv");

    std::cout << "ex-post exploration picks (not implementable without lookahead):\n";
    for (const auto& s : owned)
        for (const auto& p : s.selections[0].picks)
            std::printf("%-4s %-22s %-20s sharpe=%s\n", s.name.c_str(),
                        p.combo.feature.c_str(), p.combo.params_key().c_str(),
                        p.train_sharpe ? format_double(*p.train_sharpe, 4).c_str() : "n/a");
    return 0;
}

int cmd_train_mfin(const GlobalArgs& g, const std::string& panel_dir) {
    const auto cfg = resolve_config(g);
    const auto panel = load_or_build_panel(g, panel_dir);
    const auto plan = make_splits(panel.calendar, cfg.first_test_start);
    const fs::path out = g.out_dir;
    fs::create_directories(out / "mfin");

    std::vector<MfinSplitArtifacts> artifacts;
    auto res = run_mfin(panel, cfg, plan, 0.0, out / "mfin", &artifacts);
    write_strategy_outputs(res, panel, out);

    auto lo = run_long_only(panel, cfg, plan);
    const auto tables = build_report({&res, &lo}, &lo);
    write_metrics_csv(tables, out / "mfin_metrics.csv");
    write_manifest(make_manifest(g, cfg, panel_dir, {"MFIN"}), out / "run_manifest.json");

    for (const auto& art : artifacts)
        std::printf("split %d: %s (%zu checkpoints)\n", art.split_index,
                    art.chosen.key().c_str(), art.checkpoints.size());
    const auto& r = tables.rows[0];
    std::printf("MFIN sharpe=%s brk=%s bps over %d days\n",
                r.sharpe ? format_double(*r.sharpe, 4).c_str() : "n/a",
                r.breakeven_bps ? format_double(*r.breakeven_bps, 4).c_str() : "n/a", r.n_days);
    return 0;
}

int cmd_cost_sweep(const GlobalArgs& g, const std::string& panel_dir,
                   std::vector<std::string> position_files) {
    const auto cfg = resolve_config(g);
    const auto panel = load_or_build_panel(g, panel_dir);
    const fs::path out = g.out_dir;
    fs::create_directories(out);

    if (position_files.empty()) {
        for (const auto& entry : fs::directory_iterator(out)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("positions_", 0) == 0 && entry.path().extension() == ".csv")
                position_files.push_back(entry.path().string());
        }
        std::sort(position_files.begin(), position_files.end());
    }
    if (position_files.empty()) throw ConfigError("no position files to sweep");

    std::vector<StrategyResult> owned;
    for (const auto& f : position_files) {
        StrategyResult s;
        s.name = fs::path(f).stem().string();
        if (s.name.rfind("positions_", 0) == 0) s.name = s.name.substr(10);
        s.backtest =
            read_positions_csv(f, panel, panel.feature_index(cfg.open_feature), 0.0);
        owned.push_back(std::move(s));
    }
    std::vector<const StrategyResult*> all;
    for (const auto& s : owned) all.push_back(&s);
    const auto rows = cost_sweep(all, panel, cfg);
    write_cost_sweep_csv(rows, cfg.cost_grid_bps, out / "cost_sweep.csv");

    std::printf("%-10s", "strategy");
    for (double c : cfg.cost_grid_bps) std::printf("%10.1fbp", c);
    std::printf("\n");
    for (const auto& row : rows) {
        std::printf("%-10s", row.name.c_str());
        for (const auto& s : row.sharpe_by_cost)
            std::printf("%12s", s ? format_double(*s, 4).c_str() : "n/a");
        std::printf("%s\n", row.zero_turnover ? "  (zero turnover)" : "");
    }
    return 0;
}

int cmd_report(const GlobalArgs& g, std::vector<std::string> series_files,
               const std::string& benchmark_name, bool svg) {
    const fs::path out = g.out_dir;
    fs::create_directories(out);
    if (series_files.empty()) {
        for (const auto& entry : fs::directory_iterator(out)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("series_", 0) == 0 && entry.path().extension() == ".csv")
                series_files.push_back(entry.path().string());
        }
        std::sort(series_files.begin(), series_files.end());
    }
    if (series_files.empty()) throw ConfigError("no series files to report on");

    std::vector<StrategyResult> owned;
    for (const auto& f : series_files) {
        StrategyResult s;
        s.name = fs::path(f).stem().string();
        if (s.name.rfind("series_", 0) == 0) s.name = s.name.substr(7);
        s.backtest.series = read_series_csv(f);
        s.backtest.first_trade_day = s.backtest.series.dates.front() - 1;
        s.backtest.n_assets = 1;
        s.backtest.positions.assign(s.backtest.series.dates.size(), 0.0);
        owned.push_back(std::move(s));
    }
    std::vector<const StrategyResult*> all;
    const StrategyResult* benchmark = nullptr;
    for (const auto& s : owned) {
        all.push_back(&s);
        if (s.name == benchmark_name) benchmark = &s;
    }

    auto tables = build_report(all, benchmark);
    for (auto& row : tables.rows) row.breakeven_bps.reset();  // unknown from series alone
    write_metrics_csv(tables, out / "metrics.csv");
    write_metrics_json(tables, out / "metrics.json");
    write_corr_matrix_csv(tables, out / "corr_matrix.csv");
    write_equity_csv(all, out / "equity.csv");
    if (svg) write_equity_svg(all, out / "equity.svg");
    std::cout << "report written for " << owned.size() << " series -> " << out.string() << "\n";
    return 0;
}

int cmd_param_count(const GlobalArgs& g, int assets, int inputs, int hidden, int filters,
                    int len, bool reference) {
    (void)g;
    if (!reference) {
        MfinHyper h;
        h.hidden = hidden;
        h.n_filters = filters;
        h.ts_filter_len = len;
        const auto pc = param_count(assets, inputs, h);
        std::printf("extractor  %10lld\nreduction  %10lld\nlstm       %10lld\n"
                    "head       %10lld\ntotal      %10lld\n",
                    static_cast<long long>(pc.extractor), static_cast<long long>(pc.reduction),
                    static_cast<long long>(pc.lstm), static_cast<long long>(pc.head),
                    static_cast<long long>(pc.total()));
        return 0;
    }

    // Reference grid: parameter totals across the published sweep axes.
    const int na_list[] = {1, 7, 20, 50};
    std::printf("%-28s %10s %10s %10s %10s\n", "configuration", "NA=1", "NA=7", "NA=20",
                "NA=50");
    auto print_row = [&](const std::string& label, MfinHyper h) {
        std::printf("%-28s", label.c_str());
        for (int na : na_list)
            std::printf(" %9.0fK", param_count(na, inputs, h).total() / 1000.0);
        std::printf("\n");
    };
    for (int nh : {32, 64, 96, 128}) {
        MfinHyper h;
        h.hidden = nh;
        h.n_filters = 40;
        h.ts_filter_len = 10;
        print_row("NH=" + std::to_string(nh) + " nf=40 l=10", h);
    }
    for (int nf : {16, 32, 48, 64}) {
        MfinHyper h;
        h.hidden = 80;
        h.n_filters = nf;
        h.ts_filter_len = 10;
        print_row("NH=80 nf=" + std::to_string(nf) + " l=10", h);
    }
    for (int l : {3, 5, 10, 15, 20}) {
        MfinHyper h;
        h.hidden = 80;
        h.n_filters = 40;
        h.ts_filter_len = l;
        print_row("NH=80 nf=40 l=" + std::to_string(l), h);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-factor systematic trading research framework"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--data-dir", g.data_dir, "raw snapshot directory");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--seed", g.seed, "base RNG seed override");
    app.add_option("--threads", g.threads, "worker thread override");

    std::string panel_dir, mfin_positions, benchmark = "LongOnly";
    std::vector<std::string> position_files, series_files;
    bool svg = false, reference = false;
    int pc_assets = 7, pc_inputs = 22, pc_hidden = 32, pc_filters = 16, pc_len = 3;

    app.add_subcommand("ingest", "build the factor panel from CSV snapshots");
    auto* bt = app.add_subcommand("backtest", "expanding-window realistic backtest");
    bt->add_option("--panel", panel_dir, "panel directory (default <out-dir>/panel)");
    bt->add_option("--mfin-positions", mfin_positions,
                   "positions file from train-mfin to include MFIN and CMB+MFIN");
    auto* ex = app.add_subcommand("explore", "ex-post top-2 exploration table");
    ex->add_option("--panel", panel_dir, "panel directory");
    auto* tm = app.add_subcommand("train-mfin", "train the model ensemble per split");
    tm->add_option("--panel", panel_dir, "panel directory");
    auto* cs = app.add_subcommand("cost-sweep", "net Sharpe across the cost grid");
    cs->add_option("--panel", panel_dir, "panel directory");
    cs->add_option("--positions", position_files, "position files (default: scan out-dir)");
    auto* rp = app.add_subcommand("report", "metrics, correlations and equity curves");
    rp->add_option("--series", series_files, "series files (default: scan out-dir)");
    rp->add_option("--benchmark", benchmark, "benchmark strategy name for correlations");
    rp->add_flag("--svg", svg, "also draw an SVG equity chart");
    auto* pc = app.add_subcommand("param-count", "model parameter budget breakdown");
    pc->add_option("--assets", pc_assets, "number of assets");
    pc->add_option("--inputs", pc_inputs, "number of input features");
    pc->add_option("--hidden", pc_hidden, "LSTM hidden size");
    pc->add_option("--filters", pc_filters, "filters per branch");
    pc->add_option("--len", pc_len, "temporal filter length");
    pc->add_flag("--reference", reference, "print the reference sweep table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("ingest")) return cmd_ingest(g);
        if (app.got_subcommand("backtest")) return cmd_backtest(g, panel_dir, mfin_positions);
        if (app.got_subcommand("explore")) return cmd_explore(g, panel_dir);
        if (app.got_subcommand("train-mfin")) return cmd_train_mfin(g, panel_dir);
        if (app.got_subcommand("cost-sweep")) return cmd_cost_sweep(g, panel_dir, position_files);
        if (app.got_subcommand("report")) return cmd_report(g, series_files, benchmark, svg);
        if (app.got_subcommand("param-count"))
            return cmd_param_count(g, pc_assets, pc_inputs, pc_hidden, pc_filters, pc_len,
                                   reference);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

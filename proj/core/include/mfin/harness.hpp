#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfin/config.hpp"
#include "mfin/ingest.hpp"
#include "mfin/metrics.hpp"
#include "mfin/mfin.hpp"
#include "mfin/portfolio.hpp"
#include "mfin/strategies.hpp"

namespace mfin {

// Expanding-window split: train grows from the calendar start, tests step
// forward in one-year increments, validation is the last tenth of train.
struct Split {
    Day train_start = 0;
    Day train_end = 0;   // inclusive, day before the test span
    Day valid_start = 0;
    Day test_start = 0;
    Day test_end = 0;    // inclusive
    bool truncated = false;

    std::string test_label() const;  // e.g. "2019-2020"
};

using SplitPlan = std::vector<Split>;

SplitPlan make_splits(const Calendar& calendar, Day first_test_start,
                      int increment_years = 1);

// First trade date on which every asset has a defined open-return vol.
Day first_tradeable_day(const FactorPanel& panel, int open_feature);

// Raw snapshot tree: <data_dir>/{CMC,BIC,BC}/<ASSET>.csv wide files plus
// Google Trends segments <data_dir>/GT/<ASSET>_seg*.csv, linked in filename
// order with backwards proportional adjustment.
std::vector<RawSeries> load_snapshot_tree(const std::filesystem::path& data_dir,
                                          const FrameworkConfig& cfg);

struct SplitSelection {
    int split_index = 0;
    std::string test_label;
    std::vector<ScoredCombo> picks;  // one or two, ranked
};

struct StrategyResult {
    std::string name;
    StrategyBacktest backtest;  // concatenated out-of-sample book
    std::vector<SplitSelection> selections;
    bool ex_post = false;  // exploration mode output, not implementable
};

// Score every grid combo on the training window (C = 0, asset-scaled
// Sharpe), through a view bounded at the test start so any lookahead aborts.
std::vector<ScoredCombo> score_grid(const FactorPanel& panel, StrategyKind kind,
                                    const FrameworkConfig& cfg, Day score_start,
                                    Day train_end, int threads);

// Expanding-window realistic backtest of one rule-strategy kind: per split,
// grid-score on train, pick the top two distinct-feature combos, hold the
// equal-weight pair over the test span; splits concatenate into one book.
StrategyResult run_realistic(const FactorPanel& panel, StrategyKind kind,
                             const FrameworkConfig& cfg, const SplitPlan& plan,
                             double cost_c = 0.0);

// Ex-post exploration: the top two combos over the whole evaluation window.
// Deliberately not implementable; the result is labeled as such.
StrategyResult run_exploration(const FactorPanel& panel, StrategyKind kind,
                               const FrameworkConfig& cfg, double cost_c = 0.0);

StrategyResult run_long_only(const FactorPanel& panel, const FrameworkConfig& cfg,
                             const SplitPlan& plan, double cost_c = 0.0);

// Equal-risk combination of already-run strategies (positions averaged, then
// releveled to the target).
StrategyResult combine_results(const std::vector<const StrategyResult*>& components,
                               const FactorPanel& panel, const FrameworkConfig& cfg,
                               double cost_c, const std::string& name);

struct MfinSplitArtifacts {
    int split_index = 0;
    MfinHyper chosen;
    std::vector<std::filesystem::path> checkpoints;
    std::vector<TrainLogRow> first_seed_log;
};

// Per split: Hyperband on the training window, train the seed ensemble at
// the winning configuration, average the seeds' weights, hold over the test
// span. Checkpoints and logs land under out_dir when provided.
StrategyResult run_mfin(const FactorPanel& panel, const FrameworkConfig& cfg,
                        const SplitPlan& plan, double cost_c = 0.0,
                        const std::filesystem::path& out_dir = {},
                        std::vector<MfinSplitArtifacts>* artifacts = nullptr);

// Net Sharpe per (strategy, cost) over the stored position books.
struct CostSweepRow {
    std::string name;
    std::vector<std::optional<double>> sharpe_by_cost;
    bool zero_turnover = false;
};

std::vector<CostSweepRow> cost_sweep(const std::vector<const StrategyResult*>& strategies,
                                     const FactorPanel& panel, const FrameworkConfig& cfg);

// ---- persistence and reports ----

void write_series_csv(const PortfolioSeries& series, const std::filesystem::path& path);
PortfolioSeries read_series_csv(const std::filesystem::path& path);

void write_positions_csv(const StrategyBacktest& bt, const std::vector<std::string>& assets,
                         const std::filesystem::path& path);
StrategyBacktest read_positions_csv(const std::filesystem::path& path,
                                    const FactorPanel& panel, int open_feature,
                                    double cost_c);

// Selection table: per test window and strategy kind, the chosen picks.
void write_selection_log(const std::vector<const StrategyResult*>& strategies,
                         const std::filesystem::path& path);

// Metrics table in the headline column order, one row per strategy, with
// correlations against the benchmark series (usually long-only).
struct ReportTables {
    std::vector<MetricsReport> rows;
    std::vector<std::string> corr_labels;
    std::vector<double> corr_matrix;  // pearson above diagonal, spearman below
};

ReportTables build_report(const std::vector<const StrategyResult*>& strategies,
                          const StrategyResult* benchmark);

void write_metrics_csv(const ReportTables& tables, const std::filesystem::path& path);
void write_metrics_json(const ReportTables& tables, const std::filesystem::path& path);
void write_corr_matrix_csv(const ReportTables& tables, const std::filesystem::path& path);
void write_equity_csv(const std::vector<const StrategyResult*>& strategies,
                      const std::filesystem::path& path);
void write_equity_svg(const std::vector<const StrategyResult*>& strategies,
                      const std::filesystem::path& path);
void write_cost_sweep_csv(const std::vector<CostSweepRow>& rows,
                          const std::vector<double>& grid_bps,
                          const std::filesystem::path& path);

// Reproducibility manifest: config/data hashes, seeds, strategy set, grid.
struct RunManifest {
    std::uint64_t config_hash = 0;
    std::uint64_t data_hash = 0;
    std::uint64_t base_seed = 0;
    int n_seeds = 0;
    std::vector<std::string> strategies;
    std::vector<double> cost_grid_bps;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace mfin

#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfin/ingest.hpp"
#include "mfin/portfolio.hpp"
#include "mfin/signals.hpp"

namespace mfin {

// Read-only panel view with a hard date-index bound. Realistic backtests
// score training windows through a bounded view, so any touch of test-span
// data before selection is frozen throws LookaheadViolation.
class PanelView {
public:
    explicit PanelView(const FactorPanel& panel)
        : panel_(&panel), limit_(panel.n_dates()) {}
    PanelView(const FactorPanel& panel, int limit);

    const FactorPanel& panel() const { return *panel_; }
    int limit() const { return limit_; }
    int n_assets() const { return panel_->n_assets(); }
    int n_features() const { return panel_->n_features(); }
    const Calendar& calendar() const { return panel_->calendar; }

    double level(int t, int i, int j) const { return panel_->level(check(t), i, j); }
    bool has_level(int t, int i, int j) const { return panel_->has_level(check(t), i, j); }

    // Level series for one (asset, feature) up to the bound.
    Series level_series(int asset, int feature) const;

private:
    int check(int t) const;
    const FactorPanel* panel_;
    int limit_;
};

enum class StrategyKind { MOP, BAZ, REV, LongOnly };

std::string kind_name(StrategyKind kind);

struct MopParams {
    int k = 21;
};
struct BazParams {
    int short_ts = 4;
    int long_ts = 12;
};
struct RevParams {
    int k = 5;
    double z_entry = 1.75;
    double z_exit = 0.75;
};

// Signal parameter grids.
inline constexpr std::array<int, 5> kMopKGrid = {5, 21, 63, 126, 252};
inline constexpr std::array<std::pair<int, int>, 4> kBazGrid = {
    {{4, 12}, {8, 24}, {16, 48}, {32, 96}}};
inline constexpr std::array<int, 4> kRevKGrid = {1, 5, 10, 21};
inline constexpr std::array<double, 3> kRevEntryGrid = {1.5, 1.75, 2.0};
inline constexpr std::array<double, 3> kRevExitGrid = {0.5, 0.75, 1.0};

struct GridCombo {
    StrategyKind kind = StrategyKind::MOP;
    std::string feature;
    MopParams mop;
    BazParams baz;
    RevParams rev;

    // Canonical textual form, used for reports.
    std::string params_key() const;
    // Zero-padded ordering key for deterministic tie-breaks.
    std::string params_rank() const;
};

std::vector<GridCombo> enumerate_grid(StrategyKind kind,
                                      const std::vector<std::string>& features);

// Trend weights: w at trade date t is the sign of the feature's k-day return
// at t-1 (sign(0) = 0, masked signal = flat).
WeightsMatrix mop_weights(const PanelView& panel, int feature, MopParams params,
                          Day first_trade, Day last_trade);

// Crossover weights: sign of the normalized MACD at t-1.
WeightsMatrix baz_weights(const PanelView& panel, int feature, BazParams params,
                          Day first_trade, Day last_trade);

// Reversion state machine applied literally to a z path (same-index):
// enter -sign(z) when |z| >= z_entry from flat, hold while |z| >= z_exit,
// exit otherwise; masked z forces an exit.
std::vector<double> rev_state_machine(const Series& z, double z_entry, double z_exit);

// Spread between same-date k-day returns of the open price and the feature.
Series rev_spread(const PanelView& panel, int asset, int open_feature, int feature, int k);

// Reversion weights: the state machine drives z at t-1.
WeightsMatrix rev_weights(const PanelView& panel, int open_feature, int feature,
                          RevParams params, Day first_trade, Day last_trade);

// Equal weight 1 on every asset, masks ignored.
WeightsMatrix long_only_weights(const PanelView& panel, Day first_trade, Day last_trade);

// Per-asset ADF results of the REV spread over [first, last] (panel dates).
std::vector<AdfResult> rev_spread_adf(const PanelView& panel, int open_feature, int feature,
                                      int k, Day first, Day last);

// Zero out the weights of assets whose filter flag is false.
void apply_asset_filter(WeightsMatrix& weights, const std::vector<bool>& allowed);

struct ScoredCombo {
    GridCombo combo;
    std::optional<double> train_sharpe;
};

struct ComboSelection {
    ScoredCombo first;
    ScoredCombo second;
};

// Highest train Sharpe, then the best-scoring combo on a different feature.
// Ties break lexicographically on (feature, params). Throws ConfigError when
// fewer than two distinct features are represented.
ComboSelection select_top2(std::vector<ScoredCombo> scored);

}  // namespace mfin

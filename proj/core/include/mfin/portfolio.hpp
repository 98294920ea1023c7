#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfin/dates.hpp"
#include "mfin/ingest.hpp"

namespace mfin {

// Per-asset position sizes in [-1, 1] on consecutive trade dates. Row t is
// the position entered at the open of day(t), decided from information dated
// day(t)-1 or earlier.
struct WeightsMatrix {
    Day first_day = 0;
    int n_assets = 0;
    std::vector<double> w;  // [t][asset]
    std::string label;
    std::string provenance;  // feature/params for rule strategies

    int rows() const { return n_assets ? static_cast<int>(w.size()) / n_assets : 0; }
    Day day(int t) const { return first_day + t; }
    double at(int t, int i) const { return w[static_cast<std::size_t>(t) * n_assets + i]; }
    double& at(int t, int i) { return w[static_cast<std::size_t>(t) * n_assets + i]; }
};

// Dense per-date matrices extracted from a panel (daily calendar).
struct ReturnsMatrix {
    Day first_day = 0;
    int n_assets = 0;
    std::vector<double> r;
    std::vector<unsigned char> valid;

    int rows() const { return n_assets ? static_cast<int>(r.size()) / n_assets : 0; }
    std::size_t idx(int t, int i) const { return static_cast<std::size_t>(t) * n_assets + i; }
    int row_of(Day d) const { return static_cast<int>(d - first_day); }
};

// Annualized ex-ante per-asset volatilities (EW std of daily returns).
struct VolEstimate {
    Day first_day = 0;
    int n_assets = 0;
    std::vector<double> sigma;
    std::vector<unsigned char> valid;

    std::size_t idx(int t, int i) const { return static_cast<std::size_t>(t) * n_assets + i; }
    int row_of(Day d) const { return static_cast<int>(d - first_day); }
};

ReturnsMatrix asset_returns(const FactorPanel& panel, int feature);
VolEstimate asset_vols(const FactorPanel& panel, int feature);

enum class ScalingStage { AssetScaled, DoublyScaled };

// Daily portfolio returns. Row t accrues on dates[t], one day after the
// position that earned it was entered. net = gross - cost pointwise.
struct PortfolioSeries {
    std::vector<Day> dates;
    std::vector<double> gross;
    std::vector<double> net;
    std::vector<double> turnover;      // position-change magnitude at the trade date
    std::vector<double> scale_factor;  // second-layer multiplier (1 at stage one)
    ScalingStage stage = ScalingStage::AssetScaled;
    bool degenerate_scale = false;  // second-layer std hit 0 / warm-up passthrough used
    std::string label;

    int size() const { return static_cast<int>(dates.size()); }
    double total_net() const;
};

// Asset-level volatility scaling with linear transaction costs:
//   R_{t+1} = (sigma_tgt/N_A) * sum_i [ (w_{i,t}/sigma_{i,t}) r_{i,t+1}
//                                       - C |w_{i,t}/sigma_{i,t} - w_{i,t-1}/sigma_{i,t-1}| ]
// Day one enters from flat, so inception turnover is |w_0/sigma_0|.
// cost_c is a fraction (5 bps = 5e-4).
PortfolioSeries portfolio_returns(const WeightsMatrix& weights, const ReturnsMatrix& returns,
                                  const VolEstimate& vols, double cost_c,
                                  double sigma_target = kSigmaTarget);

// Second scaling layer: R'_{t+1} = R_{t+1} * sigma_tgt / sigma_t, where
// sigma_t is the annualized 21-day EW std of the series' own past gross
// returns. The first kPortfolioStdWarmup points pass through unscaled
// (flagged), as do points where sigma_t is 0.
PortfolioSeries second_layer_scale(const PortfolioSeries& series,
                                   double sigma_target = kSigmaTarget);

// Full two-stage backtest keeping the final scaled positions, so costs and
// breakeven are computed on the positions actually traded:
//   p_{i,t} = (sigma_tgt/N_A) * m_t * w_{i,t}/sigma_{i,t},
//   m_t     = sigma_tgt / EWstd21(stage-one gross up to t)   (1 during warm-up)
//   net_{t+1} = sum_i p_{i,t} r_{i,t+1} - C * sum_i |p_{i,t} - p_{i,t-1}|.
// With this convention total net PnL vanishes exactly at C = breakeven.
struct StrategyBacktest {
    Day first_trade_day = 0;
    int n_assets = 0;
    std::vector<double> positions;  // [t][i] final doubly-scaled positions
    PortfolioSeries stage1;         // asset-scaled series (cost per the formula above)
    PortfolioSeries series;         // doubly-scaled series, costs on position deltas
    std::string label;

    int rows() const { return n_assets ? static_cast<int>(positions.size()) / n_assets : 0; }
    double position(int t, int i) const {
        return positions[static_cast<std::size_t>(t) * n_assets + i];
    }
};

StrategyBacktest run_weights(const WeightsMatrix& weights, const ReturnsMatrix& returns,
                             const VolEstimate& vols, double cost_c,
                             double sigma_target = kSigmaTarget,
                             const std::string& label = "");

// Cost/PnL pass over an already-scaled position stream ([t][i], trade dates
// first_trade + t). Used for concatenated out-of-sample books.
StrategyBacktest backtest_positions(Day first_trade, int n_assets,
                                    std::vector<double> positions,
                                    const ReturnsMatrix& returns, double cost_c,
                                    const std::string& label = "");

// Scale a raw position stream to the target with the trailing EW std of its
// own gross returns (warm-up and zero-std points pass through), then cost it.
StrategyBacktest relevel_positions(Day first_trade, int n_assets,
                                   std::vector<double> positions,
                                   const ReturnsMatrix& returns, double cost_c,
                                   double sigma_target = kSigmaTarget,
                                   const std::string& label = "");

// Equal-weight combination of already-scaled strategies at the position
// level, then releveled to the target by its own 21-day EW std. Cost applies
// to the netted position changes. Components must overlap in time.
StrategyBacktest combine_strategies(const std::vector<const StrategyBacktest*>& components,
                                    const ReturnsMatrix& returns, double cost_c,
                                    double sigma_target = kSigmaTarget,
                                    const std::string& label = "");

// Return-stream form of the combination used by tests and quick reports:
// scale each component stream to the target with its own trailing EW std,
// then average pointwise over the common span.
PortfolioSeries combine_return_streams(const std::vector<const PortfolioSeries*>& components,
                                       double sigma_target = kSigmaTarget);

// Simple average of per-seed weight matrices (identical spans required).
WeightsMatrix ensemble_average(const std::vector<WeightsMatrix>& seeds);

// Breakeven cost (fraction): total gross / total traded notional of the
// doubly-scaled positions. nullopt when turnover is zero.
std::optional<double> breakeven_cost(const StrategyBacktest& backtest);
std::optional<double> breakeven_cost_bps(const StrategyBacktest& backtest);

}  // namespace mfin

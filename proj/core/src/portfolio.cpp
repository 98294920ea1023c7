#include "mfin/portfolio.hpp"

#include <algorithm>
#include <cmath>

#include "mfin/errors.hpp"
#include "mfin/ewstats.hpp"

namespace mfin {

double PortfolioSeries::total_net() const {
    double s = 0.0;
    for (double v : net) s += v;
    return s;
}

ReturnsMatrix asset_returns(const FactorPanel& panel, int feature) {
    ReturnsMatrix out;
    out.first_day = panel.calendar.front();
    out.n_assets = panel.n_assets();
    const int T = panel.n_dates();
    out.r.assign(static_cast<std::size_t>(T) * out.n_assets, 0.0);
    out.valid.assign(out.r.size(), 0);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < out.n_assets; ++i) {
            out.r[out.idx(t, i)] = panel.ret(t, i, feature);
            out.valid[out.idx(t, i)] = panel.has_return(t, i, feature) ? 1 : 0;
        }
    return out;
}

VolEstimate asset_vols(const FactorPanel& panel, int feature) {
    VolEstimate out;
    out.first_day = panel.calendar.front();
    out.n_assets = panel.n_assets();
    const int T = panel.n_dates();
    out.sigma.assign(static_cast<std::size_t>(T) * out.n_assets, 0.0);
    out.valid.assign(out.sigma.size(), 0);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < out.n_assets; ++i) {
            const double sd = panel.std_annual(t, i, feature);
            if (panel.has_std(t, i, feature) && sd > 0.0) {
                out.sigma[out.idx(t, i)] = sd;
                out.valid[out.idx(t, i)] = 1;
            }
        }
    return out;
}

namespace {

// Stage-one positions w/sigma for every trade date, with range checks.
struct StageOne {
    std::vector<double> pos;        // [t][i] = w/sigma at the trade date
    std::vector<double> gross;      // [t] return accrued at day(t)+1
    std::vector<double> turnover;   // [t] sum_i |pos_t - pos_{t-1}|
};

StageOne stage_one(const WeightsMatrix& weights, const ReturnsMatrix& returns,
                   const VolEstimate& vols) {
    const int T = weights.rows();
    const int NA = weights.n_assets;
    if (NA != returns.n_assets || NA != vols.n_assets)
        throw ConfigError("portfolio_returns: asset count mismatch");
    if (T == 0) throw ConfigError("portfolio_returns: empty weights");

    StageOne s;
    s.pos.assign(static_cast<std::size_t>(T) * NA, 0.0);
    s.gross.assign(T, 0.0);
    s.turnover.assign(T, 0.0);

    for (int t = 0; t < T; ++t) {
        const Day trade = weights.day(t);
        const int vr = vols.row_of(trade);
        const int rr = returns.row_of(trade + 1);
        if (vr < 0 || rr < 0 || rr >= returns.rows())
            throw ConfigError("portfolio_returns: weights outside data range at " +
                              format_date(trade));
        double gross = 0.0, turn = 0.0;
        for (int i = 0; i < NA; ++i) {
            const double wi = weights.at(t, i);
            if (std::abs(wi) > 1.0 + 1e-12)
                throw NumericError("portfolio_returns: weight outside [-1,1]");
            double p = 0.0;
            if (wi != 0.0) {
                if (!vols.valid[vols.idx(vr, i)])
                    throw NumericError("portfolio_returns: undefined volatility with "
                                       "nonzero weight at " + format_date(trade));
                if (!returns.valid[returns.idx(rr, i)])
                    throw NumericError("portfolio_returns: undefined return with nonzero "
                                       "weight at " + format_date(trade + 1));
                p = wi / vols.sigma[vols.idx(vr, i)];
                gross += p * returns.r[returns.idx(rr, i)];
            }
            s.pos[static_cast<std::size_t>(t) * NA + i] = p;
            const double prev = t > 0 ? s.pos[static_cast<std::size_t>(t - 1) * NA + i] : 0.0;
            turn += std::abs(p - prev);
        }
        s.gross[t] = gross;
        s.turnover[t] = turn;
    }
    return s;
}

}  // namespace

PortfolioSeries portfolio_returns(const WeightsMatrix& weights, const ReturnsMatrix& returns,
                                  const VolEstimate& vols, double cost_c,
                                  double sigma_target) {
    const StageOne s = stage_one(weights, returns, vols);
    const int T = weights.rows();
    const double pref = sigma_target / weights.n_assets;

    PortfolioSeries out;
    out.stage = ScalingStage::AssetScaled;
    out.label = weights.label;
    out.dates.resize(T);
    out.gross.resize(T);
    out.net.resize(T);
    out.turnover = s.turnover;
    out.scale_factor.assign(T, 1.0);
    for (int t = 0; t < T; ++t) {
        out.dates[t] = weights.day(t) + 1;
        out.gross[t] = pref * s.gross[t];
        out.net[t] = pref * (s.gross[t] - cost_c * s.turnover[t]);
    }
    return out;
}

PortfolioSeries second_layer_scale(const PortfolioSeries& series, double sigma_target) {
    PortfolioSeries out = series;
    out.stage = ScalingStage::DoublyScaled;
    EwStats stats = EwStats::from_span(kPortfolioStdSpan, kPortfolioStdWarmup);
    for (int t = 0; t < series.size(); ++t) {
        double m = 1.0;
        if (stats.std_valid()) {
            const double sd = stats.stddev() * std::sqrt(kTradingDays);
            if (sd > 0.0)
                m = std::min(sigma_target / sd, kMaxScaleMultiplier);
            else
                out.degenerate_scale = true;
        } else {
            out.degenerate_scale = true;  // warm-up passthrough
        }
        out.gross[t] = series.gross[t] * m;
        out.net[t] = series.net[t] * m;
        out.scale_factor[t] = m;
        stats.add(series.gross[t]);
    }
    return out;
}

StrategyBacktest run_weights(const WeightsMatrix& weights, const ReturnsMatrix& returns,
                             const VolEstimate& vols, double cost_c, double sigma_target,
                             const std::string& label) {
    const StageOne s = stage_one(weights, returns, vols);
    const int T = weights.rows();
    const int NA = weights.n_assets;
    const double pref = sigma_target / NA;

    StrategyBacktest bt;
    bt.first_trade_day = weights.first_day;
    bt.n_assets = NA;
    bt.label = label.empty() ? weights.label : label;
    bt.positions.assign(static_cast<std::size_t>(T) * NA, 0.0);

    bt.stage1.stage = ScalingStage::AssetScaled;
    bt.stage1.label = bt.label;
    bt.stage1.dates.resize(T);
    bt.stage1.gross.resize(T);
    bt.stage1.net.resize(T);
    bt.stage1.turnover = s.turnover;
    bt.stage1.scale_factor.assign(T, 1.0);

    bt.series.stage = ScalingStage::DoublyScaled;
    bt.series.label = bt.label;
    bt.series.dates.resize(T);
    bt.series.gross.resize(T);
    bt.series.net.resize(T);
    bt.series.turnover.assign(T, 0.0);
    bt.series.scale_factor.assign(T, 1.0);

    // The second-layer std tracks the stage-one gross stream, which does not
    // depend on the cost coefficient, so the breakeven is well defined.
    EwStats stats = EwStats::from_span(kPortfolioStdSpan, kPortfolioStdWarmup);
    for (int t = 0; t < T; ++t) {
        bt.stage1.dates[t] = weights.day(t) + 1;
        bt.stage1.gross[t] = pref * s.gross[t];
        bt.stage1.net[t] = pref * (s.gross[t] - cost_c * s.turnover[t]);

        double m = 1.0;
        if (stats.std_valid()) {
            const double sd = stats.stddev() * std::sqrt(kTradingDays);
            if (sd > 0.0)
                m = std::min(sigma_target / sd, kMaxScaleMultiplier);
            else
                bt.series.degenerate_scale = true;
        } else {
            bt.series.degenerate_scale = true;
        }
        stats.add(bt.stage1.gross[t]);

        const int rr = returns.row_of(weights.day(t) + 1);
        double gross2 = 0.0, turn2 = 0.0;
        for (int i = 0; i < NA; ++i) {
            const double p = pref * m * s.pos[static_cast<std::size_t>(t) * NA + i];
            bt.positions[static_cast<std::size_t>(t) * NA + i] = p;
            if (p != 0.0) gross2 += p * returns.r[returns.idx(rr, i)];
            const double prev =
                t > 0 ? bt.positions[static_cast<std::size_t>(t - 1) * NA + i] : 0.0;
            turn2 += std::abs(p - prev);
        }
        bt.series.dates[t] = weights.day(t) + 1;
        bt.series.gross[t] = gross2;
        bt.series.turnover[t] = turn2;
        bt.series.net[t] = gross2 - cost_c * turn2;
        bt.series.scale_factor[t] = m;
    }
    return bt;
}

StrategyBacktest backtest_positions(Day first_trade, int n_assets,
                                    std::vector<double> positions,
                                    const ReturnsMatrix& returns, double cost_c,
                                    const std::string& label) {
    if (n_assets < 1 || positions.size() % n_assets != 0 || positions.empty())
        throw ConfigError("backtest_positions: bad position stream");
    const int T = static_cast<int>(positions.size()) / n_assets;

    StrategyBacktest bt;
    bt.first_trade_day = first_trade;
    bt.n_assets = n_assets;
    bt.label = label;
    bt.positions = std::move(positions);

    bt.series.stage = ScalingStage::DoublyScaled;
    bt.series.label = label;
    bt.series.dates.resize(T);
    bt.series.gross.resize(T);
    bt.series.net.resize(T);
    bt.series.turnover.assign(T, 0.0);
    bt.series.scale_factor.assign(T, 1.0);
    for (int t = 0; t < T; ++t) {
        const int rr = returns.row_of(first_trade + t + 1);
        if (rr < 0 || rr >= returns.rows())
            throw ConfigError("backtest_positions: returns do not cover the span");
        double gross = 0.0, turn = 0.0;
        for (int i = 0; i < n_assets; ++i) {
            const double p = bt.positions[static_cast<std::size_t>(t) * n_assets + i];
            if (p != 0.0) gross += p * returns.r[returns.idx(rr, i)];
            const double prev =
                t > 0 ? bt.positions[static_cast<std::size_t>(t - 1) * n_assets + i] : 0.0;
            turn += std::abs(p - prev);
        }
        bt.series.dates[t] = first_trade + t + 1;
        bt.series.gross[t] = gross;
        bt.series.net[t] = gross - cost_c * turn;
        bt.series.turnover[t] = turn;
    }
    bt.stage1 = bt.series;
    return bt;
}

StrategyBacktest relevel_positions(Day first_trade, int n_assets,
                                   std::vector<double> positions,
                                   const ReturnsMatrix& returns, double cost_c,
                                   double sigma_target, const std::string& label) {
    if (n_assets < 1 || positions.size() % n_assets != 0 || positions.empty())
        throw ConfigError("relevel_positions: bad position stream");
    const int T = static_cast<int>(positions.size()) / n_assets;

    // Raw gross stream drives the trailing std; it does not depend on cost.
    std::vector<double> gross_raw(T, 0.0);
    for (int t = 0; t < T; ++t) {
        const int rr = returns.row_of(first_trade + t + 1);
        if (rr < 0 || rr >= returns.rows())
            throw ConfigError("relevel_positions: returns do not cover the span");
        for (int i = 0; i < n_assets; ++i)
            gross_raw[t] += positions[static_cast<std::size_t>(t) * n_assets + i] *
                            returns.r[returns.idx(rr, i)];
    }

    std::vector<double> scaled(positions.size());
    std::vector<double> multiplier(T, 1.0);
    bool degenerate = false;
    EwStats stats = EwStats::from_span(kPortfolioStdSpan, kPortfolioStdWarmup);
    for (int t = 0; t < T; ++t) {
        double m = 1.0;
        if (stats.std_valid()) {
            const double sd = stats.stddev() * std::sqrt(kTradingDays);
            if (sd > 0.0)
                m = std::min(sigma_target / sd, kMaxScaleMultiplier);
            else
                degenerate = true;
        } else {
            degenerate = true;
        }
        stats.add(gross_raw[t]);
        multiplier[t] = m;
        for (int i = 0; i < n_assets; ++i)
            scaled[static_cast<std::size_t>(t) * n_assets + i] =
                m * positions[static_cast<std::size_t>(t) * n_assets + i];
    }

    StrategyBacktest bt =
        backtest_positions(first_trade, n_assets, std::move(scaled), returns, cost_c, label);
    bt.series.scale_factor = multiplier;
    bt.series.degenerate_scale = degenerate;
    bt.stage1.dates = bt.series.dates;
    bt.stage1.gross = gross_raw;
    bt.stage1.net = gross_raw;
    bt.stage1.turnover.assign(T, 0.0);
    bt.stage1.scale_factor.assign(T, 1.0);
    bt.stage1.stage = ScalingStage::AssetScaled;
    return bt;
}

StrategyBacktest combine_strategies(const std::vector<const StrategyBacktest*>& components,
                                    const ReturnsMatrix& returns, double cost_c,
                                    double sigma_target, const std::string& label) {
    if (components.empty()) throw ConfigError("combine_strategies: no components");
    const int NA = components.front()->n_assets;
    Day first = components.front()->first_trade_day;
    Day last = first + components.front()->rows() - 1;
    for (const auto* c : components) {
        if (c->n_assets != NA) throw ConfigError("combine_strategies: asset count mismatch");
        first = std::max(first, c->first_trade_day);
        last = std::min(last, c->first_trade_day + c->rows() - 1);
    }
    if (last < first) throw ConfigError("combine_strategies: components do not overlap");
    const int T = static_cast<int>(last - first + 1);

    std::vector<double> avg(static_cast<std::size_t>(T) * NA, 0.0);
    for (int t = 0; t < T; ++t) {
        const Day trade = first + t;
        for (const auto* c : components) {
            const int ct = static_cast<int>(trade - c->first_trade_day);
            for (int i = 0; i < NA; ++i)
                avg[static_cast<std::size_t>(t) * NA + i] += c->position(ct, i);
        }
        for (int i = 0; i < NA; ++i)
            avg[static_cast<std::size_t>(t) * NA + i] /= components.size();
    }
    return relevel_positions(first, NA, std::move(avg), returns, cost_c, sigma_target, label);
}

PortfolioSeries combine_return_streams(const std::vector<const PortfolioSeries*>& components,
                                       double sigma_target) {
    if (components.empty()) throw ConfigError("combine_return_streams: no components");
    Day first = components.front()->dates.front();
    Day last = components.front()->dates.back();
    for (const auto* c : components) {
        first = std::max(first, c->dates.front());
        last = std::min(last, c->dates.back());
    }
    if (last < first) throw ConfigError("combine_return_streams: no overlap");

    std::vector<PortfolioSeries> scaled;
    scaled.reserve(components.size());
    for (const auto* c : components) scaled.push_back(second_layer_scale(*c, sigma_target));

    PortfolioSeries out;
    out.stage = ScalingStage::DoublyScaled;
    const int T = static_cast<int>(last - first + 1);
    out.dates.resize(T);
    out.gross.assign(T, 0.0);
    out.net.assign(T, 0.0);
    out.turnover.assign(T, 0.0);
    out.scale_factor.assign(T, 1.0);
    for (int t = 0; t < T; ++t) {
        out.dates[t] = first + t;
        for (std::size_t k = 0; k < scaled.size(); ++k) {
            const int ct = static_cast<int>(first + t - components[k]->dates.front());
            out.gross[t] += scaled[k].gross[ct] / scaled.size();
            out.net[t] += scaled[k].net[ct] / scaled.size();
        }
    }
    return out;
}

WeightsMatrix ensemble_average(const std::vector<WeightsMatrix>& seeds) {
    if (seeds.empty()) throw ConfigError("ensemble_average: no members");
    WeightsMatrix out = seeds.front();
    for (std::size_t k = 1; k < seeds.size(); ++k) {
        const auto& m = seeds[k];
        if (m.first_day != out.first_day || m.n_assets != out.n_assets ||
            m.w.size() != out.w.size())
            throw ConfigError("ensemble_average: member spans differ");
        for (std::size_t q = 0; q < out.w.size(); ++q) out.w[q] += m.w[q];
    }
    for (auto& v : out.w) v /= seeds.size();
    return out;
}

std::optional<double> breakeven_cost(const StrategyBacktest& backtest) {
    double gross = 0.0, traded = 0.0;
    for (int t = 0; t < backtest.series.size(); ++t) {
        gross += backtest.series.gross[t];
        traded += backtest.series.turnover[t];
    }
    if (traded <= 0.0) return std::nullopt;
    return gross / traded;
}

std::optional<double> breakeven_cost_bps(const StrategyBacktest& backtest) {
    auto b = breakeven_cost(backtest);
    if (!b) return std::nullopt;
    return *b * 1e4;
}

}  // namespace mfin

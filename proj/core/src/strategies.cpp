#include "mfin/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mfin/errors.hpp"

namespace mfin {

PanelView::PanelView(const FactorPanel& panel, int limit) : panel_(&panel), limit_(limit) {
    if (limit < 0 || limit > panel.n_dates())
        throw ConfigError("PanelView: limit out of range");
}

int PanelView::check(int t) const {
    if (t < 0 || t >= limit_)
        throw LookaheadViolation("panel access at index " + std::to_string(t) +
                                 " beyond bound " + std::to_string(limit_));
    return t;
}

Series PanelView::level_series(int asset, int feature) const {
    Series s(static_cast<std::size_t>(limit_));
    for (int t = 0; t < limit_; ++t)
        if (panel_->has_level(t, asset, feature)) s.set(t, panel_->level(t, asset, feature));
    return s;
}

std::string kind_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::MOP: return "MOP";
        case StrategyKind::BAZ: return "BAZ";
        case StrategyKind::REV: return "REV";
        case StrategyKind::LongOnly: return "LongOnly";
    }
    return "?";
}

std::string GridCombo::params_key() const {
    char buf[64];
    switch (kind) {
        case StrategyKind::MOP:
            std::snprintf(buf, sizeof(buf), "k=%d", mop.k);
            break;
        case StrategyKind::BAZ:
            std::snprintf(buf, sizeof(buf), "S=%d,L=%d", baz.short_ts, baz.long_ts);
            break;
        case StrategyKind::REV:
            std::snprintf(buf, sizeof(buf), "k=%d,zu=%.2f,zl=%.2f", rev.k, rev.z_entry,
                          rev.z_exit);
            break;
        case StrategyKind::LongOnly:
            return "-";
    }
    return buf;
}

std::string GridCombo::params_rank() const {
    // Zero-padded form so lexicographic order matches numeric order.
    char buf[64];
    switch (kind) {
        case StrategyKind::MOP:
            std::snprintf(buf, sizeof(buf), "k=%03d", mop.k);
            break;
        case StrategyKind::BAZ:
            std::snprintf(buf, sizeof(buf), "S=%03d,L=%03d", baz.short_ts, baz.long_ts);
            break;
        case StrategyKind::REV:
            std::snprintf(buf, sizeof(buf), "k=%03d,zu=%.2f,zl=%.2f", rev.k, rev.z_entry,
                          rev.z_exit);
            break;
        case StrategyKind::LongOnly:
            return "-";
    }
    return buf;
}

std::vector<GridCombo> enumerate_grid(StrategyKind kind,
                                      const std::vector<std::string>& features) {
    std::vector<GridCombo> out;
    for (const auto& f : features) {
        GridCombo base;
        base.kind = kind;
        base.feature = f;
        switch (kind) {
            case StrategyKind::MOP:
                for (int k : kMopKGrid) {
                    base.mop.k = k;
                    out.push_back(base);
                }
                break;
            case StrategyKind::BAZ:
                for (auto [s, l] : kBazGrid) {
                    base.baz = {s, l};
                    out.push_back(base);
                }
                break;
            case StrategyKind::REV:
                for (int k : kRevKGrid)
                    for (double zu : kRevEntryGrid)
                        for (double zl : kRevExitGrid) {
                            if (!(zu > zl)) continue;
                            base.rev = {k, zu, zl};
                            out.push_back(base);
                        }
                break;
            case StrategyKind::LongOnly:
                out.push_back(base);
                break;
        }
    }
    return out;
}

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Weights on [first_trade, last_trade] driven by a per-asset signal series
// evaluated one day before each trade date.
WeightsMatrix weights_from_signals(const PanelView& panel,
                                   const std::vector<Series>& signal_by_asset,
                                   Day first_trade, Day last_trade,
                                   const std::string& label, const std::string& provenance) {
    const Calendar& cal = panel.calendar();
    const int first_idx = cal.index_of(first_trade);
    const int last_idx = cal.index_of(last_trade);
    if (first_idx < 0 || last_idx < 0 || last_idx < first_idx)
        throw ConfigError("weights: trade span not on panel calendar");

    // Trading at index t needs the signal at t-1, so any trade date beyond
    // the view bound would read guarded data.
    if (last_idx > panel.limit())
        throw LookaheadViolation("trade span ends beyond the panel view bound");

    WeightsMatrix wm;
    wm.first_day = first_trade;
    wm.n_assets = panel.n_assets();
    wm.label = label;
    wm.provenance = provenance;
    wm.w.assign(static_cast<std::size_t>(last_idx - first_idx + 1) * wm.n_assets, 0.0);
    for (int t = first_idx; t <= last_idx; ++t) {
        const int sig_t = t - 1;
        if (sig_t < 0) continue;
        for (int i = 0; i < wm.n_assets; ++i) {
            const Series& s = signal_by_asset[i];
            if (sig_t < static_cast<int>(s.size()) && s.is_valid(sig_t))
                wm.at(t - first_idx, i) = sign_of(s.values[sig_t]);
        }
    }
    return wm;
}

}  // namespace

WeightsMatrix mop_weights(const PanelView& panel, int feature, MopParams params,
                          Day first_trade, Day last_trade) {
    std::vector<Series> signals;
    signals.reserve(panel.n_assets());
    for (int i = 0; i < panel.n_assets(); ++i)
        signals.push_back(k_day_return(panel.level_series(i, feature), params.k));
    GridCombo c;
    c.kind = StrategyKind::MOP;
    c.mop = params;
    return weights_from_signals(panel, signals, first_trade, last_trade, "MOP",
                                panel.panel().features[feature] + " " + c.params_key());
}

WeightsMatrix baz_weights(const PanelView& panel, int feature, BazParams params,
                          Day first_trade, Day last_trade) {
    std::vector<Series> signals;
    signals.reserve(panel.n_assets());
    for (int i = 0; i < panel.n_assets(); ++i)
        signals.push_back(macd(panel.level_series(i, feature), params.short_ts, params.long_ts));
    GridCombo c;
    c.kind = StrategyKind::BAZ;
    c.baz = params;
    return weights_from_signals(panel, signals, first_trade, last_trade, "BAZ",
                                panel.panel().features[feature] + " " + c.params_key());
}

std::vector<double> rev_state_machine(const Series& z, double z_entry, double z_exit) {
    if (!(z_entry > z_exit)) throw ConfigError("rev: entry threshold must exceed exit");
    std::vector<double> w(z.size(), 0.0);
    double prev = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) {
        double cur = 0.0;
        if (z.is_valid(t)) {
            const double zt = z.values[t];
            if (prev == 0.0) {
                if (std::abs(zt) >= z_entry) cur = -sign_of(zt);
            } else if (std::abs(zt) >= z_exit) {
                cur = prev;
            }
        }
        w[t] = cur;
        prev = cur;
    }
    return w;
}

Series rev_spread(const PanelView& panel, int asset, int open_feature, int feature, int k) {
    const Series open_ret = k_day_return(panel.level_series(asset, open_feature), k);
    const Series feat_ret = k_day_return(panel.level_series(asset, feature), k);
    Series spread(open_ret.size());
    for (std::size_t t = 0; t < spread.size(); ++t)
        if (open_ret.is_valid(t) && feat_ret.is_valid(t))
            spread.set(t, open_ret.values[t] - feat_ret.values[t]);
    return spread;
}

WeightsMatrix rev_weights(const PanelView& panel, int open_feature, int feature,
                          RevParams params, Day first_trade, Day last_trade) {
    const Calendar& cal = panel.calendar();
    const int first_idx = cal.index_of(first_trade);
    const int last_idx = cal.index_of(last_trade);
    if (first_idx < 0 || last_idx < 0 || last_idx < first_idx)
        throw ConfigError("rev_weights: trade span not on panel calendar");
    if (last_idx > panel.limit())
        throw LookaheadViolation("trade span ends beyond the panel view bound");

    WeightsMatrix wm;
    wm.first_day = first_trade;
    wm.n_assets = panel.n_assets();
    wm.label = "REV";
    GridCombo c;
    c.kind = StrategyKind::REV;
    c.rev = params;
    wm.provenance = panel.panel().features[feature] + " " + c.params_key();
    wm.w.assign(static_cast<std::size_t>(last_idx - first_idx + 1) * wm.n_assets, 0.0);

    for (int i = 0; i < wm.n_assets; ++i) {
        const Series z =
            ew_zscore(rev_spread(panel, i, open_feature, feature, params.k));
        const auto machine = rev_state_machine(z, params.z_entry, params.z_exit);
        for (int t = first_idx; t <= last_idx; ++t) {
            const int sig_t = t - 1;
            if (sig_t >= 0 && sig_t < static_cast<int>(machine.size()))
                wm.at(t - first_idx, i) = machine[sig_t];
        }
    }
    return wm;
}

WeightsMatrix long_only_weights(const PanelView& panel, Day first_trade, Day last_trade) {
    const Calendar& cal = panel.calendar();
    const int first_idx = cal.index_of(first_trade);
    const int last_idx = cal.index_of(last_trade);
    if (first_idx < 0 || last_idx < 0 || last_idx < first_idx)
        throw ConfigError("long_only_weights: trade span not on panel calendar");
    WeightsMatrix wm;
    wm.first_day = first_trade;
    wm.n_assets = panel.n_assets();
    wm.label = "LongOnly";
    wm.w.assign(static_cast<std::size_t>(last_idx - first_idx + 1) * wm.n_assets, 1.0);
    return wm;
}

std::vector<AdfResult> rev_spread_adf(const PanelView& panel, int open_feature, int feature,
                                      int k, Day first, Day last) {
    const Calendar& cal = panel.calendar();
    const int first_idx = cal.index_of(first);
    const int last_idx = cal.index_of(last);
    if (first_idx < 0 || last_idx < 0) throw ConfigError("rev_spread_adf: span not on calendar");

    std::vector<AdfResult> out;
    for (int i = 0; i < panel.n_assets(); ++i) {
        const Series spread = rev_spread(panel, i, open_feature, feature, k);
        std::vector<double> window;
        for (int t = first_idx; t <= last_idx && t < static_cast<int>(spread.size()); ++t)
            if (spread.is_valid(t)) window.push_back(spread.values[t]);
        AdfResult res;
        if (window.size() < 30) {
            res.degenerate = true;  // not enough data: treated as failing the filter
            res.pvalue = 0.0;
        } else {
            res = adf_pvalue(window);
        }
        out.push_back(res);
    }
    return out;
}

void apply_asset_filter(WeightsMatrix& weights, const std::vector<bool>& allowed) {
    if (static_cast<int>(allowed.size()) != weights.n_assets)
        throw ConfigError("apply_asset_filter: size mismatch");
    for (int t = 0; t < weights.rows(); ++t)
        for (int i = 0; i < weights.n_assets; ++i)
            if (!allowed[i]) weights.at(t, i) = 0.0;
}

ComboSelection select_top2(std::vector<ScoredCombo> scored) {
    auto key = [](const ScoredCombo& s) {
        const double sr = s.train_sharpe.value_or(-1e300);
        return std::make_tuple(-sr, s.combo.feature, s.combo.params_rank());
    };
    std::sort(scored.begin(), scored.end(),
              [&key](const ScoredCombo& a, const ScoredCombo& b) { return key(a) < key(b); });
    if (scored.size() < 2) throw ConfigError("select_top2: need at least two candidates");

    ComboSelection sel;
    sel.first = scored.front();
    for (std::size_t i = 1; i < scored.size(); ++i) {
        if (scored[i].combo.feature != sel.first.combo.feature) {
            sel.second = scored[i];
            return sel;
        }
    }
    throw ConfigError("select_top2: all candidates share one feature");
}

}  // namespace mfin

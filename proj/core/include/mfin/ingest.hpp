#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfin/dates.hpp"

namespace mfin {

// Annualization and scaling conventions used across the framework.
inline constexpr double kTradingDays = 252.0;
inline constexpr double kSigmaTarget = 0.15;   // annualized target volatility
inline constexpr double kStdSpan = 63.0;       // per-series EW std span
inline constexpr int kStdWarmup = 10;          // min observations before a std is usable
inline constexpr double kPortfolioStdSpan = 21.0;
inline constexpr int kPortfolioStdWarmup = 21;
// Leverage guard on the portfolio-level scaling multiplier: after a long
// flat stretch the trailing std decays toward zero and sigma_tgt/sigma_t
// would size the next position absurdly.
inline constexpr double kMaxScaleMultiplier = 10.0;

enum class Source { CMC, BIC, BC, GT };

std::string source_name(Source s);
Source source_from_name(const std::string& name);

struct Observation {
    Day date;
    double value;
};

// One (asset, feature) level series from one data source.
struct RawSeries {
    std::string asset;
    std::string feature;
    Source source = Source::CMC;
    std::vector<Observation> observations;  // strictly increasing dates
};

// Parses one snapshot CSV. Narrow files are `date,value`; wide files are
// `date,<feature>,...` and yield one series per value column. A narrow
// file's feature name comes from `value_feature` (or stays "value").
std::vector<RawSeries> load_csv(const std::filesystem::path& path, Source source,
                                const std::string& asset,
                                const std::string& value_feature = "");

// Joins segmented series that overlap on exactly one roll date by rescaling
// every older segment so multiplicative changes are continuous across rolls.
// Within-segment percentage changes are preserved exactly; the newest segment
// is returned unchanged.
RawSeries link_segments(const std::vector<RawSeries>& segments);

enum class MissingPolicy {
    ForwardFill,  // fill interior gaps, mask anything before first availability
    NeutralFill,  // additionally tolerate features absent for an asset (all-masked)
};

// Date-aligned tensor of levels, 1-day returns, EW stds and standardized
// returns per (date, asset, feature). Standardized return is 0 wherever the
// mask is off or the std is degenerate, so model inputs never fabricate
// signal for unavailable data.
struct FactorPanel {
    Calendar calendar;
    std::vector<std::string> assets;
    std::vector<std::string> features;

    // Row-major [t][asset][feature].
    std::vector<double> levels;
    std::vector<unsigned char> level_mask;
    std::vector<double> returns;
    std::vector<unsigned char> return_mask;
    std::vector<double> std63;             // daily EW std of returns
    std::vector<unsigned char> std_mask;
    std::vector<double> zret;              // returns / std63, 0 when masked

    int n_dates() const { return calendar.size(); }
    int n_assets() const { return static_cast<int>(assets.size()); }
    int n_features() const { return static_cast<int>(features.size()); }

    std::size_t idx(int t, int i, int j) const {
        return (static_cast<std::size_t>(t) * assets.size() + i) * features.size() + j;
    }

    double level(int t, int i, int j) const { return levels[idx(t, i, j)]; }
    bool has_level(int t, int i, int j) const { return level_mask[idx(t, i, j)] != 0; }
    double ret(int t, int i, int j) const { return returns[idx(t, i, j)]; }
    bool has_return(int t, int i, int j) const { return return_mask[idx(t, i, j)] != 0; }
    double std_daily(int t, int i, int j) const { return std63[idx(t, i, j)]; }
    bool has_std(int t, int i, int j) const { return std_mask[idx(t, i, j)] != 0; }
    double std_annual(int t, int i, int j) const;
    double zreturn(int t, int i, int j) const { return zret[idx(t, i, j)]; }

    int asset_index(const std::string& name) const;
    int feature_index(const std::string& name) const;
};

FactorPanel build_panel(const std::vector<RawSeries>& series, const Calendar& calendar,
                        const std::vector<std::string>& assets,
                        const std::vector<std::string>& features,
                        MissingPolicy policy = MissingPolicy::ForwardFill);

// Persistence: a directory of per-asset wide CSVs plus manifest.json with
// assets, features, calendar bounds and per-series availability spans.
void save_panel(const FactorPanel& panel, const std::filesystem::path& dir);
FactorPanel load_panel(const std::filesystem::path& dir);

// Model input tensors. Row r of X holds standardized returns at date
// row_date(r); the last row is the return from t-2 to t-1 where t is the
// window end passed to make_model_inputs. Y1 pairs each row's position with
// the open return it earns two days later, already multiplied by the
// volatility-scaling factor Y2 = sigma_tgt / sigma_open. Rows whose target
// would fall beyond the panel are zero-filled and flagged invalid.
struct ModelInputs {
    int rows = 0;
    int n_assets = 0;
    int n_features = 0;
    int open_feature = 0;
    std::vector<Day> row_dates;
    std::vector<double> x;    // [rows][asset][feature]
    std::vector<double> y1;   // [rows][asset]
    std::vector<double> y2;   // [rows][asset]
    std::vector<unsigned char> y_valid;  // per row

    std::size_t xidx(int r, int i, int j) const {
        return (static_cast<std::size_t>(r) * n_assets + i) * n_features + j;
    }
    std::size_t yidx(int r, int i) const { return static_cast<std::size_t>(r) * n_assets + i; }
};

// Rows cover dates [first_row_index, first_row_index + rows) of the panel
// calendar. open_feature names the column whose shifted returns become Y1.
ModelInputs build_model_inputs(const FactorPanel& panel, int first_row_index, int rows,
                               int open_feature, double sigma_target = kSigmaTarget);

// Window ending at `window_end` (exclusive of the end date itself): the last
// X row is the return into window_end - 1. Requires T + 2 days of history.
ModelInputs make_model_inputs(const FactorPanel& panel, Day window_end, int T,
                              int open_feature, double sigma_target = kSigmaTarget);

}  // namespace mfin

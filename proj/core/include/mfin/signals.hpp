#pragma once

#include <vector>

namespace mfin {

// Calendar-aligned values with per-point validity. Index alignment is the
// caller's contract; signal ops preserve length.
struct Series {
    std::vector<double> values;
    std::vector<unsigned char> valid;

    Series() = default;
    explicit Series(std::size_t n) : values(n, 0.0), valid(n, 0) {}

    std::size_t size() const { return values.size(); }
    void set(std::size_t t, double v) {
        values[t] = v;
        valid[t] = 1;
    }
    bool is_valid(std::size_t t) const { return valid[t] != 0; }
};

// value at t = levels[t] / levels[t-k] - 1; first k points (and points whose
// base level is 0 or invalid) are masked.
Series k_day_return(const Series& levels, int k);

// EWMA with alpha = 1/timescale, seeded at the first valid observation.
// Invalid points carry the previous EWMA forward (marked valid once seeded).
Series ewma(const Series& series, double timescale);

// MACD normalized by the 63-day EW std of the level series; 0 when the std
// is degenerate, masked until the std warm-up completes.
Series macd(const Series& series, double short_timescale, double long_timescale);

// Rolling EW z-score over `span` days: (x - ewm_mean) / ewm_std. Masked
// during warm-up and wherever the std is 0.
Series ew_zscore(const Series& spread, double span = 63.0, int min_obs = 10);

struct AdfResult {
    double statistic = 0.0;
    double pvalue = 1.0;
    int lags = 0;
    bool degenerate = false;  // constant series: pvalue forced to 0, flagged
};

// Augmented Dickey-Fuller test, constant-only regression, Schwert lag rule
// floor(12 * (n/100)^0.25), MacKinnon approximate p-value surface.
AdfResult adf_pvalue(const std::vector<double>& series);

}  // namespace mfin

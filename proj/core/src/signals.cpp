#include "mfin/signals.hpp"

#include <algorithm>
#include <cmath>

#include "mfin/errors.hpp"
#include "mfin/ewstats.hpp"
#include "mfin/ingest.hpp"

namespace mfin {

Series k_day_return(const Series& levels, int k) {
    if (k < 1) throw ConfigError("k_day_return: k must be >= 1");
    Series out(levels.size());
    for (std::size_t t = static_cast<std::size_t>(k); t < levels.size(); ++t) {
        if (!levels.is_valid(t) || !levels.is_valid(t - k)) continue;
        const double base = levels.values[t - k];
        if (base == 0.0) continue;  // masked point, base level degenerate
        out.set(t, levels.values[t] / base - 1.0);
    }
    return out;
}

Series ewma(const Series& series, double timescale) {
    if (timescale < 1.0) throw ConfigError("ewma: timescale must be >= 1");
    Series out(series.size());
    Ewma e(1.0 / timescale);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.is_valid(t)) e.add(series.values[t]);
        if (e.valid()) out.set(t, e.value());
    }
    return out;
}

Series macd(const Series& series, double short_timescale, double long_timescale) {
    if (!(short_timescale < long_timescale))
        throw ConfigError("macd: short timescale must be below long timescale");
    const Series fast = ewma(series, short_timescale);
    const Series slow = ewma(series, long_timescale);
    Series out(series.size());
    EwStats level_std = EwStats::from_span(kStdSpan, kStdWarmup);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.is_valid(t)) level_std.add(series.values[t]);
        if (!fast.is_valid(t) || !slow.is_valid(t) || !level_std.std_valid()) continue;
        const double sd = level_std.stddev();
        out.set(t, sd > 0.0 ? (fast.values[t] - slow.values[t]) / sd : 0.0);
    }
    return out;
}

Series ew_zscore(const Series& spread, double span, int min_obs) {
    Series out(spread.size());
    EwStats stats = EwStats::from_span(span, min_obs);
    for (std::size_t t = 0; t < spread.size(); ++t) {
        if (!spread.is_valid(t)) continue;
        stats.add(spread.values[t]);
        if (!stats.std_valid()) continue;
        const double sd = stats.stddev();
        if (sd <= 0.0) continue;  // zero variance: masked
        out.set(t, (spread.values[t] - stats.mean()) / sd);
    }
    return out;
}

namespace {

// Solves the symmetric positive-definite system A x = b in place (Cholesky).
// Returns false if A is not positive definite.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (int i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return true;
}

double stdnorm_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

// MacKinnon (1994, 2010) approximate p-value surface, constant-only case.
double mackinnon_pvalue(double tau) {
    constexpr double tau_star = -1.61;
    constexpr double tau_min = -18.83;
    constexpr double tau_max = 2.74;
    if (tau <= tau_min) return 0.0;
    if (tau >= tau_max) return 1.0;
    double z;
    if (tau <= tau_star) {
        const double c[] = {2.1659, 1.4412, 0.038269};
        z = c[0] + tau * (c[1] + tau * c[2]);
    } else {
        const double c[] = {1.7339, 0.93202, -0.12745, -0.010368};
        z = c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]));
    }
    return stdnorm_cdf(z);
}

}  // namespace

AdfResult adf_pvalue(const std::vector<double>& series) {
    const int n = static_cast<int>(series.size());
    if (n < 30) throw ConfigError("adf_pvalue: need at least 30 observations");

    AdfResult res;
    const double first = series.front();
    bool constant = true;
    for (double v : series)
        if (v != first) {
            constant = false;
            break;
        }
    if (constant) {
        res.degenerate = true;
        res.pvalue = 0.0;
        res.statistic = 0.0;
        return res;
    }

    const int p = static_cast<int>(12.0 * std::pow(n / 100.0, 0.25));
    res.lags = std::min(p, n / 2 - 2);

    // Regression: dy_t = c + g*y_{t-1} + sum phi_l dy_{t-l}. For conditioning
    // the level series is centered and scaled; the t-stat is affine-invariant.
    double mu = 0.0;
    for (double v : series) mu += v;
    mu /= n;
    double sc = 0.0;
    for (double v : series) sc += (v - mu) * (v - mu);
    sc = std::sqrt(sc / n);
    if (sc <= 0.0) sc = 1.0;
    std::vector<double> y(n);
    for (int t = 0; t < n; ++t) y[t] = (series[t] - mu) / sc;

    std::vector<double> dy(n - 1);
    for (int t = 1; t < n; ++t) dy[t - 1] = y[t] - y[t - 1];

    const int lags = res.lags;
    const int rows = n - 1 - lags;
    const int cols = 2 + lags;  // intercept, y_{t-1}, lagged diffs
    if (rows <= cols) throw ConfigError("adf_pvalue: series too short for lag order");

    std::vector<double> xtx(static_cast<std::size_t>(cols) * cols, 0.0);
    std::vector<double> xty(cols, 0.0);
    auto regressor = [&](int r, int c) -> double {
        const int t = lags + r;  // dy index of the dependent observation
        if (c == 0) return 1.0;
        if (c == 1) return y[t];         // level lagged one step
        return dy[t - (c - 1)];          // dy_{t-l}
    };
    double yty = 0.0;
    for (int r = 0; r < rows; ++r) {
        const double target = dy[lags + r];
        yty += target * target;
        for (int c = 0; c < cols; ++c) {
            const double xc = regressor(r, c);
            xty[c] += xc * target;
            for (int c2 = c; c2 < cols; ++c2) xtx[c * cols + c2] += xc * regressor(r, c2);
        }
    }
    for (int c = 0; c < cols; ++c)
        for (int c2 = 0; c2 < c; ++c2) xtx[c * cols + c2] = xtx[c2 * cols + c];

    std::vector<double> beta = xty;
    std::vector<double> chol = xtx;
    if (!solve_spd(chol, beta, cols)) {
        res.degenerate = true;
        res.pvalue = 0.0;
        return res;
    }

    double ssr = yty;
    for (int c = 0; c < cols; ++c) ssr -= beta[c] * xty[c];
    ssr = std::fmax(ssr, 0.0);
    const double sigma2 = ssr / (rows - cols);

    // Variance of the unit-root coefficient: sigma2 * [(X'X)^-1]_{11}.
    std::vector<double> e(cols, 0.0);
    e[1] = 1.0;
    std::vector<double> chol2 = xtx;
    if (!solve_spd(chol2, e, cols)) {
        res.degenerate = true;
        res.pvalue = 0.0;
        return res;
    }
    const double se = std::sqrt(sigma2 * e[1]);
    if (!(se > 0.0)) {
        res.degenerate = true;
        res.pvalue = 0.0;
        return res;
    }
    res.statistic = beta[1] / se;
    res.pvalue = mackinnon_pvalue(res.statistic);
    return res;
}

}  // namespace mfin

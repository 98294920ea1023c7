#include "mfin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mfin/errors.hpp"
#include "mfin/ingest.hpp"

namespace mfin {

namespace {
constexpr double kAnnual = kTradingDays;
double stdnorm_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }
}  // namespace

double mean_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev_of(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / (static_cast<double>(x.size()) - 1.0));
}

namespace {
// Exactly-constant series must count as zero-variance even when accumulated
// floating point dust makes the sample std a few ulps above zero.
bool is_constant(std::span<const double> x) {
    for (double v : x)
        if (v != x.front()) return false;
    return true;
}
}  // namespace

std::optional<double> sharpe(std::span<const double> daily) {
    if (daily.size() < 2 || is_constant(daily)) return std::nullopt;
    const double sd = stddev_of(daily);
    if (sd <= 0.0) return std::nullopt;
    return std::sqrt(kAnnual) * mean_of(daily) / sd;
}

std::optional<double> sortino(std::span<const double> daily) {
    if (daily.size() < 2) return std::nullopt;
    double s = 0.0;
    for (double v : daily) {
        const double d = std::min(v, 0.0);
        s += d * d;
    }
    const double downside = std::sqrt(s / static_cast<double>(daily.size()));
    if (downside <= 0.0) return std::nullopt;
    return std::sqrt(kAnnual) * mean_of(daily) / downside;
}

double annualized_return(std::span<const double> daily) { return mean_of(daily) * kAnnual; }

double annualized_vol(std::span<const double> daily) {
    return stddev_of(daily) * std::sqrt(kAnnual);
}

Drawdown max_drawdown(std::span<const double> daily) {
    Drawdown dd;
    double equity = 1.0, peak = 1.0, worst = 0.0;
    for (double r : daily) {
        equity *= 1.0 + r;
        peak = std::max(peak, equity);
        if (peak > 0.0) worst = std::max(worst, 1.0 - equity / peak);
    }
    dd.pct = worst;
    const double vol = annualized_vol(daily);
    dd.sigma_mult = vol > 0.0 ? worst / vol : 0.0;
    return dd;
}

std::optional<double> calmar(std::span<const double> daily) {
    const auto dd = max_drawdown(daily);
    if (dd.pct <= 0.0) return std::nullopt;  // flagged infinite
    return annualized_return(daily) / dd.pct;
}

double hit_rate(std::span<const double> daily) {
    if (daily.empty()) return 0.0;
    std::int64_t up = 0;
    for (double v : daily)
        if (v > 0.0) ++up;
    return static_cast<double>(up) / static_cast<double>(daily.size());
}

std::optional<double> pnl_ratio(std::span<const double> daily) {
    double up = 0.0, down = 0.0;
    std::int64_t nu = 0, nd = 0;
    for (double v : daily) {
        if (v > 0.0) {
            up += v;
            ++nu;
        } else if (v < 0.0) {
            down += v;
            ++nd;
        }
    }
    if (nd == 0 || nu == 0) return std::nullopt;  // flagged infinite / zero
    return (up / nu) / std::abs(down / nd);
}

namespace {

std::vector<double> ranks_of(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    return rank;
}

double pearson_of(std::span<const double> a, std::span<const double> b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    const double denom = std::sqrt(saa * sbb);
    return denom > 0.0 ? sab / denom : 0.0;
}

}  // namespace

CorrPair correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ConfigError("correlation: series must have equal length >= 2");
    CorrPair out;
    out.pearson = pearson_of(a, b);
    const auto ra = ranks_of(a);
    const auto rb = ranks_of(b);
    out.spearman = pearson_of(ra, rb);
    return out;
}

double skewness(std::span<const double> x) {
    const double m = mean_of(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m3 /= static_cast<double>(x.size());
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

double kurtosis(std::span<const double> x) {
    const double m = mean_of(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(x.size());
    m4 /= static_cast<double>(x.size());
    if (m2 <= 0.0) return 3.0;
    return m4 / (m2 * m2);
}

namespace {

struct SrMoments {
    double sr;     // daily Sharpe
    double skew;
    double kurt;
    bool ok;
};

SrMoments sr_moments(std::span<const double> daily) {
    SrMoments m{0.0, 0.0, 3.0, false};
    if (daily.size() < 30 || is_constant(daily)) return m;
    const double sd = stddev_of(daily);
    if (sd <= 0.0) return m;
    m.sr = mean_of(daily) / sd;
    m.skew = skewness(daily);
    m.kurt = kurtosis(daily);
    if (!std::isfinite(m.skew) || !std::isfinite(m.kurt))
        throw NumericError("psr: non-finite skew/kurtosis");
    m.ok = true;
    return m;
}

std::optional<double> psr_formula(const SrMoments& m, std::int64_t n, double sr_star) {
    if (!m.ok || n < 2) return std::nullopt;
    const double denom =
        1.0 - m.skew * m.sr + (m.kurt - 1.0) / 4.0 * m.sr * m.sr;
    if (denom <= 0.0) return std::nullopt;
    const double z =
        (m.sr - sr_star) * std::sqrt(static_cast<double>(n - 1)) / std::sqrt(denom);
    return stdnorm_cdf(z);
}

}  // namespace

std::optional<double> psr(std::span<const double> daily, double benchmark_sr_daily) {
    const auto m = sr_moments(daily);
    return psr_formula(m, static_cast<std::int64_t>(daily.size()), benchmark_sr_daily);
}

std::optional<double> psr_at_length(std::span<const double> daily, std::int64_t n,
                                    double benchmark_sr_daily) {
    const auto m = sr_moments(daily);
    return psr_formula(m, n, benchmark_sr_daily);
}

std::optional<std::int64_t> min_track_record(std::span<const double> daily,
                                             double benchmark_sr_daily, double confidence) {
    const auto m = sr_moments(daily);
    if (!m.ok || m.sr <= benchmark_sr_daily) return std::nullopt;
    auto reaches = [&](std::int64_t n) {
        const auto p = psr_formula(m, n, benchmark_sr_daily);
        return p && *p >= confidence;
    };
    // PSR is strictly increasing in n when sr > sr*; exponential bracket then
    // bisect for the smallest qualifying n.
    std::int64_t hi = 2;
    while (!reaches(hi)) {
        if (hi > (std::int64_t{1} << 40)) return std::nullopt;
        hi *= 2;
    }
    std::int64_t lo = hi / 2 < 2 ? 1 : hi / 2;
    while (lo + 1 < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (reaches(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

MetricsReport compute_metrics(std::span<const double> daily, const std::string& label,
                              std::span<const double> benchmark) {
    MetricsReport r;
    r.label = label;
    r.n_days = static_cast<int>(daily.size());
    r.mar = annualized_return(daily);
    r.vol = annualized_vol(daily);
    r.mdd = max_drawdown(daily);
    r.sharpe = sharpe(daily);
    r.sortino = sortino(daily);
    r.calmar = calmar(daily);
    r.hit_rate = hit_rate(daily);
    r.pnl_ratio = pnl_ratio(daily);
    if (!benchmark.empty() && benchmark.size() == daily.size())
        r.corr_to_benchmark = correlation(daily, benchmark);
    if (daily.size() >= 30) {
        r.psr = psr(daily);
        r.mtr_days = min_track_record(daily);
    }
    return r;
}

}  // namespace mfin

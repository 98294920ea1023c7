#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfin {

double mean_of(std::span<const double> x);
double stddev_of(std::span<const double> x);  // unbiased, n-1

/// Annualized Sharpe sqrt(252) * mean/std; nullopt when the std is 0.
std::optional<double> sharpe(std::span<const double> daily);

/// Annualized Sortino with zero-floored downside deviation; nullopt when
/// there is no downside.
std::optional<double> sortino(std::span<const double> daily);

double annualized_return(std::span<const double> daily);  // arithmetic mean * 252
double annualized_vol(std::span<const double> daily);

struct Drawdown {
    double pct = 0.0;         // peak-to-trough on compounded equity, in [0,1]
    double sigma_mult = 0.0;  // pct / annualized vol
};
Drawdown max_drawdown(std::span<const double> daily);

/// Annualized return over max drawdown; nullopt (flagged infinite) when the
/// drawdown is 0.
std::optional<double> calmar(std::span<const double> daily);

double hit_rate(std::span<const double> daily);  // fraction of days > 0
/// mean(positive) / |mean(negative)|; nullopt when no losing days.
std::optional<double> pnl_ratio(std::span<const double> daily);

struct CorrPair {
    double pearson = 0.0;
    double spearman = 0.0;
};
CorrPair correlation(std::span<const double> a, std::span<const double> b);

double skewness(std::span<const double> x);
double kurtosis(std::span<const double> x);  // raw (Gaussian = 3)

// Probabilistic Sharpe Ratio against a daily benchmark Sharpe: probability
// that the true Sharpe exceeds the benchmark given the sample moments.
// Requires n >= 30 observations.
std::optional<double> psr(std::span<const double> daily, double benchmark_sr_daily = 0.0);

// Same formula at a hypothetical track length n (sample moments held fixed).
std::optional<double> psr_at_length(std::span<const double> daily, std::int64_t n,
                                    double benchmark_sr_daily = 0.0);

// Minimum track record: smallest n with PSR(n) >= confidence. nullopt when
// the sample Sharpe does not exceed the benchmark.
std::optional<std::int64_t> min_track_record(std::span<const double> daily,
                                             double benchmark_sr_daily = 0.0,
                                             double confidence = 0.99);

// All headline statistics for one return series (correlations vs. an
// optional benchmark series). Percent/bps conversions happen at the writer.
struct MetricsReport {
    std::string label;
    int n_days = 0;
    double mar = 0.0;
    double vol = 0.0;
    Drawdown mdd;
    std::optional<double> sharpe;
    std::optional<double> sortino;
    std::optional<double> calmar;
    double hit_rate = 0.0;
    std::optional<double> pnl_ratio;
    std::optional<CorrPair> corr_to_benchmark;
    std::optional<double> breakeven_bps;  // filled by the harness when known
    std::optional<double> psr;
    std::optional<std::int64_t> mtr_days;
};

MetricsReport compute_metrics(std::span<const double> daily, const std::string& label,
                              std::span<const double> benchmark = {});

}  // namespace mfin

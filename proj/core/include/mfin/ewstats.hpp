#pragma once

#include <cmath>
#include <cstdint>

namespace mfin {

// Exponentially-weighted mean/std with adjust-style weighting: observation k
// steps back carries weight (1-alpha)^k, the variance gets the unbiased
// weight correction W^2 / (W^2 - W2). Welford-style update keeps it stable
// when levels are large and the variance is tiny.
class EwStats {
public:
    // span convention: alpha = 2 / (span + 1)   (63-day and 21-day stats)
    static EwStats from_span(double span, int min_obs) {
        return EwStats(2.0 / (span + 1.0), min_obs);
    }

    EwStats(double alpha, int min_obs) : lambda_(1.0 - alpha), min_obs_(min_obs) {}

    void add(double x) {
        const double w_total = lambda_ * w_ + 1.0;
        const double delta = x - mean_;
        const double mean_new = mean_ + delta / w_total;
        s_ = lambda_ * s_ + delta * (x - mean_new);
        mean_ = mean_new;
        w_ = w_total;
        w2_ = lambda_ * lambda_ * w2_ + 1.0;
        ++n_;
    }

    int count() const { return n_; }
    bool mean_valid() const { return n_ >= 1; }
    bool std_valid() const { return n_ >= min_obs_ && n_ >= 2; }

    double mean() const { return mean_; }

    double variance() const {
        if (!std_valid()) return 0.0;
        const double denom = w_ * w_ - w2_;
        if (denom <= 0.0) return 0.0;
        const double biased = s_ / w_;
        return std::fmax(0.0, biased * (w_ * w_ / denom));
    }

    double stddev() const { return std::sqrt(variance()); }

private:
    double lambda_;
    int min_obs_;
    double mean_ = 0.0;
    double s_ = 0.0;   // weighted sum of squared deviations
    double w_ = 0.0;   // sum of weights
    double w2_ = 0.0;  // sum of squared weights
    int n_ = 0;
};

// Plain EWMA recursion e_t = (1-a) e_{t-1} + a x_t, seeded at the first
// observation. Signal timescales use a = 1/timescale.
class Ewma {
public:
    explicit Ewma(double alpha) : alpha_(alpha) {}

    void add(double x) {
        if (n_ == 0)
            value_ = x;
        else
            value_ = (1.0 - alpha_) * value_ + alpha_ * x;
        ++n_;
    }

    bool valid() const { return n_ > 0; }
    double value() const { return value_; }

private:
    double alpha_;
    double value_ = 0.0;
    std::int64_t n_ = 0;
};

}  // namespace mfin

#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace dimerlab {

/** Non-negative weight stored as its logarithm; zero is -inf. */
class LogWeight {
public:
    constexpr LogWeight() = default;

    [[nodiscard]] static constexpr LogWeight from_log(double log_value) noexcept {
        LogWeight w;
        w.log_ = log_value;
        return w;
    }
    [[nodiscard]] static LogWeight from_value(double value) noexcept {
        return from_log(std::log(value));
    }
    [[nodiscard]] static constexpr LogWeight zero() noexcept { return {}; }
    [[nodiscard]] static constexpr LogWeight one() noexcept { return from_log(0.0); }

    [[nodiscard]] constexpr double log() const noexcept { return log_; }
    [[nodiscard]] double value() const noexcept { return std::exp(log_); }
    [[nodiscard]] constexpr bool is_zero() const noexcept {
        return log_ == -std::numeric_limits<double>::infinity();
    }

    LogWeight& operator+=(LogWeight other) noexcept {
        if (other.is_zero()) return *this;
        if (is_zero()) return *this = other;
        const double hi = log_ > other.log_ ? log_ : other.log_;
        const double lo = log_ > other.log_ ? other.log_ : log_;
        log_ = hi + std::log1p(std::exp(lo - hi));
        return *this;
    }
    LogWeight& operator*=(LogWeight other) noexcept {
        log_ += other.log_;
        return *this;
    }
    friend LogWeight operator+(LogWeight a, LogWeight b) noexcept { return a += b; }
    friend LogWeight operator*(LogWeight a, LogWeight b) noexcept { return a *= b; }

private:
    double log_ = -std::numeric_limits<double>::infinity();
};

/** Streaming log-sum-exp with a running maximum and Neumaier-compensated sum. */
class LogAccumulator {
public:
    void add(double log_term) noexcept {
        if (log_term == -std::numeric_limits<double>::infinity()) return;
        if (log_term > max_) {
            const double scale = std::exp(max_ - log_term);
            sum_ *= scale;
            comp_ *= scale;
            max_ = log_term;
            accumulate(1.0);
        } else {
            accumulate(std::exp(log_term - max_));
        }
    }
    [[nodiscard]] LogWeight total() const noexcept {
        const double s = sum_ + comp_;
        if (s == 0.0) return LogWeight::zero();
        return LogWeight::from_log(max_ + std::log(s));
    }

private:
    void accumulate(double x) noexcept {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }

    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/** Two-pass log-sum-exp: max first, then the shifted sum. */
[[nodiscard]] inline double log_sum_exp(std::span<const double> terms) noexcept {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = t > mx ? t : mx;
    if (mx == -std::numeric_limits<double>::infinity()) return mx;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

}  // namespace dimerlab

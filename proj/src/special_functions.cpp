#include "dimerlab/special_functions.hpp"

#include <cmath>
#include <limits>

#include "dimerlab/errors.hpp"

namespace dimerlab {

namespace {

// s = sqrt(1 + 4 e^{-2h}) for h > 0; g = 2 / (1 + s).
double s_positive(double h) noexcept { return std::sqrt(1.0 + 4.0 * std::exp(-2.0 * h)); }

}  // namespace

double g(double h) noexcept {
    if (h > 0.0) return 2.0 / (1.0 + s_positive(h));
    // Multiply through by e^h so nothing overflows as h -> -inf.
    const double t = std::exp(h);
    return 2.0 * t / (t + std::sqrt(t * t + 4.0));
}

double one_minus_g(double h) noexcept {
    if (h > 0.0) {
        const double s = s_positive(h);
        return 4.0 * std::exp(-2.0 * h) / ((1.0 + s) * (1.0 + s));
    }
    return 1.0 - g(h);
}

double g_inverse(double k) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("g_inverse: argument must lie in (0, 1)");
    return std::log(k) - 0.5 * std::log1p(-k);
}

GDerivatives g_derivatives(double h) noexcept {
    const double gv = g(h);
    const double q = one_minus_g(h);
    const double two_minus_g = 1.0 + q;
    const double g1 = 2.0 * gv * q / two_minus_g;
    const double g2 = (2.0 * g1 * (q - gv) + g1 * g1) / two_minus_g;
    const double g3 = (g2 * (2.0 - 4.0 * gv + 3.0 * g1) - 4.0 * g1 * g1) / two_minus_g;
    return {gv, g1, g2, g3};
}

double pressure_md(double h) noexcept {
    const double q = one_minus_g(h);
    return -0.5 * q - 0.5 * std::log(q);
}

DensitiesOfX f_of_x(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("f_of_x: x must be positive and finite");
    // Rationalised forms of (2 + x^2 - sqrt(x^4 + 4x^2))/4 and its complement.
    const double r = x * std::hypot(x, 2.0);
    const double denom = 2.0 + x * x + r;
    return {1.0 / denom, (x * x + r) / denom};
}

double pressure_md_x(double x) {
    const auto [f, gv] = f_of_x(x);
    const double f_term = f > 0.0 ? f * (1.0 - std::log(f) - std::log(2.0)) : 0.0;
    return f_term + gv * (1.0 - std::log(gv) + std::log(x)) - 1.0;
}

GPrimeThreshold g_prime_threshold(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("g_prime_threshold: c must be positive");
    if (c > kThresholdC + kThresholdDegenerateTol) {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        return {GPrimeThreshold::Kind::everywhere_below, nan, nan};
    }
    if (c >= kThresholdC - kThresholdDegenerateTol) {
        return {GPrimeThreshold::Kind::degenerate, kCritical.xi_c, kCritical.xi_c};
    }
    const double root = (2.0 - c) * std::sqrt(c * c - 12.0 * c + 4.0);
    const double base = -(c * c + 8.0 * c - 4.0);
    // base > 0 for c below the threshold; a_minus * a_plus = 2c avoids the
    // cancellation in base - root when c is small.
    const double a_plus = (base + root) / (4.0 * c);
    const double a_minus = 2.0 * c / a_plus;
    return {GPrimeThreshold::Kind::interval, 0.5 * std::log(a_minus), 0.5 * std::log(a_plus)};
}

}  // namespace dimerlab

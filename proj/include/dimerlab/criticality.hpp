#pragma once

#include <span>
#include <string>
#include <vector>

#include "dimerlab/variational.hpp"

namespace dimerlab {

/** Coefficients of the local cubic X^3 - kappa1 (J - J_c) X - kappa2 rho = 0, X = xi - xi_c. */
struct CubicCoefficients {
    double kappa1;
    double kappa2;
    double rho;  // h - h_c + (2 m_c - 1)(J - J_c)
};

[[nodiscard]] CubicCoefficients critical_cubic_coefficients(ModelPoint p);

/** Cubic evaluated at xi; vanishes to fourth order in xi - xi_c on solutions. */
[[nodiscard]] double critical_cubic_residual(double xi, ModelPoint p);

/** m-values from the real roots of the truncated cubic, ascending. */
[[nodiscard]] std::vector<double> truncated_cubic_roots(ModelPoint p);

struct AmplitudeConstants {
    double C_m;    // tangent curve, square-root branches
    double C_phi;  // inflection points along the tangent curve
    double C_inf;  // J = J_c, h -> h_c+
    /** Signed amplitude of the cube-root law along h - h_c = alpha (J - J_c). */
    [[nodiscard]] double C_alpha(double alpha) const;
};

[[nodiscard]] AmplitudeConstants amplitude_constants() noexcept;

/** Slope 1 - 2 m_c of the common tangent of the psi curves at the critical point. */
inline constexpr double kTangentSlope = 1.0 - 2.0 * kCritical.m_c;

/** Path approaching the critical point, parametrised by a distance d > 0. */
struct CurveSpec {
    enum class Kind { tangent, slope, flat };
    Kind kind = Kind::tangent;
    double alpha = 0.0;  // only for Kind::slope

    [[nodiscard]] static CurveSpec tangent() { return {Kind::tangent, kTangentSlope}; }
    [[nodiscard]] static CurveSpec slope(double a) { return {Kind::slope, a}; }
    [[nodiscard]] static CurveSpec flat() { return {Kind::flat, 0.0}; }

    /** Point at distance d: J = J_c + d along the line, or h = h_c + d at J = J_c. */
    [[nodiscard]] ModelPoint at(double d) const;
    [[nodiscard]] std::string name() const;
    /** Exponent the deviation should follow on this curve. */
    [[nodiscard]] double nominal_exponent() const;
};

/** Distances 1e-2 * 2^-k down to 1e-6. */
[[nodiscard]] std::vector<double> default_distances();

struct ExponentSample {
    double distance;
    double deviation;  // m - m_c, signed
};

struct ExponentFit {
    double slope;
    double intercept;
    double r2;
    double amplitude;          // exp(intercept), magnitude only
    int dropped;               // largest distances removed to reach r2 >= 0.999
    double nominal_exponent;   // beta used for the leading amplitude
    double leading_amplitude;  // A in dev = d^beta (A + B d^beta), signed
    std::vector<ExponentSample> samples;  // ascending distance
};

/**
 * Least-squares fit of log|deviation| against log distance, dropping up to two
 * of the largest distances while r2 < 0.999. The leading amplitude comes from
 * a separate linear fit that absorbs the first correction term. Throws
 * FitQualityError if r2 is still below 0.999.
 */
[[nodiscard]] ExponentFit fit_power_law(std::vector<ExponentSample> samples, double nominal_exponent);

/** Power law of |m - m_c| along a curve; Branch::unique follows the global maximizer. */
[[nodiscard]] ExponentFit exponent_fit(const CurveSpec& curve, std::span<const double> distances,
                                       Branch branch);

struct WallExponentCheck {
    ExponentFit upper;  // m2 - m_c on the coexistence line
    ExponentFit lower;  // m_c - m1
    double ratio_min;   // min over samples of |m_i - m_c| / sqrt(d)
    double ratio_max;
    bool within_band;   // all ratios within a factor 2 of C_m
};

[[nodiscard]] WallExponentCheck wall_exponent_check(std::span<const double> distances);

struct FlexScaling {
    ExponentFit upper;  // phi2 - m_c along the tangent curve
    ExponentFit lower;  // m_c - phi1
    double ratio_upper_smallest;  // (phi2 - m_c) / (C_phi sqrt d) at the smallest d
    double ratio_lower_smallest;
};

[[nodiscard]] FlexScaling flex_point_scaling(std::span<const double> distances);

}  // namespace dimerlab

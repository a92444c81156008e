#pragma once

// Scalar functions of the monomer-dimer mean-field solution.
// g(h) is the limiting monomer density of the pure model on the complete
// graph at monomer field h; everything else is built from it.

namespace dimerlab {

/** Location of the critical point and its derived constants. */
struct CriticalConstants {
    double J_c;   // 1 / (4(3 - 2 sqrt 2))
    double h_c;   // log(2 sqrt 2 - 2)/2 - 1/4
    double m_c;   // 2 - sqrt 2
    double xi_c;  // log(2 sqrt 2 - 2)/2, the inflection point of g
};

inline constexpr CriticalConstants kCritical{
    1.4571067811865475244, -0.34411320322979885791, 0.58578643762690495120,
    -0.094113203229798857908};

/** Degenerate threshold value 6 - 4 sqrt 2 = g'(xi_c) = 1/(2 J_c). */
inline constexpr double kThresholdC = 0.34314575050761980479;
inline constexpr double kThresholdDegenerateTol = 1e-14;

/** Monomer density g(h) in (0, 1); strictly increasing. */
[[nodiscard]] double g(double h) noexcept;

/** 1 - g(h) without cancellation for large h. */
[[nodiscard]] double one_minus_g(double h) noexcept;

/** Inverse of g on (0, 1); throws DomainError outside. */
[[nodiscard]] double g_inverse(double k);

struct GDerivatives {
    double g;
    double g1;
    double g2;
    double g3;
};

/** g and its first three derivatives, all expressed through g itself. */
[[nodiscard]] GDerivatives g_derivatives(double h) noexcept;

/** Mean-field pressure of the pure model; its derivative in h is g. */
[[nodiscard]] double pressure_md(double h) noexcept;

/** Same pressure written as a function of the activity x = e^h (x > 0). */
[[nodiscard]] double pressure_md_x(double x);

struct DensitiesOfX {
    double f;  // dimer density per site, (1 - g)/2
    double g;  // monomer density, 1 - 2f
};

/** Densities as functions of x = e^h; throws DomainError for x <= 0. */
[[nodiscard]] DensitiesOfX f_of_x(double x);

/** Set where g' exceeds a level c > 0. */
struct GPrimeThreshold {
    enum class Kind { everywhere_below, degenerate, interval };
    Kind kind;
    double lower;  // valid unless kind == everywhere_below
    double upper;
};

/** g' < c everywhere, or g' > c exactly on (lower, upper). */
[[nodiscard]] GPrimeThreshold g_prime_threshold(double c);

}  // namespace dimerlab

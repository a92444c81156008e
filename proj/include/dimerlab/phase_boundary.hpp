#pragma once

#include <vector>

#include "dimerlab/variational.hpp"

namespace dimerlab {

/** Point of the coexistence line h = gamma(J), J > J_c. */
struct WallSample {
    double J;
    double gamma;
    double gamma_prime;      // 1 - m1 - m2
    double m1;
    double m2;
    double delta_residual;   // |p~(m2) - p~(m1)| at gamma
    double gamma_plus_half;  // gamma + 1/2 without the rounding of gamma itself
    double m2_complement;    // 1 - m2
    bool degenerate_strip;   // psi1 - psi2 < 1e-12; gamma is the strip midpoint

    [[nodiscard]] double jump() const noexcept { return m2 - m1; }
};

/** p~(m2) - p~(m1); throws DomainError for h outside [psi2(J), psi1(J)]. */
[[nodiscard]] double delta(ModelPoint p);

/** Unique zero of delta in h by bisection to 1e-12, then Newton with slope m2 - m1. */
[[nodiscard]] WallSample wall(double J);

/** Geometrically spaced J in [J_min, J_max], endpoints exact. */
[[nodiscard]] std::vector<double> wall_grid(double J_min, double J_max, int steps);

/** wall(J) for every J of wall_grid. */
[[nodiscard]] std::vector<WallSample> wall_table(double J_min, double J_max, int steps);

}  // namespace dimerlab

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dimerlab/special_functions.hpp"

namespace dimerlab {

/** Monomer field h and imitation coupling J > 0. */
struct ModelPoint {
    double h;
    double J;
};

/** Throws DomainError unless J > 0 and both parameters are finite. */
void validate(ModelPoint p);

struct Tolerances {
    double boundary = 1e-9;   // |h - psi_i| below this is on the psi curve
    double wall = 1e-10;      // |Delta| below this is on the coexistence line
    double bisection = 1e-14;
};

/** Variational functional p~(m) whose maxima give the pressure. */
[[nodiscard]] double tilde_p(double m, ModelPoint p);

struct TildePDerivatives {
    double first;
    double second;
    double third;
    double fourth;
};

[[nodiscard]] TildePDerivatives tilde_p_derivatives(double m, ModelPoint p);

struct InflectionPoints {
    double phi1;
    double phi2;
    bool degenerate;  // phi1 == phi2 at J = J_c
};

/** Zeros of the second derivative of p~ in m; none for J < J_c. */
[[nodiscard]] std::optional<InflectionPoints> inflection_points(ModelPoint p);

struct PsiCurves {
    double psi1;  // upper boundary of the three-solution strip
    double psi2;  // lower boundary
};

/** Strip boundaries in h; throws DomainError for J < J_c. */
[[nodiscard]] PsiCurves psi_curves(double J);

enum class Region { subcritical, three_solutions, above_psi1, on_psi1, below_psi2, on_psi2 };
enum class PointKind { global_max_candidate, local_max, local_min, inflection_degenerate };
enum class Branch { m1, m0, m2, unique };

[[nodiscard]] std::string_view to_string(Region r) noexcept;
[[nodiscard]] std::string_view to_string(PointKind k) noexcept;
[[nodiscard]] std::string_view to_string(Branch b) noexcept;

struct StationaryPoint {
    double m;
    double complement;  // 1 - m, accurate when m is close to 1
    PointKind kind;
    Branch branch;
    double bracket_lo;
    double bracket_hi;
    double residual;  // |m - g((2m-1)J + h)|
};

struct StationaryReport {
    ModelPoint point;
    Region region;
    std::vector<StationaryPoint> points;  // ordered by m
    std::optional<InflectionPoints> phi;
    std::optional<PsiCurves> psi;

    [[nodiscard]] const StationaryPoint* find(Branch b) const noexcept;
};

/** All stationary points of p~ on (0, 1) with their classification. */
[[nodiscard]] StationaryReport classify(ModelPoint p, const Tolerances& tol = {});

/**
 * p~(1 - m2_complement) - p~(m1) with the O(J) terms cancelled analytically.
 * h + 1/2 is passed on its own because near the large-J coexistence line it
 * is far smaller than the rounding error of h.
 */
[[nodiscard]] double branch_pressure_gap(double h_plus_half, double J, double m1, double m2_complement);

struct GlobalMaximizer {
    bool on_wall;
    double m;  // NaN on the wall
    Branch branch;
    std::optional<double> m1;  // set in the three-solution region
    std::optional<double> m2;
    double pressure;
    double gap;  // p~(m2) - p~(m1), NaN outside the three-solution region
};

[[nodiscard]] GlobalMaximizer global_maximizer(ModelPoint p, const Tolerances& tol = {});

struct Susceptibilities {
    double dm_dh;
    double dm_dJ;
    double dp_dh;  // derivative of p~ along the branch
    double dp_dJ;
};

/**
 * Derivatives along a stationary branch. Branch::unique means the global
 * maximizer. Outside the three-solution region m1 and m2 resolve to the single
 * root. Throws BranchUndefined if the branch does not exist or is degenerate.
 */
[[nodiscard]] Susceptibilities susceptibilities(ModelPoint p, Branch b);

struct LargeJRow {
    double J;
    std::optional<double> m1, m0, m2;
    std::optional<double> J_m1;
    std::optional<double> J_one_minus_m2;
};

/** Three-solution branches at large J; absent branches are left empty. */
[[nodiscard]] std::vector<LargeJRow> large_J_asymptotics(std::span<const double> Js, double h);

}  // namespace dimerlab

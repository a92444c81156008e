#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dimerlab/graph.hpp"
#include "dimerlab/log_weight.hpp"

namespace dimerlab {

inline constexpr int kMaxEnumerateVertices = 24;
inline constexpr int kMaxRecursionVertices = 30;
inline constexpr long kMaxHermiteVertices = 200;
inline constexpr long kMaxCompleteGraphVertices = 10'000'000;

struct FiniteSystemResult {
    long n;
    double log_partition_per_site;  // log Z / n
    double monomer_density;         // <#monomers> / n; NaN when not computed
};

/** Brute-force sum over all configurations (n <= 24). */
[[nodiscard]] LogWeight enumerate_partition(const GraphSpec& g);

/** Vertex-deletion recursion memoised on the remaining vertex set (n <= 30). */
[[nodiscard]] LogWeight hl_recursion_partition(const GraphSpec& g);

/** Complete graph, monomer activity e^h, dimer activity 1/n: closed-form sum over dimer counts. */
[[nodiscard]] FiniteSystemResult complete_graph_partition(long n, double h);

/** Complete graph via the vertex-deletion recursion specialised to K_n (n <= 10^7). */
[[nodiscard]] FiniteSystemResult complete_graph_recursion_partition(long n, double h);

/**
 * Complete graph via the Hermite identity Z_n(x) = (i/sqrt n)^n H_n(-i x sqrt n),
 * evaluated with the rotated three-term recurrence so every term is positive (n <= 200).
 */
[[nodiscard]] FiniteSystemResult hermite_partition(long n, double h);

/** Five-parameter imitative model on K_n: fields on monomers and dimers, three couplings. */
struct GeneralParameters {
    double h_m;
    double h_d;
    double J_m;   // monomer-monomer
    double J_d;   // dimer-dimer
    double J_md;  // monomer-dimer
};

/**
 * Equivalent two-parameter model. log Z_general = log Z(h, J) + n * log_constant_shift.
 * With n given the match is exact at that size; without it h is the large-n value.
 */
struct ReducedParameters {
    double h;
    double J;
    double log_constant_shift;
};

[[nodiscard]] ReducedParameters reduce_parameters(const GeneralParameters& p,
                                                  std::optional<long> n = std::nullopt);

/** Two-parameter imitative model on K_n (J >= 0). At J = 0 this is complete_graph_partition exactly. */
[[nodiscard]] FiniteSystemResult imitative_partition(long n, double h, double J);

struct DensityScanRow {
    FiniteSystemResult finite;
    double limit_pressure;
    double limit_density;  // NaN on the coexistence line
    double pressure_error;
    double density_error;
};

[[nodiscard]] std::vector<DensityScanRow> finite_density_scan(std::span<const long> ns, double h,
                                                              double J);

}  // namespace dimerlab

#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace dimerlab {

struct Edge {
    int u;
    int v;
    double w;  // dimer activity
};

/**
 * Finite simple graph with monomer activities x_v and dimer activities w_uv.
 *
 * Text format: first line "n m", then m lines "u v w", then n lines "v x_v",
 * vertices 0-indexed.
 */
struct GraphSpec {
    int n = 0;
    std::vector<Edge> edges;
    std::vector<double> x;

    /** Throws std::invalid_argument on self-loops, duplicates, bad indices or non-positive weights. */
    void validate() const;

    [[nodiscard]] static GraphSpec complete(int n, double x, double w);
    [[nodiscard]] static GraphSpec parse(std::istream& in);
    void write(std::ostream& out) const;
};

/**
 * Calls visit(edge_indices) once for every monomer-dimer configuration,
 * including the empty one. Edge indices refer to g.edges.
 */
void for_each_configuration(const GraphSpec& g,
                            const std::function<void(std::span<const int>)>& visit);

}  // namespace dimerlab

#include "dimerlab/finite_system.hpp"

#include <cmath>
#include <bit>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dimerlab/errors.hpp"
#include "dimerlab/special_functions.hpp"
#include "dimerlab/variational.hpp"

namespace dimerlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_size(long n, long max_n, const char* what) {
    if (n < 1) throw std::invalid_argument(std::string(what) + ": n must be at least 1");
    if (n > max_n)
        throw SizeLimitError(std::string(what) + ": n = " + std::to_string(n) + " exceeds " +
                             std::to_string(max_n));
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": parameters must be finite");
}

// Shared by the pure and imitative complete-graph sums so that J = 0 reproduces
// the pure model bit for bit: the coupling enters only through J * pairs / n.
FiniteSystemResult complete_graph_sum(long n, double h, double J) {
    const auto half = static_cast<std::size_t>(n / 2);
    const double nn = static_cast<double>(n);
    const double log_n = std::log(nn);
    const double lg_n1 = std::lgamma(nn + 1.0);
    std::vector<double> terms(half + 1);
    for (std::size_t d = 0; d <= half; ++d) {
        const double dd = static_cast<double>(d);
        const double monomers = nn - 2.0 * dd;
        const double log_count =
            lg_n1 - std::lgamma(dd + 1.0) - std::lgamma(monomers + 1.0) - dd * std::numbers::ln2;
        // Same-type pairs: monomer-monomer plus pairs among dimer-covered vertices.
        const double pairs = 0.5 * (monomers * (monomers - 1.0) + 2.0 * dd * (2.0 * dd - 1.0));
        terms[d] = log_count - dd * log_n + monomers * h + J * pairs / nn;
    }
    const double log_z = log_sum_exp(terms);
    double density = 0.0;
    for (std::size_t d = 0; d <= half; ++d)
        density += (nn - 2.0 * static_cast<double>(d)) / nn * std::exp(terms[d] - log_z);
    return {n, log_z / nn, density};
}

}  // namespace

LogWeight enumerate_partition(const GraphSpec& g) {
    g.validate();
    require_size(g.n == 0 ? 1 : g.n, kMaxEnumerateVertices, "enumerate_partition");
    std::vector<double> log_x(g.x.size());
    double all_monomers = 0.0;
    for (std::size_t v = 0; v < g.x.size(); ++v) {
        log_x[v] = std::log(g.x[v]);
        all_monomers += log_x[v];
    }
    LogAccumulator acc;
    for_each_configuration(g, [&](std::span<const int> chosen) {
        double term = all_monomers;
        for (int idx : chosen) {
            const Edge& e = g.edges[static_cast<std::size_t>(idx)];
            term += std::log(e.w) - log_x[static_cast<std::size_t>(e.u)] - log_x[static_cast<std::size_t>(e.v)];
        }
        acc.add(term);
    });
    return acc.total();
}

LogWeight hl_recursion_partition(const GraphSpec& g) {
    g.validate();
    require_size(g.n == 0 ? 1 : g.n, kMaxRecursionVertices, "hl_recursion_partition");
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(g.n));
    for (const auto& e : g.edges) {
        adj[static_cast<std::size_t>(e.u)].push_back({e.v, std::log(e.w)});
        adj[static_cast<std::size_t>(e.v)].push_back({e.u, std::log(e.w)});
    }
    std::vector<double> log_x(g.x.size());
    for (std::size_t v = 0; v < g.x.size(); ++v) log_x[v] = std::log(g.x[v]);

    std::unordered_map<std::uint32_t, LogWeight> memo;
    auto solve = [&](auto&& self, std::uint32_t set) -> LogWeight {
        if (set == 0) return LogWeight::one();
        if (auto it = memo.find(set); it != memo.end()) return it->second;
        const int o = std::countr_zero(set);
        const std::uint32_t rest = set & ~(1U << o);
        LogWeight z = LogWeight::from_log(log_x[static_cast<std::size_t>(o)]) * self(self, rest);
        for (const auto& [v, log_w] : adj[static_cast<std::size_t>(o)]) {
            if (rest & (1U << v)) z += LogWeight::from_log(log_w) * self(self, rest & ~(1U << v));
        }
        memo.emplace(set, z);
        return z;
    };
    const std::uint32_t full = g.n == 32 ? ~0U : ((1U << g.n) - 1U);
    return solve(solve, full);
}

FiniteSystemResult complete_graph_partition(long n, double h) {
    require_size(n, kMaxCompleteGraphVertices, "complete_graph_partition");
    require_finite(h, "complete_graph_partition");
    return complete_graph_sum(n, h, 0.0);
}

FiniteSystemResult complete_graph_recursion_partition(long n, double h) {
    require_size(n, kMaxCompleteGraphVertices, "complete_graph_recursion_partition");
    require_finite(h, "complete_graph_recursion_partition");
    // Z_k = x Z_{k-1} + (k-1) w Z_{k-2} with w = 1/n held fixed; iterate the
    // ratio q_k = Z_k / Z_{k-1} and its x-derivative.
    const double x = std::exp(h);
    const double w = 1.0 / static_cast<double>(n);
    double q = x, dq = 1.0;
    double log_z = std::log(q), dlog_z = dq / q;
    for (long k = 2; k <= n; ++k) {
        const double c = static_cast<double>(k - 1) * w;
        const double q_next = x + c / q;
        dq = 1.0 - c * dq / (q * q);
        q = q_next;
        log_z += std::log(q);
        dlog_z += dq / q;
    }
    const double nn = static_cast<double>(n);
    return {n, log_z / nn, x * dlog_z / nn};
}

FiniteSystemResult hermite_partition(long n, double h) {
    require_size(n, kMaxHermiteVertices, "hermite_partition");
    require_finite(h, "hermite_partition");
    // K_k = i^k H_k(-i y) obeys K_k = y K_{k-1} + (k-1) K_{k-2}, K_0 = 1, K_1 = y,
    // and Z_n(x) = n^{-n/2} K_n(x sqrt n).
    const double nn = static_cast<double>(n);
    const double y = std::exp(h) * std::sqrt(nn);
    double r = y, dr = 1.0;
    double log_k = std::log(r), dlog_k = dr / r;
    for (long k = 2; k <= n; ++k) {
        const double c = static_cast<double>(k - 1);
        const double r_next = y + c / r;
        dr = 1.0 - c * dr / (r * r);
        r = r_next;
        log_k += std::log(r);
        dlog_k += dr / r;
    }
    return {n, (log_k - 0.5 * nn * std::log(nn)) / nn, y * dlog_k / nn};
}

ReducedParameters reduce_parameters(const GeneralParameters& p, std::optional<long> n) {
    for (double v : {p.h_m, p.h_d, p.J_m, p.J_d, p.J_md}) require_finite(v, "reduce_parameters");
    const double J = 0.5 * (p.J_m + p.J_d - 2.0 * p.J_md);
    if (J < 0.0) throw DomainError("reduce_parameters: J_m + J_d - 2 J_md must be non-negative");
    double factor = 1.0;
    if (n) {
        if (*n < 1) throw std::invalid_argument("reduce_parameters: n must be at least 1");
        factor = static_cast<double>(*n - 1) / static_cast<double>(*n);
    }
    const double h = p.h_m - 0.5 * p.h_d + factor * 0.5 * (p.J_m - p.J_d);
    const double shift = 0.5 * p.h_d + factor * 0.5 * (p.J_d - J);
    return {h, J, shift};
}

FiniteSystemResult imitative_partition(long n, double h, double J) {
    require_size(n, kMaxCompleteGraphVertices, "imitative_partition");
    require_finite(h, "imitative_partition");
    require_finite(J, "imitative_partition");
    if (J < 0.0) throw DomainError("imitative_partition: J must be non-negative");
    return complete_graph_sum(n, h, J);
}

std::vector<DensityScanRow> finite_density_scan(std::span<const long> ns, double h, double J) {
    double limit_p = pressure_md(h);
    double limit_m = g(h);
    if (J > 0.0) {
        const GlobalMaximizer gm = global_maximizer({h, J});
        limit_p = gm.pressure;
        limit_m = gm.on_wall ? kNaN : gm.m;
    }
    std::vector<DensityScanRow> rows;
    rows.reserve(ns.size());
    for (long n : ns) {
        const FiniteSystemResult r = imitative_partition(n, h, J);
        rows.push_back({r, limit_p, limit_m, r.log_partition_per_site - limit_p,
                        r.monomer_density - limit_m});
    }
    return rows;
}

}  // namespace dimerlab

#include "dimerlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace dimerlab {

void GraphSpec::validate() const {
    if (n < 0) throw std::invalid_argument("graph: negative vertex count");
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("graph: need one monomer weight per vertex");
    for (double xv : x) {
        if (!(xv > 0.0) || !std::isfinite(xv)) throw std::invalid_argument("graph: monomer weights must be positive");
    }
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges) {
        if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) throw std::invalid_argument("graph: edge endpoint out of range");
        if (e.u == e.v) throw std::invalid_argument("graph: self-loop");
        if (!(e.w > 0.0) || !std::isfinite(e.w)) throw std::invalid_argument("graph: dimer weights must be positive");
        if (!seen.insert(std::minmax(e.u, e.v)).second) throw std::invalid_argument("graph: duplicate edge");
    }
}

GraphSpec GraphSpec::complete(int n, double x, double w) {
    GraphSpec g;
    g.n = n;
    g.x.assign(static_cast<std::size_t>(n), x);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) g.edges.push_back({u, v, w});
    g.validate();
    return g;
}

GraphSpec GraphSpec::parse(std::istream& in) {
    GraphSpec g;
    long m = 0;
    if (!(in >> g.n >> m) || g.n < 0 || m < 0) throw std::invalid_argument("graph: bad header, expected \"n m\"");
    g.edges.resize(static_cast<std::size_t>(m));
    for (auto& e : g.edges) {
        if (!(in >> e.u >> e.v >> e.w)) throw std::invalid_argument("graph: bad edge line");
    }
    g.x.assign(static_cast<std::size_t>(g.n), 0.0);
    std::vector<bool> given(static_cast<std::size_t>(g.n), false);
    for (int i = 0; i < g.n; ++i) {
        int v = 0;
        double xv = 0.0;
        if (!(in >> v >> xv)) throw std::invalid_argument("graph: bad monomer weight line");
        if (v < 0 || v >= g.n || given[static_cast<std::size_t>(v)])
            throw std::invalid_argument("graph: monomer weight vertex out of range or repeated");
        given[static_cast<std::size_t>(v)] = true;
        g.x[static_cast<std::size_t>(v)] = xv;
    }
    g.validate();
    return g;
}

void GraphSpec::write(std::ostream& out) const {
    const auto old = out.precision(17);
    out << n << ' ' << edges.size() << '\n';
    for (const auto& e : edges) out << e.u << ' ' << e.v << ' ' << e.w << '\n';
    for (int v = 0; v < n; ++v) out << v << ' ' << x[static_cast<std::size_t>(v)] << '\n';
    out.precision(old);
}

namespace {

struct Enumerator {
    const std::vector<Edge>& edges;
    const std::vector<int>& order;
    const std::function<void(std::span<const int>)>& visit;
    std::vector<int> chosen;
    unsigned long long occupied = 0;

    void extend(std::size_t from) {
        visit(chosen);
        for (std::size_t i = from; i < order.size(); ++i) {
            const Edge& e = edges[static_cast<std::size_t>(order[i])];
            const unsigned long long mask = (1ULL << e.u) | (1ULL << e.v);
            if (occupied & mask) continue;
            occupied |= mask;
            chosen.push_back(order[i]);
            extend(i + 1);
            chosen.pop_back();
            occupied &= ~mask;
        }
    }
};

}  // namespace

void for_each_configuration(const GraphSpec& g,
                            const std::function<void(std::span<const int>)>& visit) {
    if (g.n > 64) throw std::invalid_argument("for_each_configuration: at most 64 vertices");
    // Lexicographic edge order makes the visiting order reproducible.
    std::vector<int> order(g.edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto ea = std::minmax(g.edges[static_cast<std::size_t>(a)].u, g.edges[static_cast<std::size_t>(a)].v);
        const auto eb = std::minmax(g.edges[static_cast<std::size_t>(b)].u, g.edges[static_cast<std::size_t>(b)].v);
        return ea < eb;
    });
    Enumerator en{g.edges, order, visit, {}, 0};
    en.extend(0);
}

}  // namespace dimerlab

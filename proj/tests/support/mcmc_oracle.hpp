#pragma once

// Enumeration oracle for the Markov chain on small complete graphs.

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "dimerlab/mcmc.hpp"

namespace oracle {

/** Log Boltzmann weight of one configuration with M monomers and d dimers. */
inline double log_weight(int M, int d, const dimerlab::ChainModel& m) {
    const double pairs = 0.5 * M * (M - 1.0) + 0.5 * (2.0 * d) * (2.0 * d - 1.0);
    return m.h * M - d * std::log(static_cast<double>(m.n)) + m.J / m.n * pairs;
}

using Config = std::vector<int>;  // partner array, -1 for a monomer

inline Config snapshot(const dimerlab::MarkovState& s) {
    Config c(static_cast<std::size_t>(s.n()));
    for (int v = 0; v < s.n(); ++v) c[static_cast<std::size_t>(v)] = s.partner(v);
    return c;
}

namespace detail {
inline void all_matchings(Config& c, int v, std::vector<Config>& out) {
    const int n = static_cast<int>(c.size());
    while (v < n && c[static_cast<std::size_t>(v)] != -2) ++v;
    if (v == n) {
        out.push_back(c);
        return;
    }
    c[static_cast<std::size_t>(v)] = -1;
    all_matchings(c, v + 1, out);
    for (int w = v + 1; w < n; ++w) {
        if (c[static_cast<std::size_t>(w)] != -2) continue;
        c[static_cast<std::size_t>(v)] = w;
        c[static_cast<std::size_t>(w)] = v;
        all_matchings(c, v + 1, out);
        c[static_cast<std::size_t>(w)] = -2;
    }
    c[static_cast<std::size_t>(v)] = -2;
}
}  // namespace detail

/** Every matching of K_n. */
inline std::vector<Config> enumerate_states(int n) {
    Config c(static_cast<std::size_t>(n), -2);
    std::vector<Config> out;
    detail::all_matchings(c, 0, out);
    return out;
}

/** (monomers, dimers) of a configuration. */
inline std::pair<int, int> counts(const Config& c) {
    int M = 0;
    for (int p : c) M += p == -1 ? 1 : 0;
    return {M, (static_cast<int>(c.size()) - M) / 2};
}

struct ChiSquared {
    double statistic;
    int dof;
    double p_value;
};

/**
 * Chi-squared test of the chain's state frequencies against exact Boltzmann
 * weights. Thinning keeps the recorded states close to independent draws.
 */
inline ChiSquared chi_squared_test(const dimerlab::ChainModel& m, long steps, long thin, std::uint64_t seed) {
    const auto states = enumerate_states(m.n);
    std::map<Config, std::size_t> index;
    std::vector<double> pi;
    double z = 0.0;
    for (const auto& c : states) {
        index[c] = pi.size();
        const auto [M, d] = counts(c);
        pi.push_back(std::exp(log_weight(M, d, m)));
        z += pi.back();
    }
    dimerlab::MarkovState s(m.n, dimerlab::Start::all_monomers);
    dimerlab::Rng rng(seed);
    std::vector<long> seen(states.size(), 0);
    for (long i = 1; i <= steps; ++i) {
        dimerlab::step(s, m, rng);
        if (i % thin == 0) ++seen[index.at(snapshot(s))];
    }
    const double samples = static_cast<double>(steps / thin);
    double chi2 = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const double expected = samples * pi[k] / z;
        chi2 += (static_cast<double>(seen[k]) - expected) * (static_cast<double>(seen[k]) - expected) / expected;
    }
    const int dof = static_cast<int>(states.size()) - 1;
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
    return {chi2, dof, p};
}

}  // namespace oracle

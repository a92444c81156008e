#include "dimerlab/mcmc.hpp"

#include <cmath>
#include <stdexcept>
#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

namespace dimerlab {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

double Rng::uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t k) noexcept {
    // Reject the lowest 2^64 mod k values so the remainder is unbiased.
    const std::uint64_t threshold = (0 - k) % k;
    std::uint64_t r = engine_();
    while (r < threshold) r = engine_();
    return r % k;
}

MarkovState::MarkovState(int n, Start start)
    : partner_(static_cast<std::size_t>(n), -1),
      monomer_pos_(static_cast<std::size_t>(n), -1),
      dimer_pos_(static_cast<std::size_t>(n), -1) {
    if (n < 1) throw std::invalid_argument("MarkovState: n must be at least 1");
    monomers_.reserve(static_cast<std::size_t>(n));
    dimers_.reserve(static_cast<std::size_t>(n / 2));
    for (int v = 0; v < n; ++v) push_monomer(v);
    if (start == Start::max_dimers)
        for (int v = 0; v + 1 < n; v += 2) insert(v, v + 1);
}

void MarkovState::push_monomer(int v) {
    monomer_pos_[static_cast<std::size_t>(v)] = static_cast<int>(monomers_.size());
    monomers_.push_back(v);
}

void MarkovState::drop_monomer(int v) {
    const auto pos = static_cast<std::size_t>(monomer_pos_[static_cast<std::size_t>(v)]);
    const int last = monomers_.back();
    monomers_[pos] = last;
    monomer_pos_[static_cast<std::size_t>(last)] = static_cast<int>(pos);
    monomers_.pop_back();
    monomer_pos_[static_cast<std::size_t>(v)] = -1;
}

void MarkovState::insert(int u, int v) {
    if (u == v || partner(u) != -1 || partner(v) != -1) throw std::logic_error("insert: endpoints must be distinct monomers");
    drop_monomer(u);
    drop_monomer(v);
    partner_[static_cast<std::size_t>(u)] = v;
    partner_[static_cast<std::size_t>(v)] = u;
    const int idx = static_cast<int>(dimers_.size());
    dimers_.push_back({u, v});
    dimer_pos_[static_cast<std::size_t>(u)] = idx;
    dimer_pos_[static_cast<std::size_t>(v)] = idx;
}

void MarkovState::remove(int dimer_index) {
    const auto idx = static_cast<std::size_t>(dimer_index);
    const auto [u, v] = dimers_[idx];
    const auto last = dimers_.back();
    dimers_[idx] = last;
    dimer_pos_[static_cast<std::size_t>(last.first)] = dimer_index;
    dimer_pos_[static_cast<std::size_t>(last.second)] = dimer_index;
    dimers_.pop_back();
    for (int w : {u, v}) {
        partner_[static_cast<std::size_t>(w)] = -1;
        dimer_pos_[static_cast<std::size_t>(w)] = -1;
        push_monomer(w);
    }
}

void MarkovState::check_invariants() const {
    const int size = n();
    if (monomers() + 2 * dimers() != size) throw std::logic_error("state: monomers + 2 dimers != n");
    for (int v = 0; v < size; ++v) {
        const int p = partner(v);
        if (p == -1) {
            const int pos = monomer_pos_[static_cast<std::size_t>(v)];
            if (pos < 0 || monomers_[static_cast<std::size_t>(pos)] != v) throw std::logic_error("state: monomer index broken");
        } else {
            if (p == v || partner(p) != v) throw std::logic_error("state: partner array not an involution");
            const auto [a, b] = dimers_[static_cast<std::size_t>(dimer_pos_[static_cast<std::size_t>(v)])];
            if (!((a == v && b == p) || (a == p && b == v))) throw std::logic_error("state: dimer index broken");
        }
    }
}

// The energy depends only on M and d through the order parameter; the
// differences below are exact integer pair counts for the imitative term.
double log_insert_ratio(int monomers, int dimers, const ChainModel& m) noexcept {
    const double M = monomers, d = dimers, n = m.n;
    const double d_weight = -2.0 * m.h - std::log(n) + m.J / n * (4.0 * d + 4.0 - 2.0 * M);
    return d_weight + std::log(0.5 * M * (M - 1.0)) - std::log(d + 1.0);
}

double log_delete_ratio(int monomers, int dimers, const ChainModel& m) noexcept {
    const double M = monomers, d = dimers, n = m.n;
    const double d_weight = 2.0 * m.h + std::log(n) - m.J / n * (4.0 * d - 2.0 * M - 4.0);
    return d_weight + std::log(d) - std::log(0.5 * (M + 2.0) * (M + 1.0));
}

bool step(MarkovState& s, const ChainModel& m, Rng& rng) {
    auto accept = [&](double log_ratio) { return log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio; };
    if (rng.uniform() < 0.5) {
        const int M = s.monomers();
        if (M < 2) return false;
        const auto i = static_cast<int>(rng.below(static_cast<std::uint64_t>(M)));
        auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(M - 1)));
        if (j >= i) ++j;
        if (!accept(log_insert_ratio(M, s.dimers(), m))) return false;
        s.insert(s.monomer_at(i), s.monomer_at(j));
        return true;
    }
    const int d = s.dimers();
    if (d == 0) return false;
    const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
    if (!accept(log_delete_ratio(s.monomers(), d, m))) return false;
    s.remove(k);
    return true;
}

DensityEstimate run_chain(const ChainConfig& c) {
    if (c.n < 2) throw std::invalid_argument("run_chain: n must be at least 2");
    if (c.burn_in < 0 || c.sweeps <= c.burn_in || c.thin < 1)
        throw std::invalid_argument("run_chain: need sweeps > burn_in >= 0 and thin >= 1");
    if (c.batches < 20) throw std::invalid_argument("run_chain: at least 20 batches are required");
    if (!std::isfinite(c.h) || !std::isfinite(c.J) || c.J < 0.0) throw std::invalid_argument("run_chain: need finite h and J >= 0");
    const long recorded = (c.sweeps - c.burn_in) / c.thin;
    if (recorded < c.batches) throw std::invalid_argument("run_chain: fewer recorded sweeps than batches");

    const ChainModel model{c.n, c.h, c.J};
    MarkovState state(c.n, c.start);
    Rng rng(c.seed, c.stream);
    long proposals = 0, accepted = 0;
#ifdef NDEBUG
    constexpr long kCheckEvery = 10'000;
#else
    constexpr long kCheckEvery = 1;
#endif
    auto sweep = [&] {
        for (int i = 0; i < c.n; ++i) {
            accepted += step(state, model, rng) ? 1 : 0;
            if (++proposals % kCheckEvery == 0) state.check_invariants();
        }
    };
    for (long s = 0; s < c.burn_in; ++s) sweep();
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(recorded));
    for (long s = 1; s <= c.sweeps - c.burn_in; ++s) {
        sweep();
        if (s % c.thin == 0) samples.push_back(static_cast<double>(state.monomers()) / c.n);
    }
    // Contiguous batches of equal size; a remainder at the start is dropped.
    const std::size_t per = samples.size() / static_cast<std::size_t>(c.batches);
    const std::size_t offset = samples.size() - per * static_cast<std::size_t>(c.batches);
    std::vector<double> means(static_cast<std::size_t>(c.batches), 0.0);
    for (std::size_t b = 0; b < means.size(); ++b) {
        for (std::size_t i = 0; i < per; ++i) means[b] += samples[offset + b * per + i];
        means[b] /= static_cast<double>(per);
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= static_cast<double>(means.size());
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(means.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(means.size())), c.batches,
            static_cast<double>(accepted) / static_cast<double>(proposals), proposals};
}

std::vector<DensityEstimate> run_chains(std::span<const ChainConfig> configs, int threads) {
    std::vector<DensityEstimate> out(configs.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads < 1 ? 1 : static_cast<std::size_t>(threads), configs.size()));
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < configs.size(); i += workers) {
                try {
                    out[i] = run_chain(configs[i]);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

DensityEstimate combine(std::span<const DensityEstimate> chains) {
    if (chains.empty()) throw std::invalid_argument("combine: no chains");
    double mean = 0.0, var = 0.0, acc = 0.0;
    long proposals = 0;
    int batches = 0;
    for (const auto& c : chains) {
        mean += c.mean;
        var += c.std_error * c.std_error;
        acc += c.acceptance_rate * static_cast<double>(c.proposals);
        proposals += c.proposals;
        batches += c.n_batches;
    }
    const double k = static_cast<double>(chains.size());
    return {mean / k, std::sqrt(var) / k, batches, acc / static_cast<double>(proposals), proposals};
}

std::string to_json(const ChainConfig& c, const DensityEstimate& e) {
    nlohmann::ordered_json j;
    j["n"] = c.n;
    j["h"] = c.h;
    j["J"] = c.J;
    j["seed"] = c.seed;
    j["proposals"] = e.proposals;
    j["acceptance_rate"] = e.acceptance_rate;
    j["mean"] = e.mean;
    j["std_error"] = e.std_error;
    j["batches"] = e.n_batches;
    return j.dump();
}

}  // namespace dimerlab

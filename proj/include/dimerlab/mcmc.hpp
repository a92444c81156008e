#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dimerlab {

/**
 * mt19937_64 seeded through seed_seq{seed, stream}. The engine output is fixed
 * by the standard; the conversions below are spelled out so samples do not
 * depend on the library's distribution implementations.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);
    /** Uniform on [0, 1) with 53 random bits. */
    [[nodiscard]] double uniform() noexcept;
    /** Uniform on {0, ..., k-1}, k > 0. */
    [[nodiscard]] std::uint64_t below(std::uint64_t k) noexcept;

private:
    std::mt19937_64 engine_;
};

enum class Start { all_monomers, max_dimers };

/** Monomer-dimer configuration on K_n with O(1) uniform choice of monomers and dimers. */
class MarkovState {
public:
    MarkovState(int n, Start start);

    [[nodiscard]] int n() const noexcept { return static_cast<int>(partner_.size()); }
    [[nodiscard]] int monomers() const noexcept { return static_cast<int>(monomers_.size()); }
    [[nodiscard]] int dimers() const noexcept { return static_cast<int>(dimers_.size()); }
    [[nodiscard]] int partner(int v) const noexcept { return partner_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] int monomer_at(int i) const noexcept { return monomers_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] std::pair<int, int> dimer_at(int i) const noexcept { return dimers_[static_cast<std::size_t>(i)]; }

    void insert(int u, int v);
    void remove(int dimer_index);

    /** Throws std::logic_error if the index structures disagree with the partner array. */
    void check_invariants() const;

private:
    void push_monomer(int v);
    void drop_monomer(int v);

    std::vector<int> partner_;  // -1 for a monomer
    std::vector<int> monomers_;
    std::vector<int> monomer_pos_;
    std::vector<std::pair<int, int>> dimers_;
    std::vector<int> dimer_pos_;  // index into dimers_ for both endpoints
};

/** Imitative two-parameter model on K_n. */
struct ChainModel {
    int n;
    double h;
    double J;
};

/** log of (target ratio) * (reverse / forward proposal) for inserting a dimer at (M, d). */
[[nodiscard]] double log_insert_ratio(int monomers, int dimers, const ChainModel& m) noexcept;
/** Same for deleting one of the d dimers at (M, d). */
[[nodiscard]] double log_delete_ratio(int monomers, int dimers, const ChainModel& m) noexcept;

/** One insert/delete Metropolis-Hastings proposal; returns true if accepted. */
bool step(MarkovState& s, const ChainModel& m, Rng& rng);

struct ChainConfig {
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;  // independent substream for parallel chains
    long sweeps = 1000;   // sweeps of n proposals each, burn-in included
    long burn_in = 100;   // leading sweeps that are discarded
    long thin = 1;        // record every thin-th sweep
    int n = 100;
    double h = 0.0;
    double J = 0.0;
    Start start = Start::all_monomers;
    int batches = 20;
};

struct DensityEstimate {
    double mean;
    double std_error;
    int n_batches;
    double acceptance_rate;
    long proposals;
};

/** Batch-means estimate of the monomer density. */
[[nodiscard]] DensityEstimate run_chain(const ChainConfig& c);

/** Independent chains, one per config, spread over threads; results are ordered by config. */
[[nodiscard]] std::vector<DensityEstimate> run_chains(std::span<const ChainConfig> configs, int threads);

/** Pooled estimate: mean of means, standard error of the mean of independent chains. */
[[nodiscard]] DensityEstimate combine(std::span<const DensityEstimate> chains);

[[nodiscard]] std::string to_json(const ChainConfig& c, const DensityEstimate& e);

}  // namespace dimerlab

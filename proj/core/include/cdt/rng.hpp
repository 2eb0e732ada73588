#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace cdt {

// Deterministic random source. The standard <random> distributions are
// implementation-defined, so everything that influences persisted output goes
// through this fixed-algorithm generator instead (xoshiro256** seeded via
// splitmix64). Identical seeds give identical streams on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer in [lo, hi] inclusive. Debiased (rejection sampling).
    int64_t uniform_int(int64_t lo, int64_t hi);

    // Standard normal via Box-Muller (both values consumed, one cached).
    double normal();

    // Bernoulli draw.
    bool chance(double p) { return uniform() < p; }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Index drawn proportionally to the (nonnegative) weights. The weights
    // need not be normalized; an all-zero vector maps to index 0.
    size_t weighted_index(const std::vector<double>& weights);

    // Derived generator for an independent sub-stream. Mixing is by hashing,
    // so derivation order does not matter.
    Rng derive(std::string_view tag) const;
    Rng derive(uint64_t tag) const;

    uint64_t state_hash() const;

private:
    uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// 64-bit hash of an ordered sequence of parts, for stateless draws keyed on
// structured identity (seed, run, tracker, page, ...). Part boundaries are
// guarded, so {"ab","c"} and {"a","bc"} hash differently.
uint64_t hash_parts(std::initializer_list<std::string_view> parts);
uint64_t splitmix64(uint64_t& state);

} // namespace cdt

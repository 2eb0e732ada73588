#include "cdt/rng.hpp"

#include <cmath>

namespace cdt {

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

static inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

Rng::Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

uint64_t Rng::next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64()); // full 64-bit range
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

size_t Rng::weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w > 0.0 ? w : 0.0;
    if (total <= 0.0) return 0;
    double x = uniform() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i] > 0.0 ? weights[i] : 0.0;
        if (x < w) return i;
        x -= w;
    }
    return weights.size() - 1;
}

Rng Rng::derive(std::string_view tag) const {
    uint64_t h = state_hash();
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return Rng(h);
}

Rng Rng::derive(uint64_t tag) const {
    uint64_t h = state_hash() ^ (tag + 0x9e3779b97f4a7c15ULL);
    uint64_t sm = h;
    return Rng(splitmix64(sm));
}

uint64_t Rng::state_hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint64_t s : s_) {
        h ^= s;
        h *= 0x100000001b3ULL;
        h = rotl(h, 29);
    }
    return h;
}

uint64_t hash_parts(std::initializer_list<std::string_view> parts) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& part : parts) {
        for (char c : part) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        // Separator guards against concatenation collisions.
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    }
    uint64_t sm = h;
    return splitmix64(sm);
}

} // namespace cdt

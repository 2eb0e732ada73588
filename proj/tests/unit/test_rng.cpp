#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "cdt/rng.hpp"

using cdt::Rng;
using cdt::hash_parts;

TEST_SUITE_BEGIN("rng");

TEST_CASE("identical seeds produce identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    bool differ = false;
    for (int i = 0; i < 8 && !differ; ++i) differ = a.next_u64() != b.next_u64();
    CHECK(differ);
}

TEST_CASE("uniform stays in the half-open unit interval") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_int covers the inclusive range") {
    Rng rng(9);
    std::map<int64_t, int> seen;
    for (int i = 0; i < 6000; ++i) {
        int64_t v = rng.uniform_int(-2, 3);
        REQUIRE(v >= -2);
        REQUIRE(v <= 3);
        seen[v] += 1;
    }
    CHECK(seen.size() == 6); // both endpoints reachable
    for (const auto& [v, n] : seen) CHECK(n > 700);
}

TEST_CASE("normal draws have unit-ish moments") {
    Rng rng(11);
    const int n = 40000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("chance respects the probability endpoints") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(rng.chance(0.0));
        CHECK(rng.chance(1.0));
    }
}

TEST_CASE("shuffle permutes without losing elements") {
    Rng rng(21);
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<int> shuffled = v;
    rng.shuffle(shuffled);
    std::vector<int> sorted = shuffled;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);
}

TEST_CASE("shuffle is reproducible per seed") {
    std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> b = a;
    Rng(5).shuffle(a);
    Rng(5).shuffle(b);
    CHECK(a == b);
}

TEST_CASE("weighted_index never picks a zero weight") {
    Rng rng(13);
    std::vector<double> w{0.0, 2.0, 0.0, 1.0};
    for (int i = 0; i < 4000; ++i) {
        size_t idx = rng.weighted_index(w);
        CHECK((idx == 1 || idx == 3));
    }
}

TEST_CASE("weighted_index tracks the weight ratio") {
    Rng rng(17);
    std::vector<double> w{1.0, 3.0};
    int hits1 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) hits1 += rng.weighted_index(w) == 1;
    CHECK(double(hits1) / n == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("weighted_index maps an all-zero vector to index 0") {
    Rng rng(19);
    std::vector<double> w{0.0, 0.0, 0.0};
    CHECK(rng.weighted_index(w) == 0);
}

TEST_CASE("derive is a pure function of parent state and tag") {
    Rng parent(101);
    Rng c1 = parent.derive("alpha");
    Rng c2 = parent.derive("beta");
    Rng c3 = parent.derive("alpha"); // repeated derivation, same tag
    CHECK(c1.state_hash() == c3.state_hash());
    CHECK(c1.state_hash() != c2.state_hash());
    for (int i = 0; i < 16; ++i) CHECK(c1.next_u64() == c3.next_u64());
}

TEST_CASE("derived streams differ from the parent and by index") {
    Rng parent(55);
    Rng a = parent.derive(uint64_t{0});
    Rng b = parent.derive(uint64_t{1});
    CHECK(a.state_hash() != b.state_hash());
    CHECK(a.state_hash() != parent.state_hash());
}

TEST_CASE("hash_parts guards part boundaries") {
    CHECK(hash_parts({"ab", "c"}) != hash_parts({"a", "bc"}));
    CHECK(hash_parts({"a", "b"}) != hash_parts({"b", "a"}));
    CHECK(hash_parts({"x", "y"}) == hash_parts({"x", "y"}));
}

TEST_SUITE_END();

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdt/detect.hpp"
#include "cdt/error.hpp"
#include "cdt/rng.hpp"

namespace cdt::detect {
namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

// C(n, k) clamped at cap+1 so the caller can test "<= cap" without overflow.
long comb_capped(int n, int k, long cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c *= double(n - k + i) / double(i);
        if (c > double(cap)) return cap + 1;
    }
    return long(c + 0.5);
}

} // namespace

PermutationTestResult permutation_test(const std::vector<double>& a,
                                       const std::vector<double>& b, int n_perms, double alpha,
                                       uint64_t seed) {
    if (a.size() < 2 || b.size() < 2)
        fail(errc::insufficient_samples, "permutation test needs two samples of size >= 2");
    if (n_perms < 1) fail(errc::config_invalid, "n_perms must be positive");

    PermutationTestResult res;
    res.alpha = alpha;
    res.statistic = std::abs(mean_of(a) - mean_of(b));

    std::vector<double> pool(a);
    pool.insert(pool.end(), b.begin(), b.end());
    const int n = int(pool.size());
    const int na = int(a.size());

    bool constant = true;
    for (double v : pool) {
        if (v != pool[0]) {
            constant = false;
            break;
        }
    }
    if (constant) {
        res.degenerate = true;
        res.p_value = 1.0;
        res.reject = false;
        return res;
    }

    const double total = std::accumulate(pool.begin(), pool.end(), 0.0);
    // Equality of permuted statistics must hold for the identity assignment,
    // so compare with a hair of slack for reordered summation.
    const double threshold = res.statistic - 1e-12 * std::max(1.0, res.statistic);
    auto stat_for_sum = [&](double sum_a) {
        double ma = sum_a / na;
        double mb = (total - sum_a) / double(n - na);
        return std::abs(ma - mb);
    };

    const long kExhaustiveCap = 10000;
    long splits = comb_capped(n, na, kExhaustiveCap);
    if (splits <= kExhaustiveCap) {
        // Walk every index combination in lexicographic order.
        std::vector<int> idx(static_cast<size_t>(na));
        std::iota(idx.begin(), idx.end(), 0);
        long count = 0, done = 0;
        while (true) {
            double sum_a = 0;
            for (int i : idx) sum_a += pool[size_t(i)];
            if (stat_for_sum(sum_a) >= threshold) ++count;
            ++done;
            int i = na - 1;
            while (i >= 0 && idx[size_t(i)] == n - na + i) --i;
            if (i < 0) break;
            ++idx[size_t(i)];
            for (int j = i + 1; j < na; ++j) idx[size_t(j)] = idx[size_t(j - 1)] + 1;
        }
        res.exhaustive = true;
        res.n_permutations = done;
        res.p_value = double(count) / double(done);
    } else {
        Rng rng(seed);
        long count = 0;
        std::vector<double> shuffled = pool;
        for (int p = 0; p < n_perms; ++p) {
            rng.shuffle(shuffled);
            double sum_a = 0;
            for (int i = 0; i < na; ++i) sum_a += shuffled[size_t(i)];
            if (stat_for_sum(sum_a) >= threshold) ++count;
        }
        res.exhaustive = false;
        res.n_permutations = n_perms;
        res.p_value = double(1 + count) / double(1 + n_perms);
    }
    res.reject = res.p_value < alpha;
    return res;
}

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        fail(errc::config_invalid, "scores and labels differ in length");
    uint64_t pos = 0, neg = 0;
    for (int l : labels) (l == 1 ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        fail(errc::insufficient_samples, "auc needs at least one sample per class");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        return scores[x] < scores[y];
    });

    // Integer concordance sweep: walking scores in ascending order, every
    // positive sits above all negatives seen in earlier (strictly smaller)
    // groups; same-score positive/negative pairs tie.
    uint64_t weighted = 0; // 2*concordant + ties
    uint64_t neg_below = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        uint64_t group_pos = 0, group_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? group_pos : group_neg) += 1;
            ++j;
        }
        weighted += group_pos * (2 * neg_below + group_neg);
        neg_below += group_neg;
        i = j;
    }
    return double(weighted) / double(2 * pos * neg);
}

Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels) {
    Metrics m;
    m.auc = auc_score(scores, labels);
    for (size_t i = 0; i < scores.size(); ++i) {
        int pred = scores[i] >= 0.5 ? 1 : 0;
        m.confusion[labels[i]][pred] += 1;
    }
    for (int c = 0; c < 2; ++c) {
        long tp = m.confusion[c][c];
        long fp = m.confusion[1 - c][c];
        long fn = m.confusion[c][1 - c];
        if (tp + fp == 0) {
            m.precision[c] = 0.0;
            m.flags |= c == 0 ? kPrecision0Undefined : kPrecision1Undefined;
        } else {
            m.precision[c] = double(tp) / double(tp + fp);
        }
        if (tp + fn == 0) {
            m.recall[c] = 0.0;
            m.flags |= c == 0 ? kRecall0Undefined : kRecall1Undefined;
        } else {
            m.recall[c] = double(tp) / double(tp + fn);
        }
        m.f1[c] = m.precision[c] + m.recall[c] > 0
                      ? 2 * m.precision[c] * m.recall[c] / (m.precision[c] + m.recall[c])
                      : 0.0;
    }
    return m;
}

std::vector<std::vector<size_t>> stratified_folds(const std::vector<int>& labels, int k,
                                                  uint64_t seed) {
    if (k < 2) fail(errc::config_invalid, "need at least two folds");
    std::vector<size_t> pos, neg;
    for (size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (long(pos.size()) < k || long(neg.size()) < k)
        fail(errc::insufficient_samples, "every fold needs every class");

    std::vector<std::vector<size_t>> folds(static_cast<size_t>(k));
    Rng rng(seed);
    Rng rng_pos = rng.derive("folds-pos");
    Rng rng_neg = rng.derive("folds-neg");
    rng_pos.shuffle(pos);
    rng_neg.shuffle(neg);
    for (size_t i = 0; i < pos.size(); ++i) folds[i % size_t(k)].push_back(pos[i]);
    for (size_t i = 0; i < neg.size(); ++i) folds[i % size_t(k)].push_back(neg[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<std::vector<size_t>> grouped_folds(const std::vector<int>& labels,
                                               const std::vector<long>& groups, int k,
                                               uint64_t seed) {
    if (k < 2) fail(errc::config_invalid, "need at least two folds");
    if (groups.size() != labels.size())
        fail(errc::schema_mismatch, "group ids do not cover the samples");

    // Rows captured together stay together: a fold never holds one half of a
    // capture unit while the trainer sees the other half. Units are dealt
    // round-robin after a seeded shuffle, which keeps classes balanced when
    // the units themselves are balanced.
    std::vector<long> order;
    std::map<long, std::vector<size_t>> members;
    for (size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = members.try_emplace(groups[i]);
        if (fresh) order.push_back(groups[i]);
        it->second.push_back(i);
    }
    if (long(order.size()) < k)
        fail(errc::insufficient_samples, "fewer capture units than folds");

    Rng rng = Rng(seed).derive("folds-grouped");
    rng.shuffle(order);
    std::vector<std::vector<size_t>> folds(static_cast<size_t>(k));
    for (size_t g = 0; g < order.size(); ++g) {
        auto& fold = folds[g % size_t(k)];
        const auto& rows = members[order[g]];
        fold.insert(fold.end(), rows.begin(), rows.end());
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    for (const auto& f : folds) {
        bool pos = false;
        bool neg = false;
        for (size_t i : f) (labels[i] == 1 ? pos : neg) = true;
        if (!pos || !neg) fail(errc::insufficient_samples, "every fold needs every class");
    }
    return folds;
}

} // namespace cdt::detect

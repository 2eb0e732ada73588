#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "cdt/detect.hpp"
#include "cdt/error.hpp"
#include "cdt/rng.hpp"

namespace cdt::detect {
namespace {

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double prob = 0.0; // class-1 fraction at the leaf
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<double> importance; // raw weighted impurity decrease per feature

    double predict(const std::vector<double>& x) const {
        int at = 0;
        while (nodes[size_t(at)].feature >= 0) {
            const TreeNode& nd = nodes[size_t(at)];
            at = x[size_t(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[size_t(at)].prob;
    }
};

double gini(size_t pos, size_t n) {
    if (n == 0) return 0.0;
    double p = double(pos) / double(n);
    return 2.0 * p * (1.0 - p); // 1 - p^2 - (1-p)^2
}

struct TreeBuilder {
    const Matrix* X = nullptr;
    const std::vector<int>* y = nullptr;
    bool randomized = false; // extra-trees threshold policy
    int max_depth = -1;
    size_t mtry = 1;
    size_t n_total = 0;
    Rng rng{0};
    Tree tree;

    // Sampled feature subset for one node, Fisher-Yates prefix over [0, d).
    std::vector<size_t> feature_draw;

    void draw_features(size_t d) {
        feature_draw.resize(d);
        std::iota(feature_draw.begin(), feature_draw.end(), size_t(0));
        for (size_t i = 0; i < mtry; ++i) {
            size_t j = i + size_t(rng.uniform_int(0, int64_t(d - i) - 1));
            std::swap(feature_draw[i], feature_draw[j]);
        }
    }

    int build(std::vector<size_t>& idx, size_t lo, size_t hi, int depth) {
        const size_t n = hi - lo;
        size_t pos = 0;
        for (size_t i = lo; i < hi; ++i) pos += size_t((*y)[idx[i]] == 1);

        int node_id = int(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[size_t(node_id)].prob = double(pos) / double(n);

        const bool pure = pos == 0 || pos == n;
        const bool depth_ok = max_depth < 0 || depth < max_depth;
        if (pure || !depth_ok || n < 2) return node_id;

        const double node_imp = gini(pos, n);
        const size_t d = (*X)[0].size();
        draw_features(d);

        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> vals;
        for (size_t fi = 0; fi < mtry; ++fi) {
            const size_t f = feature_draw[fi];
            if (randomized) {
                double mn = (*X)[idx[lo]][f], mx = mn;
                for (size_t i = lo + 1; i < hi; ++i) {
                    double v = (*X)[idx[i]][f];
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                }
                if (mn == mx) continue;
                double thr = mn + rng.uniform() * (mx - mn);
                size_t ln = 0, lp = 0;
                for (size_t i = lo; i < hi; ++i) {
                    if ((*X)[idx[i]][f] <= thr) {
                        ++ln;
                        lp += size_t((*y)[idx[i]] == 1);
                    }
                }
                if (ln == 0 || ln == n) continue;
                size_t rn = n - ln, rp = pos - lp;
                double gain = node_imp - (double(ln) / double(n)) * gini(lp, ln) -
                              (double(rn) / double(n)) * gini(rp, rn);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = int(f);
                    best_threshold = thr;
                }
            } else {
                vals.clear();
                vals.reserve(n);
                for (size_t i = lo; i < hi; ++i)
                    vals.emplace_back((*X)[idx[i]][f], (*y)[idx[i]]);
                std::sort(vals.begin(), vals.end());
                if (vals.front().first == vals.back().first) continue;
                size_t lp = 0;
                for (size_t i = 0; i + 1 < n; ++i) {
                    lp += size_t(vals[i].second == 1);
                    if (vals[i].first == vals[i + 1].first) continue;
                    size_t ln = i + 1, rn = n - ln;
                    size_t rp = pos - lp;
                    double gain = node_imp - (double(ln) / double(n)) * gini(lp, ln) -
                                  (double(rn) / double(n)) * gini(rp, rn);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_feature = int(f);
                        best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                    }
                }
            }
        }

        if (best_feature < 0 || best_gain <= 0.0) return node_id;

        // Partition indices in place, keeping relative order (stable) so the
        // recursion sees a deterministic arrangement.
        std::vector<size_t> left_part, right_part;
        left_part.reserve(n);
        right_part.reserve(n);
        for (size_t i = lo; i < hi; ++i) {
            if ((*X)[idx[i]][size_t(best_feature)] <= best_threshold)
                left_part.push_back(idx[i]);
            else right_part.push_back(idx[i]);
        }
        std::copy(left_part.begin(), left_part.end(), idx.begin() + long(lo));
        std::copy(right_part.begin(), right_part.end(),
                  idx.begin() + long(lo + left_part.size()));

        tree.importance[size_t(best_feature)] += (double(n) / double(n_total)) * best_gain;

        size_t mid = lo + left_part.size();
        int left_id = build(idx, lo, mid, depth + 1);
        int right_id = build(idx, mid, hi, depth + 1);
        tree.nodes[size_t(node_id)].feature = best_feature;
        tree.nodes[size_t(node_id)].threshold = best_threshold;
        tree.nodes[size_t(node_id)].left = left_id;
        tree.nodes[size_t(node_id)].right = right_id;
        return node_id;
    }
};

Tree fit_tree(const Matrix& X, const std::vector<int>& y, bool extra, int max_depth,
              uint64_t seed) {
    TreeBuilder b;
    b.X = &X;
    b.y = &y;
    b.randomized = extra;
    b.max_depth = max_depth;
    b.rng = Rng(seed);
    const size_t n = X.size();
    const size_t d = X[0].size();
    b.mtry = std::max<size_t>(1, size_t(std::sqrt(double(d))));
    b.tree.importance.assign(d, 0.0);

    std::vector<size_t> idx;
    idx.reserve(n);
    if (extra) {
        // Extra-trees fit on the full sample.
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), size_t(0));
    } else {
        for (size_t i = 0; i < n; ++i)
            idx.push_back(size_t(b.rng.uniform_int(0, int64_t(n) - 1)));
    }
    b.n_total = idx.size();
    b.build(idx, 0, idx.size(), 0);
    return std::move(b.tree);
}

class ForestModel final : public Model {
public:
    ForestModel(const ModelSpec& spec, const Matrix& X, const std::vector<int>& y,
                uint64_t seed)
        : kind_(spec.kind) {
        bool saw0 = false, saw1 = false;
        for (int v : y) (v == 1 ? saw1 : saw0) = true;
        if (!saw0 || !saw1) fail(errc::single_class_training, "training labels are constant");
        const int n_trees = spec.hp.n_estimators;
        if (n_trees < 1) fail(errc::config_invalid, "forest needs at least one tree");
        const bool extra = spec.kind == ModelKind::extra_trees;

        trees_.resize(size_t(n_trees));
        // Per-tree seeds derive from (seed, index); trees land in their slots
        // regardless of which worker fit them, so thread count cannot change
        // the model.
        Rng base(seed);
        std::vector<uint64_t> tree_seeds(static_cast<size_t>(n_trees));
        for (int t = 0; t < n_trees; ++t)
            tree_seeds[size_t(t)] = base.derive(uint64_t(t)).state_hash();

        unsigned workers = std::min<unsigned>(std::thread::hardware_concurrency(),
                                              unsigned(n_trees));
        if (workers <= 1) {
            for (int t = 0; t < n_trees; ++t)
                trees_[size_t(t)] =
                    fit_tree(X, y, extra, spec.hp.max_depth, tree_seeds[size_t(t)]);
        } else {
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (unsigned w = 0; w < workers; ++w) {
                pool.emplace_back([&]() {
                    while (true) {
                        int t = next.fetch_add(1);
                        if (t >= n_trees) break;
                        trees_[size_t(t)] =
                            fit_tree(X, y, extra, spec.hp.max_depth, tree_seeds[size_t(t)]);
                    }
                });
            }
            for (auto& th : pool) th.join();
        }

        const size_t d = X[0].size();
        importances_.assign(d, 0.0);
        for (const Tree& t : trees_) {
            for (size_t f = 0; f < d; ++f) importances_[f] += t.importance[f];
        }
        double total = std::accumulate(importances_.begin(), importances_.end(), 0.0);
        if (total > 0) {
            for (double& v : importances_) v /= total;
        }
    }

    ModelKind kind() const override { return kind_; }

    std::vector<double> score(const Matrix& rows) const override {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& x : rows) {
            double s = 0.0;
            for (const Tree& t : trees_) s += t.predict(x);
            out.push_back(s / double(trees_.size()));
        }
        return out;
    }

    const std::vector<double>* importances() const override { return &importances_; }

private:
    ModelKind kind_;
    std::vector<Tree> trees_;
    std::vector<double> importances_;
};

} // namespace

namespace internal {
std::unique_ptr<Model> fit_forest(const ModelSpec& spec, const Matrix& X,
                                  const std::vector<int>& y, uint64_t seed) {
    return std::make_unique<ForestModel>(spec, X, y, seed);
}
} // namespace internal

std::vector<RankedFeature> gini_importance(const Model& model,
                                           const std::vector<std::string>& feature_names,
                                           size_t k) {
    const std::vector<double>* imp = model.importances();
    if (!imp) fail(errc::wrong_model_kind, "importances need a forest model");
    if (imp->size() != feature_names.size())
        fail(errc::schema_mismatch, "feature name count disagrees with the model");
    std::vector<size_t> order(imp->size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if ((*imp)[a] != (*imp)[b]) return (*imp)[a] > (*imp)[b];
        return feature_names[a] < feature_names[b];
    });
    std::vector<RankedFeature> out;
    for (size_t i = 0; i < order.size() && i < k; ++i) {
        out.push_back({feature_names[order[i]], (*imp)[order[i]]});
    }
    return out;
}

FeatureSelection select_features(const features::Dataset& ds, uint64_t seed,
                                 int n_estimators) {
    if (ds.rows.empty()) fail(errc::insufficient_samples, "empty dataset");
    ModelSpec spec;
    spec.kind = ModelKind::extra_trees;
    spec.hp.n_estimators = n_estimators;
    spec.hp.max_depth = -1;
    spec.name = "extra_trees(select)";
    std::unique_ptr<Model> model = fit_model(spec, ds.rows, ds.labels, seed);
    const std::vector<double>& imp = *model->importances();

    double mean = std::accumulate(imp.begin(), imp.end(), 0.0) / double(imp.size());

    FeatureSelection sel;
    std::vector<size_t> keep_idx;
    for (size_t f = 0; f < imp.size(); ++f) {
        // Keep-on-tie: a uniform importance profile keeps everything.
        if (imp[f] >= mean - 1e-12) {
            keep_idx.push_back(f);
            sel.kept.push_back(ds.feature_names[f]);
        } else {
            sel.dropped.push_back(ds.feature_names[f]);
        }
    }

    sel.reduced.setup_code = ds.setup_code;
    sel.reduced.persona_id = ds.persona_id;
    sel.reduced.include_persona_vector = ds.include_persona_vector;
    sel.reduced.seed = ds.seed;
    sel.reduced.feature_names = sel.kept;
    sel.reduced.labels = ds.labels;
    sel.reduced.groups = ds.groups;
    sel.reduced.rows.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
        std::vector<double> r;
        r.reserve(keep_idx.size());
        for (size_t f : keep_idx) r.push_back(row[f]);
        sel.reduced.rows.push_back(std::move(r));
    }
    return sel;
}

} // namespace cdt::detect

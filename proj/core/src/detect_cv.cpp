#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "cdt/detect.hpp"
#include "cdt/error.hpp"
#include "cdt/rng.hpp"

namespace cdt::detect {
namespace {

uint64_t sub_seed(uint64_t seed, std::string_view tag, uint64_t index) {
    return Rng(seed).derive(tag).derive(index).state_hash();
}

std::string fmt_l2(double l2) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", l2);
    return buf;
}

ModelSpec make_gnb() {
    ModelSpec s;
    s.kind = ModelKind::gaussian_nb;
    s.name = "gaussian_nb";
    return s;
}

ModelSpec make_lr(double l2) {
    ModelSpec s;
    s.kind = ModelKind::logistic_regression;
    s.hp.l2 = l2;
    s.name = "logreg(l2=" + fmt_l2(l2) + ")";
    return s;
}

ModelSpec make_forest(ModelKind kind, int n_estimators, int max_depth) {
    ModelSpec s;
    s.kind = kind;
    s.hp.n_estimators = n_estimators;
    s.hp.max_depth = max_depth;
    const char* stem = kind == ModelKind::random_forest ? "rf" : "et";
    std::string depth = max_depth < 0 ? "none" : std::to_string(max_depth);
    s.name = std::string(stem) + "(n=" + std::to_string(n_estimators) + ",depth=" + depth + ")";
    return s;
}

Matrix rows_at(const Matrix& X, const std::vector<size_t>& idx) {
    Matrix out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(X[i]);
    return out;
}

std::vector<int> labels_at(const std::vector<int>& y, const std::vector<size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(y[i]);
    return out;
}

std::vector<size_t> complement_of(const std::vector<size_t>& fold, size_t n) {
    std::vector<char> in_fold(n, 0);
    for (size_t i : fold) in_fold[i] = 1;
    std::vector<size_t> out;
    out.reserve(n - fold.size());
    for (size_t i = 0; i < n; ++i)
        if (!in_fold[i]) out.push_back(i);
    return out;
}

bool is_forest(ModelKind k) {
    return k == ModelKind::random_forest || k == ModelKind::extra_trees;
}

std::vector<std::vector<size_t>> make_folds(const std::vector<int>& labels,
                                            const std::vector<long>& groups, int k,
                                            uint64_t seed) {
    if (groups.empty()) return stratified_folds(labels, k, seed);
    return grouped_folds(labels, groups, k, seed);
}

} // namespace

std::vector<ModelSpec> default_grid() {
    std::vector<ModelSpec> grid;
    grid.push_back(make_gnb());
    for (double l2 : {0.01, 0.1, 1.0, 10.0}) grid.push_back(make_lr(l2));
    for (ModelKind kind : {ModelKind::random_forest, ModelKind::extra_trees}) {
        for (int n : {50, 100, 200}) {
            for (int depth : {10, 50, 200, -1}) grid.push_back(make_forest(kind, n, depth));
        }
    }
    return grid;
}

// Trimmed grid for timed runs. Random forests are absent on purpose: their
// per-node candidate sort dominates the budget on one core, while extra-trees
// reach the same band here at a fraction of the cost.
std::vector<ModelSpec> fast_grid() {
    return {make_gnb(), make_lr(0.1), make_forest(ModelKind::extra_trees, 100, -1)};
}

EvalReport nested_cv(const features::Dataset& ds, const std::vector<ModelSpec>& grid,
                     int outer_k, int inner_k, uint64_t seed) {
    if (grid.empty()) fail(errc::config_invalid, "empty model grid");
    if (ds.rows.empty()) fail(errc::insufficient_samples, "empty dataset");

    const size_t n = ds.rows.size();
    auto outer = make_folds(ds.labels, ds.groups, outer_k, sub_seed(seed, "outer", 0));

    EvalReport report;
    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;

    for (size_t f = 0; f < outer.size(); ++f) {
        const std::vector<size_t>& test_idx = outer[f];
        std::vector<size_t> train_idx = complement_of(test_idx, n);
        std::vector<int> train_y = labels_at(ds.labels, train_idx);

        std::vector<long> train_g;
        if (!ds.groups.empty()) {
            train_g.reserve(train_idx.size());
            for (size_t i : train_idx) train_g.push_back(ds.groups[i]);
        }
        auto inner = make_folds(train_y, train_g, inner_k, sub_seed(seed, "inner", f));

        size_t best = 0;
        double best_auc = -1.0;
        for (size_t g = 0; g < grid.size(); ++g) {
            double auc_sum = 0.0;
            for (size_t v = 0; v < inner.size(); ++v) {
                std::vector<size_t> val_idx, fit_idx;
                val_idx.reserve(inner[v].size());
                for (size_t pos : inner[v]) val_idx.push_back(train_idx[pos]);
                std::vector<size_t> fit_pos = complement_of(inner[v], train_idx.size());
                fit_idx.reserve(fit_pos.size());
                for (size_t pos : fit_pos) fit_idx.push_back(train_idx[pos]);

                auto model = fit_model(grid[g], rows_at(ds.rows, fit_idx),
                                       labels_at(ds.labels, fit_idx),
                                       sub_seed(seed, "inner-fit", f * 1000 + v));
                auto scores = model->score(rows_at(ds.rows, val_idx));
                auc_sum += auc_score(scores, labels_at(ds.labels, val_idx));
            }
            double mean = auc_sum / double(inner.size());
            // Strict comparison keeps the earliest grid entry on ties.
            if (mean > best_auc) {
                best_auc = mean;
                best = g;
            }
        }

        auto model = fit_model(grid[best], rows_at(ds.rows, train_idx), train_y,
                               sub_seed(seed, "fit", f));
        auto scores = model->score(rows_at(ds.rows, test_idx));
        std::vector<int> test_y = labels_at(ds.labels, test_idx);
        report.fold_aucs.push_back(auc_score(scores, test_y));
        report.fold_winners.push_back(grid[best].name);
        pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
        pooled_labels.insert(pooled_labels.end(), test_y.begin(), test_y.end());
    }

    double sum = 0.0;
    for (double a : report.fold_aucs) sum += a;
    report.mean_auc = sum / double(report.fold_aucs.size());
    report.pooled = compute_metrics(pooled_scores, pooled_labels);

    // Modal winner across folds; ties resolve to the earliest grid entry.
    std::map<std::string, int> counts;
    for (const std::string& w : report.fold_winners) ++counts[w];
    int best_count = -1;
    for (const ModelSpec& spec : grid) {
        auto it = counts.find(spec.name);
        if (it == counts.end()) continue;
        if (it->second > best_count) {
            best_count = it->second;
            report.selected = spec;
        }
    }

    if (is_forest(report.selected.kind)) {
        auto model =
            fit_model(report.selected, ds.rows, ds.labels, sub_seed(seed, "final", 0));
        report.top_features = gini_importance(*model, ds.feature_names, 10);
    }
    return report;
}

double cv_auc(const features::Dataset& ds, const ModelSpec& spec, int k, uint64_t seed) {
    if (ds.rows.empty()) fail(errc::insufficient_samples, "empty dataset");
    auto folds = make_folds(ds.labels, ds.groups, k, sub_seed(seed, "cv", 0));
    double sum = 0.0;
    for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<size_t> train_idx = complement_of(folds[f], ds.rows.size());
        auto model = fit_model(spec, rows_at(ds.rows, train_idx),
                               labels_at(ds.labels, train_idx), sub_seed(seed, "cv-fit", f));
        auto scores = model->score(rows_at(ds.rows, folds[f]));
        sum += auc_score(scores, labels_at(ds.labels, folds[f]));
    }
    return sum / double(folds.size());
}

std::string report_text(const EvalReport& report, const features::Dataset& ds) {
    std::ostringstream os;
    char buf[128];

    os << "dataset: setup " << ds.setup_code;
    if (!ds.persona_id.empty()) os << ", persona " << ds.persona_id;
    os << ", " << ds.size() << " samples x " << ds.width() << " features\n";
    os << "selected model: " << report.selected.name << "\n";

    std::snprintf(buf, sizeof(buf), "mean outer-fold AUC: %.4f\n", report.mean_auc);
    os << buf;
    os << "fold AUCs:";
    for (double a : report.fold_aucs) {
        std::snprintf(buf, sizeof(buf), " %.3f", a);
        os << buf;
    }
    os << "\nfold winners:";
    for (const std::string& w : report.fold_winners) os << " " << w;
    os << "\n";

    const Metrics& m = report.pooled;
    std::snprintf(buf, sizeof(buf), "pooled AUC: %.4f\n", m.auc);
    os << buf;
    os << "confusion [actual x predicted]: [[" << m.confusion[0][0] << ", "
       << m.confusion[0][1] << "], [" << m.confusion[1][0] << ", " << m.confusion[1][1]
       << "]]\n";
    for (int c = 0; c < 2; ++c) {
        std::snprintf(buf, sizeof(buf),
                      "class %d: precision %.4f, recall %.4f, f1 %.4f\n", c, m.precision[c],
                      m.recall[c], m.f1[c]);
        os << buf;
    }

    if (!report.top_features.empty()) {
        os << "top features by impurity decrease:\n";
        for (size_t i = 0; i < report.top_features.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "  %2zu. %-40s %.4f\n", i + 1,
                          report.top_features[i].name.c_str(),
                          report.top_features[i].importance);
            os << buf;
        }
    }
    return os.str();
}

} // namespace cdt::detect

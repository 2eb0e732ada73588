#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cdt/features.hpp"

namespace cdt::detect {

using Matrix = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Nonparametric one-dimensional test

struct PermutationTestResult {
    double statistic = 0.0; // |mean(a) - mean(b)|
    double p_value = 1.0;
    long n_permutations = 0; // permutations actually evaluated
    bool exhaustive = false; // every split enumerated
    bool degenerate = false; // pooled sample had zero variance
    double alpha = 0.05;
    bool reject = false;
};

// Difference-of-means permutation test. Enumerates every split when the
// split count is at most 10,000, otherwise runs seeded Monte Carlo with
// p = (1 + hits) / (1 + draws). A zero-variance pool short-circuits to p = 1.
PermutationTestResult permutation_test(const std::vector<double>& a,
                                       const std::vector<double>& b, int n_perms = 10000,
                                       double alpha = 0.05, uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Metrics

enum MetricFlag : unsigned {
    kPrecision0Undefined = 1u << 0,
    kRecall0Undefined = 1u << 1,
    kPrecision1Undefined = 1u << 2,
    kRecall1Undefined = 1u << 3,
};

struct Metrics {
    double auc = 0.5;
    double precision[2] = {0, 0};
    double recall[2] = {0, 0};
    double f1[2] = {0, 0};
    long confusion[2][2] = {{0, 0}, {0, 0}}; // [actual][predicted]
    unsigned flags = 0;                      // MetricFlag bits for 0/0 metrics
};

// Rank-based AUC with the tie-counts convention (ties worth 1/2). Integer
// concordance counting, so the result matches pairwise brute force exactly.
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels);

// Threshold-0.5 confusion metrics plus AUC.
Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels);

// Class-stratified fold assignment; every fold receives every class. Throws
// InsufficientSamples when a class has fewer members than folds.
std::vector<std::vector<size_t>> stratified_folds(const std::vector<int>& labels, int k,
                                                  uint64_t seed);

// Fold assignment that keeps every capture unit (rows sharing a group id) in
// one fold. Used whenever a dataset carries group ids; plain stratification
// would let a model meet a test row's twin during training.
std::vector<std::vector<size_t>> grouped_folds(const std::vector<int>& labels,
                                               const std::vector<long>& groups, int k,
                                               uint64_t seed);

// ---------------------------------------------------------------------------
// Models

enum class ModelKind { gaussian_nb, logistic_regression, random_forest, extra_trees };

const char* model_kind_name(ModelKind k);

struct Hyper {
    double l2 = 0.1;        // logistic regression penalty weight
    int n_estimators = 100; // forests
    int max_depth = -1;     // forests; -1 = unlimited
};

struct ModelSpec {
    ModelKind kind = ModelKind::gaussian_nb;
    Hyper hp;
    std::string name; // stable label used in reports and tie-breaking
};

class Model {
public:
    virtual ~Model() = default;
    virtual ModelKind kind() const = 0;
    // P(class 1) per row.
    virtual std::vector<double> score(const Matrix& rows) const = 0;
    // Normalized impurity-decrease importances (forest kinds only).
    virtual const std::vector<double>* importances() const { return nullptr; }
};

// Throws SingleClassTraining when y is constant.
std::unique_ptr<Model> fit_model(const ModelSpec& spec, const Matrix& X,
                                 const std::vector<int>& y, uint64_t seed);

// Raw logistic-regression objective on a fixed design matrix; w[0] is the
// intercept and is excluded from the penalty. Public so the gradient can be
// checked against finite differences.
struct LogisticProblem {
    const Matrix* X = nullptr;
    const std::vector<int>* y = nullptr;
    double l2 = 0.0;

    double loss(const std::vector<double>& w) const;
    std::vector<double> gradient(const std::vector<double>& w) const;
};

// ---------------------------------------------------------------------------
// Importances and feature selection

struct RankedFeature {
    std::string name;
    double importance = 0.0;
};

// Top-k features of a fitted forest; ties rank by name. Throws WrongModelKind
// for non-forest models.
std::vector<RankedFeature> gini_importance(const Model& model,
                                           const std::vector<std::string>& feature_names,
                                           size_t k);

struct FeatureSelection {
    features::Dataset reduced; // names + rows + labels only; vocab not carried
    std::vector<std::string> kept;
    std::vector<std::string> dropped;
};

// Extra-trees importance screen: keeps features scoring at or above the mean
// importance (ties keep).
FeatureSelection select_features(const features::Dataset& ds, uint64_t seed,
                                 int n_estimators = 100);

// ---------------------------------------------------------------------------
// Model selection

std::vector<ModelSpec> default_grid();
std::vector<ModelSpec> fast_grid();

struct EvalReport {
    ModelSpec selected;              // modal inner winner
    double mean_auc = 0.0;           // mean over outer folds
    std::vector<double> fold_aucs;   // one per outer fold
    Metrics pooled;                  // metrics over pooled outer predictions
    std::vector<RankedFeature> top_features; // filled when a forest wins
    std::vector<std::string> fold_winners;
};

EvalReport nested_cv(const features::Dataset& ds, const std::vector<ModelSpec>& grid,
                     int outer_k = 10, int inner_k = 10, uint64_t seed = 1);

// Plain stratified k-fold AUC of one fixed model (no selection).
double cv_auc(const features::Dataset& ds, const ModelSpec& spec, int k, uint64_t seed);

std::string report_text(const EvalReport& report, const features::Dataset& ds);

} // namespace cdt::detect

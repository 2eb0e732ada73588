#include <algorithm>
#include <cmath>

#include "cdt/detect.hpp"
#include "cdt/error.hpp"

namespace cdt::detect {
namespace {

void require_two_classes(const std::vector<int>& y) {
    bool saw0 = false, saw1 = false;
    for (int v : y) {
        if (v == 1) saw1 = true;
        else saw0 = true;
    }
    if (!saw0 || !saw1) fail(errc::single_class_training, "training labels are constant");
}

double sigmoid(double z) {
    if (z >= 0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

class GaussianNbModel final : public Model {
public:
    GaussianNbModel(const Matrix& X, const std::vector<int>& y) {
        require_two_classes(y);
        const size_t d = X.empty() ? 0 : X[0].size();
        for (int c = 0; c < 2; ++c) {
            mean_[c].assign(d, 0.0);
            var_[c].assign(d, 0.0);
        }
        size_t n[2] = {0, 0};
        for (size_t i = 0; i < X.size(); ++i) {
            int c = y[i];
            n[c] += 1;
            for (size_t f = 0; f < d; ++f) mean_[c][f] += X[i][f];
        }
        for (int c = 0; c < 2; ++c) {
            for (size_t f = 0; f < d; ++f) mean_[c][f] /= double(n[c]);
        }
        for (size_t i = 0; i < X.size(); ++i) {
            int c = y[i];
            for (size_t f = 0; f < d; ++f) {
                double dlt = X[i][f] - mean_[c][f];
                var_[c][f] += dlt * dlt;
            }
        }
        for (int c = 0; c < 2; ++c) {
            for (size_t f = 0; f < d; ++f) {
                var_[c][f] = std::max(var_[c][f] / double(n[c]), kVarFloor);
            }
            log_prior_[c] = std::log(double(n[c]) / double(X.size()));
        }
    }

    ModelKind kind() const override { return ModelKind::gaussian_nb; }

    std::vector<double> score(const Matrix& rows) const override {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& x : rows) {
            double lj[2];
            for (int c = 0; c < 2; ++c) {
                double s = log_prior_[c];
                for (size_t f = 0; f < x.size(); ++f) {
                    double dlt = x[f] - mean_[c][f];
                    s += -0.5 * std::log(2.0 * M_PI * var_[c][f]) -
                         dlt * dlt / (2.0 * var_[c][f]);
                }
                lj[c] = s;
            }
            // Softmax over the two log-joints.
            double m = std::max(lj[0], lj[1]);
            double e0 = std::exp(lj[0] - m), e1 = std::exp(lj[1] - m);
            out.push_back(e1 / (e0 + e1));
        }
        return out;
    }

    static constexpr double kVarFloor = 1e-9;

private:
    std::vector<double> mean_[2], var_[2];
    double log_prior_[2] = {0, 0};
};

class LogisticModel final : public Model {
public:
    LogisticModel(const Matrix& X, const std::vector<int>& y, double l2) {
        require_two_classes(y);
        const size_t d = X.empty() ? 0 : X[0].size();
        mu_.assign(d, 0.0);
        sigma_.assign(d, 1.0);
        for (const auto& row : X) {
            for (size_t f = 0; f < d; ++f) mu_[f] += row[f];
        }
        for (size_t f = 0; f < d; ++f) mu_[f] /= double(X.size());
        std::vector<double> ss(d, 0.0);
        for (const auto& row : X) {
            for (size_t f = 0; f < d; ++f) {
                double dlt = row[f] - mu_[f];
                ss[f] += dlt * dlt;
            }
        }
        for (size_t f = 0; f < d; ++f) {
            double var = ss[f] / double(X.size());
            sigma_[f] = var > 0 ? std::sqrt(var) : 1.0; // constant columns pass through
        }

        Matrix Z(X.size());
        for (size_t i = 0; i < X.size(); ++i) {
            Z[i].resize(d);
            for (size_t f = 0; f < d; ++f) Z[i][f] = (X[i][f] - mu_[f]) / sigma_[f];
        }

        LogisticProblem prob{&Z, &y, l2};
        w_.assign(d + 1, 0.0);
        double loss = prob.loss(w_);
        for (int iter = 0; iter < 500; ++iter) {
            std::vector<double> g = prob.gradient(w_);
            double gmax = 0;
            for (double v : g) gmax = std::max(gmax, std::abs(v));
            if (gmax < 1e-8) break;
            double gnorm2 = 0;
            for (double v : g) gnorm2 += v * v;
            // Backtracking line search along the steepest descent direction.
            double step = 1.0;
            std::vector<double> trial(w_.size());
            bool moved = false;
            for (int bt = 0; bt < 40; ++bt) {
                for (size_t j = 0; j < w_.size(); ++j) trial[j] = w_[j] - step * g[j];
                double trial_loss = prob.loss(trial);
                if (trial_loss <= loss - 1e-4 * step * gnorm2) {
                    w_ = trial;
                    loss = trial_loss;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
    }

    ModelKind kind() const override { return ModelKind::logistic_regression; }

    std::vector<double> score(const Matrix& rows) const override {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& x : rows) {
            double z = w_[0];
            for (size_t f = 0; f < x.size() && f < mu_.size(); ++f) {
                z += w_[f + 1] * (x[f] - mu_[f]) / sigma_[f];
            }
            out.push_back(sigmoid(z));
        }
        return out;
    }

private:
    std::vector<double> mu_, sigma_, w_;
};

} // namespace

double LogisticProblem::loss(const std::vector<double>& w) const {
    const Matrix& Xr = *X;
    const std::vector<int>& yr = *y;
    double total = 0.0;
    for (size_t i = 0; i < Xr.size(); ++i) {
        double z = w[0];
        for (size_t f = 0; f < Xr[i].size(); ++f) z += w[f + 1] * Xr[i][f];
        // log(1 + exp(-t)) with t = z for y=1, -z for y=0, computed stably.
        double t = yr[i] == 1 ? z : -z;
        total += t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    }
    total /= double(Xr.size());
    double pen = 0.0;
    for (size_t j = 1; j < w.size(); ++j) pen += w[j] * w[j];
    return total + 0.5 * l2 * pen;
}

std::vector<double> LogisticProblem::gradient(const std::vector<double>& w) const {
    const Matrix& Xr = *X;
    const std::vector<int>& yr = *y;
    std::vector<double> g(w.size(), 0.0);
    for (size_t i = 0; i < Xr.size(); ++i) {
        double z = w[0];
        for (size_t f = 0; f < Xr[i].size(); ++f) z += w[f + 1] * Xr[i][f];
        double resid = sigmoid(z) - double(yr[i]);
        g[0] += resid;
        for (size_t f = 0; f < Xr[i].size(); ++f) g[f + 1] += resid * Xr[i][f];
    }
    for (double& v : g) v /= double(Xr.size());
    for (size_t j = 1; j < w.size(); ++j) g[j] += l2 * w[j];
    return g;
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
    case ModelKind::gaussian_nb: return "gaussian_nb";
    case ModelKind::logistic_regression: return "logistic_regression";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::extra_trees: return "extra_trees";
    }
    return "gaussian_nb";
}

namespace internal {
std::unique_ptr<Model> fit_forest(const ModelSpec& spec, const Matrix& X,
                                  const std::vector<int>& y, uint64_t seed);
}

std::unique_ptr<Model> fit_model(const ModelSpec& spec, const Matrix& X,
                                 const std::vector<int>& y, uint64_t seed) {
    if (X.empty() || X.size() != y.size())
        fail(errc::config_invalid, "training rows and labels disagree");
    switch (spec.kind) {
    case ModelKind::gaussian_nb: return std::make_unique<GaussianNbModel>(X, y);
    case ModelKind::logistic_regression:
        return std::make_unique<LogisticModel>(X, y, spec.hp.l2);
    case ModelKind::random_forest:
    case ModelKind::extra_trees: return internal::fit_forest(spec, X, y, seed);
    }
    fail(errc::wrong_model_kind, "unhandled model kind");
}

} // namespace cdt::detect

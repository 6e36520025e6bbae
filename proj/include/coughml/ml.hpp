#pragma once

// Classical ML layer: standardization, L2 logistic regression (damped
// Newton), LDA, SMOTE, grouped CV splits, RFECV, and the persisted
// TrainedModel bundle.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "coughml/metrics.hpp"

namespace coughml {

using Matrix = std::vector<std::vector<double>>;

struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<bool> zero_variance;  // flagged, std forced to 1
};

inline Standardizer standardize_fit(const Matrix& X) {
    if (X.empty()) throw std::invalid_argument("standardize_fit: empty data");
    const size_t d = X[0].size();
    const double n = double(X.size());
    Standardizer s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    s.zero_variance.assign(d, false);
    for (const auto& row : X)
        for (size_t j = 0; j < d; ++j) s.means[j] += row[j];
    for (auto& m : s.means) m /= n;
    for (const auto& row : X)
        for (size_t j = 0; j < d; ++j) {
            double c = row[j] - s.means[j];
            s.stds[j] += c * c;
        }
    for (size_t j = 0; j < d; ++j) {
        s.stds[j] = std::sqrt(s.stds[j] / n);  // population std
        if (s.stds[j] == 0.0) {
            s.stds[j] = 1.0;
            s.zero_variance[j] = true;
        }
    }
    return s;
}

inline Matrix standardize_apply(const Standardizer& s, const Matrix& X) {
    Matrix out = X;
    for (auto& row : out)
        for (size_t j = 0; j < row.size(); ++j)
            row[j] = (row[j] - s.means[j]) / s.stds[j];
    return out;
}

enum class ModelKind { logistic_regression, lda };

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    ModelKind kind = ModelKind::logistic_regression;
    std::map<std::string, double> hyperparams;  // C, class_weight (0/1), ridge
    bool converged = true;
};

inline double decision_score(const LinearModel& m, const std::vector<double>& x) {
    double s = m.bias;
    for (size_t i = 0; i < m.weights.size(); ++i) s += m.weights[i] * x[i];
    return s;
}

inline double predict_proba(const LinearModel& m, const std::vector<double>& x) {
    return clip_prob(1.0 / (1.0 + std::exp(-decision_score(m, x))));
}

namespace detail {

inline Eigen::MatrixXd to_eigen(const Matrix& X) {
    Eigen::MatrixXd M(X.size(), X.empty() ? 0 : X[0].size());
    for (size_t i = 0; i < X.size(); ++i)
        for (size_t j = 0; j < X[i].size(); ++j) M(long(i), long(j)) = X[i][j];
    return M;
}

}  // namespace detail

// L2-regularized weighted logistic regression, damped Newton (IRLS).
// Penalty strength is 1/C on the weights; the bias is unpenalized.
// class_weight "balanced" reweights each class inversely to its
// frequency. Converged when the gradient max-norm drops below 1e-6.
inline LinearModel fit_logistic(const Matrix& Xv, const std::vector<int>& y,
                                double C = 1.0, bool balanced = false,
                                int max_iter = 1000, double tol = 1e-6) {
    const long n = long(Xv.size());
    if (n == 0 || y.size() != Xv.size())
        throw std::invalid_argument("fit_logistic: bad input sizes");
    const long d = long(Xv[0].size());
    Eigen::MatrixXd X = detail::to_eigen(Xv);
    if (!X.allFinite())
        throw std::invalid_argument("fit_logistic: non-finite feature value");

    long n1 = std::count(y.begin(), y.end(), 1);
    long n0 = n - n1;
    Eigen::VectorXd sw = Eigen::VectorXd::Ones(n);
    if (balanced) {
        if (n0 == 0 || n1 == 0)
            throw std::invalid_argument("fit_logistic: single-class labels");
        double w1 = double(n) / (2.0 * double(n1));
        double w0 = double(n) / (2.0 * double(n0));
        for (long i = 0; i < n; ++i) sw(i) = y[size_t(i)] ? w1 : w0;
    }

    const double lambda = 1.0 / C;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);  // last entry = bias
    auto loss_grad = [&](const Eigen::VectorXd& b, Eigen::VectorXd* grad,
                         Eigen::VectorXd* mu_out) {
        Eigen::VectorXd eta = X * b.head(d);
        eta.array() += b(d);
        double loss = 0.0;
        Eigen::VectorXd mu(n);
        for (long i = 0; i < n; ++i) {
            double z = eta(i);
            // log(1+e^z) computed stably
            double lse = z > 0 ? z + std::log1p(std::exp(-z))
                               : std::log1p(std::exp(z));
            loss += sw(i) * (lse - double(y[size_t(i)]) * z);
            mu(i) = 1.0 / (1.0 + std::exp(-z));
        }
        loss += 0.5 * lambda * b.head(d).squaredNorm();
        if (grad) {
            Eigen::VectorXd r(n);
            for (long i = 0; i < n; ++i)
                r(i) = sw(i) * (mu(i) - double(y[size_t(i)]));
            grad->resize(d + 1);
            grad->head(d) = X.transpose() * r + lambda * b.head(d);
            (*grad)(d) = r.sum();
        }
        if (mu_out) *mu_out = mu;
        return loss;
    };

    Eigen::VectorXd grad, mu;
    double loss = loss_grad(beta, &grad, &mu);
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        if (grad.lpNorm<Eigen::Infinity>() < tol) {
            converged = true;
            break;
        }
        // Newton system on the augmented design [X | 1]
        Eigen::VectorXd w(n);
        for (long i = 0; i < n; ++i)
            w(i) = std::max(1e-10, sw(i) * mu(i) * (1.0 - mu(i)));
        Eigen::MatrixXd H(d + 1, d + 1);
        Eigen::MatrixXd Xw = X;
        for (long i = 0; i < n; ++i) Xw.row(i) *= w(i);
        H.topLeftCorner(d, d) = X.transpose() * Xw;
        H.topLeftCorner(d, d).diagonal().array() += lambda;
        Eigen::VectorXd col = Xw.colwise().sum();
        H.block(0, d, d, 1) = col;
        H.block(d, 0, 1, d) = col.transpose();
        H(d, d) = w.sum();
        H.diagonal().array() += 1e-12;
        Eigen::VectorXd step = H.ldlt().solve(grad);

        double t = 1.0;
        Eigen::VectorXd cand;
        double cand_loss = loss;
        for (int back = 0; back < 40; ++back) {
            cand = beta - t * step;
            cand_loss = loss_grad(cand, nullptr, nullptr);
            if (cand_loss <= loss - 1e-12 * t * grad.dot(step) + 1e-14) break;
            t *= 0.5;
        }
        beta = cand;
        loss = loss_grad(beta, &grad, &mu);
    }

    LinearModel m;
    m.kind = ModelKind::logistic_regression;
    m.weights.assign(d, 0.0);
    for (long j = 0; j < d; ++j) m.weights[size_t(j)] = beta(j);
    m.bias = beta(d);
    m.hyperparams["C"] = C;
    m.hyperparams["class_weight_balanced"] = balanced ? 1.0 : 0.0;
    m.converged = converged;
    return m;
}

// Analytic gradient of the logistic objective at a given (weights,
// bias); the finite-difference oracle in the tests checks against it.
inline std::vector<double> logistic_gradient(const Matrix& Xv,
                                             const std::vector<int>& y,
                                             const std::vector<double>& weights,
                                             double bias, double C,
                                             bool balanced) {
    const long n = long(Xv.size());
    const long d = long(Xv[0].size());
    Eigen::MatrixXd X = detail::to_eigen(Xv);
    Eigen::VectorXd b(d);
    for (long j = 0; j < d; ++j) b(j) = weights[size_t(j)];
    long n1 = std::count(y.begin(), y.end(), 1);
    long n0 = n - n1;
    Eigen::VectorXd r(n);
    for (long i = 0; i < n; ++i) {
        double z = X.row(i).dot(b) + bias;
        double muv = 1.0 / (1.0 + std::exp(-z));
        double swi = 1.0;
        if (balanced)
            swi = y[size_t(i)] ? double(n) / (2.0 * double(n1))
                               : double(n) / (2.0 * double(n0));
        r(i) = swi * (muv - double(y[size_t(i)]));
    }
    Eigen::VectorXd g = X.transpose() * r + (1.0 / C) * b;
    std::vector<double> out(size_t(d) + 1);
    for (long j = 0; j < d; ++j) out[size_t(j)] = g(j);
    out[size_t(d)] = r.sum();
    return out;
}

inline double logistic_loss(const Matrix& Xv, const std::vector<int>& y,
                            const std::vector<double>& weights, double bias,
                            double C, bool balanced) {
    const long n = long(Xv.size());
    long n1 = std::count(y.begin(), y.end(), 1);
    long n0 = n - n1;
    double loss = 0.0;
    for (long i = 0; i < n; ++i) {
        double z = bias;
        for (size_t j = 0; j < weights.size(); ++j)
            z += weights[j] * Xv[size_t(i)][j];
        double lse = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        double swi = 1.0;
        if (balanced)
            swi = y[size_t(i)] ? double(n) / (2.0 * double(n1))
                               : double(n) / (2.0 * double(n0));
        loss += swi * (lse - double(y[size_t(i)]) * z);
    }
    for (double w : weights) loss += 0.5 * (1.0 / C) * w * w;
    return loss;
}

// Gaussian LDA with shared covariance; ridge keeps the pooled
// covariance invertible when features are collinear.
inline LinearModel fit_lda(const Matrix& Xv, const std::vector<int>& y,
                           double ridge = 1e-6) {
    const long n = long(Xv.size());
    if (n == 0 || y.size() != Xv.size())
        throw std::invalid_argument("fit_lda: bad input sizes");
    const long d = long(Xv[0].size());
    long n1 = std::count(y.begin(), y.end(), 1);
    long n0 = n - n1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("fit_lda: one class is empty");

    Eigen::MatrixXd X = detail::to_eigen(Xv);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(d), mu1 = Eigen::VectorXd::Zero(d);
    for (long i = 0; i < n; ++i)
        (y[size_t(i)] ? mu1 : mu0) += X.row(i).transpose();
    mu0 /= double(n0);
    mu1 /= double(n1);

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
    for (long i = 0; i < n; ++i) {
        Eigen::VectorXd c = X.row(i).transpose() - (y[size_t(i)] ? mu1 : mu0);
        S += c * c.transpose();
    }
    S /= double(n - 2);
    S.diagonal().array() += ridge;

    Eigen::VectorXd w = S.ldlt().solve(mu1 - mu0);
    double bias = -0.5 * w.dot(mu0 + mu1) +
                  std::log(double(n1) / double(n0));

    LinearModel m;
    m.kind = ModelKind::lda;
    m.weights.assign(size_t(d), 0.0);
    for (long j = 0; j < d; ++j) m.weights[size_t(j)] = w(j);
    m.bias = bias;
    m.hyperparams["ridge"] = ridge;
    return m;
}

// SMOTE: balances the classes by synthesizing minority points on
// segments between a minority sample and one of its k nearest minority
// neighbors. Originals are preserved; already-balanced input returns
// unchanged.
inline void smote(Matrix& X, std::vector<int>& y, int k, uint64_t seed) {
    long n1 = std::count(y.begin(), y.end(), 1);
    long n0 = long(y.size()) - n1;
    if (n0 == n1) return;
    int minority = n1 < n0 ? 1 : 0;
    long need = std::abs(n0 - n1);

    std::vector<size_t> idx;
    for (size_t i = 0; i < y.size(); ++i)
        if (y[i] == minority) idx.push_back(i);
    if (idx.size() < 2)
        throw std::invalid_argument("smote: minority class has < 2 samples");
    int kk = std::min<int>(k, int(idx.size()) - 1);

    // k nearest minority neighbors of each minority sample
    const size_t m = idx.size();
    std::vector<std::vector<size_t>> nbrs(m);
    for (size_t a = 0; a < m; ++a) {
        std::vector<std::pair<double, size_t>> dist;
        for (size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            double d2 = 0.0;
            const auto& ra = X[idx[a]];
            const auto& rb = X[idx[b]];
            for (size_t j = 0; j < ra.size(); ++j) {
                double c = ra[j] - rb[j];
                d2 += c * c;
            }
            dist.emplace_back(d2, b);
        }
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        for (int q = 0; q < kk; ++q) nbrs[a].push_back(dist[size_t(q)].second);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> gap(0.0, 1.0);
    for (long s = 0; s < need; ++s) {
        size_t a = size_t(s) % m;
        size_t b = nbrs[a][rng() % size_t(kk)];
        double g = gap(rng);
        std::vector<double> row(X[idx[a]].size());
        for (size_t j = 0; j < row.size(); ++j)
            row[j] = X[idx[a]][j] + g * (X[idx[b]][j] - X[idx[a]][j]);
        X.push_back(std::move(row));
        y.push_back(minority);
    }
}

struct CvSplit {
    // per fold: recording ids on each side
    std::vector<std::vector<std::string>> train_recs;
    std::vector<std::vector<std::string>> val_recs;
};

// GroupShuffleSplit: each fold independently draws val_frac of the
// recordings for validation; all coughs of a recording follow it.
inline CvSplit group_shuffle_split(const std::vector<std::string>& recording_ids,
                                   int n_folds, double val_frac, uint64_t seed) {
    if (recording_ids.size() < size_t(n_folds))
        throw std::invalid_argument("group_shuffle_split: too few recordings");
    std::vector<std::string> ids = recording_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    size_t n_val = std::max<size_t>(1, size_t(std::llround(val_frac * double(ids.size()))));

    CvSplit split;
    std::mt19937_64 rng(seed);
    for (int f = 0; f < n_folds; ++f) {
        std::vector<std::string> shuffled = ids;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        split.val_recs.emplace_back(shuffled.begin(), shuffled.begin() + long(n_val));
        split.train_recs.emplace_back(shuffled.begin() + long(n_val), shuffled.end());
        std::sort(split.val_recs.back().begin(), split.val_recs.back().end());
        std::sort(split.train_recs.back().begin(), split.train_recs.back().end());
    }
    return split;
}

// Recursive feature elimination: drop the smallest-|weight| feature one
// at a time, score each feature count by mean CV AUC through eval_auc,
// keep the count with the best score (ties toward fewer features).
//
// fit_weights(X_masked, y) -> per-feature |importance| source weights;
// eval_auc(mask) -> mean CV AUC for that mask.
template <typename FitWeights, typename EvalAuc>
std::vector<bool> rfecv(FitWeights fit_weights, EvalAuc eval_auc,
                        const Matrix& X, const std::vector<int>& y) {
    const size_t d = X[0].size();
    if (d < 2) return std::vector<bool>(d, true);

    std::vector<bool> mask(d, true);
    std::vector<std::pair<double, std::vector<bool>>> scored;  // auc, mask
    while (true) {
        scored.emplace_back(eval_auc(mask), mask);
        size_t active = size_t(std::count(mask.begin(), mask.end(), true));
        if (active == 1) break;

        Matrix Xm;
        Xm.reserve(X.size());
        for (const auto& row : X) {
            std::vector<double> r;
            for (size_t j = 0; j < d; ++j)
                if (mask[j]) r.push_back(row[j]);
            Xm.push_back(std::move(r));
        }
        std::vector<double> w = fit_weights(Xm, y);
        size_t weakest_local = 0;
        for (size_t j = 1; j < w.size(); ++j)
            if (std::abs(w[j]) < std::abs(w[weakest_local])) weakest_local = j;
        size_t seen = 0;
        for (size_t j = 0; j < d; ++j) {
            if (!mask[j]) continue;
            if (seen == weakest_local) {
                mask[j] = false;
                break;
            }
            ++seen;
        }
    }
    // best AUC; scored is ordered from most features to fewest, so on
    // ties the later (smaller) mask wins
    size_t best = 0;
    for (size_t i = 1; i < scored.size(); ++i)
        if (scored[i].first >= scored[best].first) best = i;
    return scored[best].second;
}

inline std::vector<double> apply_mask(const std::vector<double>& row,
                                      const std::vector<bool>& mask) {
    std::vector<double> out;
    out.reserve(row.size());
    for (size_t j = 0; j < row.size(); ++j)
        if (mask[j]) out.push_back(row[j]);
    return out;
}

enum class Aggregation { logit_mean, logit_median };

// A fully trained classifier bundle in the aggregated-logit domain.
struct TrainedModel {
    Standardizer standardizer;       // over the full feature schema
    LinearModel model;               // weights over masked features
    std::vector<bool> feature_mask;  // full schema -> selected
    double threshold = 0.0;          // aggregated-logit decision threshold
    Aggregation aggregation = Aggregation::logit_mean;
    std::vector<std::string> feature_names;
    std::string data_fingerprint;

    double cough_proba(const std::vector<double>& raw_features) const {
        std::vector<double> z(raw_features.size());
        for (size_t j = 0; j < z.size(); ++j)
            z[j] = (raw_features[j] - standardizer.means[j]) / standardizer.stds[j];
        return predict_proba(model, apply_mask(z, feature_mask));
    }

    // Aggregated per-recording score over the coughs' probabilities.
    double recording_score(const std::vector<double>& probas) const {
        return aggregation == Aggregation::logit_mean
                   ? aggregate_logit_mean(probas)
                   : aggregate_logit_median(probas);
    }

    bool recording_positive(const std::vector<double>& probas) const {
        return recording_score(probas) >= threshold;
    }
};

}  // namespace coughml

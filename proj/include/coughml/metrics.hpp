#pragma once

// Evaluation metrics: ROC/AUC, geometric-mean operating point, logit
// aggregation, Fleiss' kappa, Jensen-Shannon feature separability,
// exact SHAP for linear models.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace coughml {

constexpr double kProbClip = 1e-12;

inline double clip_prob(double p) {
    return std::min(1.0 - kProbClip, std::max(kProbClip, p));
}

inline double logit(double p) {
    p = clip_prob(p);
    return std::log(p / (1.0 - p));
}

inline double aggregate_logit_mean(const std::vector<double>& ps) {
    if (ps.empty()) throw std::invalid_argument("logit mean of empty set");
    double acc = 0.0;
    for (double p : ps) acc += logit(p);
    return acc / double(ps.size());
}

inline double aggregate_logit_median(const std::vector<double>& ps) {
    if (ps.empty()) throw std::invalid_argument("logit median of empty set");
    std::vector<double> ls;
    ls.reserve(ps.size());
    for (double p : ps) ls.push_back(logit(p));
    std::sort(ls.begin(), ls.end());
    size_t n = ls.size();
    return n % 2 ? ls[n / 2] : 0.5 * (ls[n / 2 - 1] + ls[n / 2]);
}

struct RocPoint {
    double fpr, tpr, threshold;
};

// Threshold sweep over unique scores, descending. Predict positive when
// score >= threshold.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("roc_curve: bad input sizes");
    size_t np = 0, nn = 0;
    for (int y : labels) (y ? np : nn)++;
    if (np == 0 || nn == 0)
        throw std::invalid_argument("roc_curve: both classes required");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0, INFINITY});
    size_t tp = 0, fp = 0;
    for (size_t i = 0; i < order.size();) {
        double thr = scores[order[i]];
        while (i < order.size() && scores[order[i]] == thr) {
            (labels[order[i]] ? tp : fp)++;
            ++i;
        }
        pts.push_back({double(fp) / nn, double(tp) / np, thr});
    }
    return pts;
}

// AUC as the probability a random positive outscores a random negative
// (ties half). Computed from sorted ranks; identical to the trapezoidal
// area under roc_curve.
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("roc_auc: bad input sizes");
    size_t np = 0, nn = 0;
    for (int y : labels) (y ? np : nn)++;
    if (np == 0 || nn == 0)
        throw std::invalid_argument("roc_auc: both classes required");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // rank sum of positives with mid-ranks for ties
    double rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double mid_rank = 0.5 * double(i + 1 + j);  // average of ranks i+1..j
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum += mid_rank;
        i = j;
    }
    return (rank_sum - double(np) * (np + 1) / 2.0) / (double(np) * nn);
}

// Operating point maximizing sqrt(TPR * (1 - FPR)); ties resolved
// toward higher specificity.
inline double pick_threshold(const std::vector<RocPoint>& pts) {
    if (pts.empty()) throw std::invalid_argument("pick_threshold: empty ROC");
    double best_g = -1.0, best_thr = pts.front().threshold, best_fpr = 2.0;
    for (const auto& p : pts) {
        double g = std::sqrt(p.tpr * (1.0 - p.fpr));
        if (g > best_g + 1e-15 ||
            (std::abs(g - best_g) <= 1e-15 && p.fpr < best_fpr)) {
            best_g = g;
            best_thr = p.threshold;
            best_fpr = p.fpr;
        }
    }
    return best_thr;
}

// Fleiss' kappa over an items x categories count matrix; every item
// must be rated by the same number of raters.
inline double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
    if (counts.empty() || counts[0].empty())
        throw std::invalid_argument("fleiss_kappa: empty matrix");
    const size_t n_items = counts.size();
    const size_t n_cat = counts[0].size();
    long n_raters = std::accumulate(counts[0].begin(), counts[0].end(), 0L);
    if (n_raters < 2)
        throw std::invalid_argument("fleiss_kappa: need >= 2 raters");
    for (const auto& row : counts) {
        if (row.size() != n_cat ||
            std::accumulate(row.begin(), row.end(), 0L) != n_raters)
            throw std::invalid_argument(
                "fleiss_kappa: unequal rater counts across items");
    }
    double p_bar = 0.0;
    std::vector<double> pj(n_cat, 0.0);
    for (const auto& row : counts) {
        double agree = 0.0;
        for (size_t j = 0; j < n_cat; ++j) {
            agree += double(row[j]) * (row[j] - 1);
            pj[j] += row[j];
        }
        p_bar += agree / (double(n_raters) * (n_raters - 1));
    }
    p_bar /= double(n_items);
    double pe = 0.0;
    for (size_t j = 0; j < n_cat; ++j) {
        double p = pj[j] / (double(n_items) * n_raters);
        pe += p * p;
    }
    if (1.0 - pe == 0.0) return 1.0;  // all mass in one category
    return (p_bar - pe) / (1.0 - pe);
}

// Jensen-Shannon divergence between two sample sets, estimated from
// histograms over the pooled min-max range. Base-2 logs, so the result
// lies in [0, 1].
inline double jensen_shannon(const std::vector<double>& a,
                             const std::vector<double>& b, int n_bins = 50) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("jensen_shannon: empty sample");
    double lo = INFINITY, hi = -INFINITY;
    for (double x : a) { lo = std::min(lo, x); hi = std::max(hi, x); }
    for (double x : b) { lo = std::min(lo, x); hi = std::max(hi, x); }
    if (hi == lo) return 0.0;  // all mass in one bin for both

    const double eps = 1e-10;
    std::vector<double> pa(n_bins, eps), pb(n_bins, eps);
    auto bin_of = [&](double x) {
        int k = int((x - lo) / (hi - lo) * n_bins);
        return std::min(n_bins - 1, std::max(0, k));
    };
    for (double x : a) pa[bin_of(x)] += 1.0;
    for (double x : b) pb[bin_of(x)] += 1.0;
    double sa = std::accumulate(pa.begin(), pa.end(), 0.0);
    double sb = std::accumulate(pb.begin(), pb.end(), 0.0);
    for (auto& v : pa) v /= sa;
    for (auto& v : pb) v /= sb;

    double js = 0.0;
    for (int k = 0; k < n_bins; ++k) {
        double m = 0.5 * (pa[k] + pb[k]);
        js += 0.5 * pa[k] * std::log2(pa[k] / m);
        js += 0.5 * pb[k] * std::log2(pb[k] / m);
    }
    return std::max(0.0, js);
}

// Mean JS divergence across feature columns (rows = samples).
inline double mean_js_divergence(const std::vector<std::vector<double>>& feats_a,
                                 const std::vector<std::vector<double>>& feats_b,
                                 int n_bins = 50) {
    if (feats_a.empty() || feats_b.empty())
        throw std::invalid_argument("mean_js_divergence: empty class");
    size_t d = feats_a[0].size();
    double acc = 0.0;
    std::vector<double> ca, cb;
    for (size_t j = 0; j < d; ++j) {
        ca.clear(); cb.clear();
        for (const auto& r : feats_a) ca.push_back(r[j]);
        for (const auto& r : feats_b) cb.push_back(r[j]);
        acc += jensen_shannon(ca, cb, n_bins);
    }
    return acc / double(d);
}

// Exact SHAP contributions for a linear model: w_i * (x_i - mu_i).
inline std::vector<double> linear_shap(const std::vector<double>& weights,
                                       const std::vector<double>& x,
                                       const std::vector<double>& background_means) {
    std::vector<double> out(weights.size());
    for (size_t i = 0; i < weights.size(); ++i)
        out[i] = weights[i] * (x[i] - background_means[i]);
    return out;
}

}  // namespace coughml

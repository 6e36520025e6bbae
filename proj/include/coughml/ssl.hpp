#pragma once

// Semi-supervised relabeling engine: per-expert models, pseudo-label
// propagation, agreement schemes, and the final consistent dataset.
// Also the shared model-selection pipeline (TPE over LR and LDA,
// SMOTE inside each fold, optional RFECV, aggregation and threshold
// selection) that every classifier in the artifact goes through.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coughml/dataset.hpp"
#include "coughml/metrics.hpp"
#include "coughml/ml.hpp"
#include "coughml/stats.hpp"
#include "coughml/tpe.hpp"

namespace coughml {

// Per-cough feature rows tied back to their recordings.
struct CoughDataset {
    std::vector<std::string> feature_names;
    Matrix X;                          // one row per cough
    std::vector<std::string> rec_of;   // recording uuid per row

    std::vector<size_t> rows_of(const std::string& uuid) const {
        std::vector<size_t> out;
        for (size_t i = 0; i < rec_of.size(); ++i)
            if (rec_of[i] == uuid) out.push_back(i);
        return out;
    }
};

struct PipelineOptions {
    int tpe_budget = 40;
    int n_folds = 5;
    double val_frac = 0.2;
    int smote_k = 5;
    uint64_t seed = 42;
    bool force_logit_mean = false;     // expert models fix Eq.-1 aggregation
    double rfe_overfit_gap = 0.05;     // run RFECV when train-val AUC gap exceeds this
    bool enable_rfecv = true;
    bool try_lda = true;
};

namespace detail {

struct TaskData {
    Matrix X;                         // labeled coughs only
    std::vector<int> y;
    std::vector<std::string> rec_of;
    std::vector<std::string> rec_ids;  // unique labeled recordings
};

inline TaskData gather_task(const CoughDataset& ds,
                            const std::map<std::string, int>& labels) {
    TaskData t;
    std::set<std::string> recs;
    for (size_t i = 0; i < ds.X.size(); ++i) {
        auto it = labels.find(ds.rec_of[i]);
        if (it == labels.end()) continue;
        t.X.push_back(ds.X[i]);
        t.y.push_back(it->second);
        t.rec_of.push_back(ds.rec_of[i]);
        recs.insert(ds.rec_of[i]);
    }
    t.rec_ids.assign(recs.begin(), recs.end());
    return t;
}

inline LinearModel fit_kind(ModelKind kind, const Matrix& X,
                            const std::vector<int>& y, const ParamConfig& cfg) {
    if (kind == ModelKind::lda)
        return fit_lda(X, y, cfg.count("ridge") ? cfg.at("ridge") : 1e-6);
    return fit_logistic(X, y, cfg.count("C") ? cfg.at("C") : 1.0,
                        cfg.count("class_weight_balanced") &&
                            cfg.at("class_weight_balanced") > 0.5,
                        300, 1e-6);
}

inline SearchSpace space_for(ModelKind kind) {
    SearchSpace s;
    if (kind == ModelKind::lda) {
        s.dims.push_back({"ridge", SearchDim::Kind::log_uniform, 1e-8, 1e-2, {}});
    } else {
        s.dims.push_back({"C", SearchDim::Kind::log_uniform, 1e-3, 1e2, {}});
        s.dims.push_back({"class_weight_balanced", SearchDim::Kind::categorical,
                          0, 1, {0.0, 1.0}});
    }
    return s;
}

// Mean per-cough validation AUC over the folds, SMOTE applied to the
// training side of each fold only.
inline std::pair<double, double> cv_auc(ModelKind kind, const TaskData& t,
                                        const CvSplit& split,
                                        const ParamConfig& cfg,
                                        const std::vector<bool>* mask,
                                        int smote_k, uint64_t seed) {
    std::vector<double> aucs;
    for (size_t f = 0; f < split.train_recs.size(); ++f) {
        const auto& tr = split.train_recs[f];
        const auto& va = split.val_recs[f];
        Matrix Xtr, Xva;
        std::vector<int> ytr, yva;
        for (size_t i = 0; i < t.X.size(); ++i) {
            bool in_tr = std::binary_search(tr.begin(), tr.end(), t.rec_of[i]);
            bool in_va = std::binary_search(va.begin(), va.end(), t.rec_of[i]);
            std::vector<double> row =
                mask ? apply_mask(t.X[i], *mask) : t.X[i];
            if (in_tr) {
                Xtr.push_back(std::move(row));
                ytr.push_back(t.y[i]);
            } else if (in_va) {
                Xva.push_back(std::move(row));
                yva.push_back(t.y[i]);
            }
        }
        if (Xtr.empty() || Xva.empty()) continue;
        if (std::count(yva.begin(), yva.end(), 1) == 0 ||
            std::count(yva.begin(), yva.end(), 0) == 0)
            continue;
        Standardizer st = standardize_fit(Xtr);
        Matrix Ztr = standardize_apply(st, Xtr);
        smote(Ztr, ytr, smote_k, seed + f);
        LinearModel m = fit_kind(kind, Ztr, ytr, cfg);
        Matrix Zva = standardize_apply(st, Xva);
        std::vector<double> scores;
        for (const auto& row : Zva) scores.push_back(predict_proba(m, row));
        aucs.push_back(roc_auc(scores, yva));
    }
    if (aucs.empty())
        throw std::runtime_error("cv_auc: no usable folds");
    double m = mean(aucs);
    double sd = aucs.size() > 1 ? stddev(aucs) : 0.0;
    return {m, sd};
}

}  // namespace detail

struct PipelineReport {
    ModelKind chosen_kind = ModelKind::logistic_regression;
    double cv_auc = 0.0;
    double cv_auc_std = 0.0;
    double val_auc_mean_agg = 0.0;
    double val_auc_median_agg = 0.0;
    size_t n_features_selected = 0;
    bool rfecv_applied = false;
    std::vector<Trial> history;
};

// The full model-selection pipeline on one binary labeling task.
// labels: recording uuid -> {0, 1}; coughs inherit their recording's
// label. Returns the persisted-ready TrainedModel.
inline TrainedModel train_pipeline(const CoughDataset& ds,
                                   const std::map<std::string, int>& labels,
                                   const PipelineOptions& opt,
                                   PipelineReport* report = nullptr) {
    detail::TaskData t = detail::gather_task(ds, labels);
    if (t.rec_ids.size() < size_t(opt.n_folds))
        throw std::invalid_argument("train_pipeline: too few labeled recordings");
    long n_pos = std::count(t.y.begin(), t.y.end(), 1);
    if (n_pos == 0 || n_pos == long(t.y.size()))
        throw std::invalid_argument("train_pipeline: both classes required");

    CvSplit split = group_shuffle_split(t.rec_ids, opt.n_folds, opt.val_frac,
                                        opt.seed);

    // TPE per model kind; the kind with the best mean CV AUC wins.
    std::vector<ModelKind> kinds = {ModelKind::logistic_regression};
    if (opt.try_lda) kinds.push_back(ModelKind::lda);
    ModelKind best_kind = ModelKind::logistic_regression;
    OptimizeResult best_res;
    std::vector<Trial> all_history;
    for (ModelKind kind : kinds) {
        OptimizeResult res = tpe_optimize(
            detail::space_for(kind),
            [&](const ParamConfig& cfg) {
                return detail::cv_auc(kind, t, split, cfg, nullptr,
                                      opt.smote_k, opt.seed);
            },
            opt.tpe_budget, opt.seed + (kind == ModelKind::lda ? 7777 : 0));
        all_history.insert(all_history.end(), res.history.begin(),
                           res.history.end());
        if (res.best_objective > best_res.best_objective) {
            best_res = res;
            best_kind = kind;
        }
    }
    if (!std::isfinite(best_res.best_objective))
        throw std::runtime_error("train_pipeline: every trial failed");

    const size_t d = ds.feature_names.size();
    std::vector<bool> mask(d, true);
    bool rfecv_applied = false;

    // Overfit probe: train-side AUC vs CV AUC on the chosen config.
    {
        Standardizer st = standardize_fit(t.X);
        Matrix Z = standardize_apply(st, t.X);
        std::vector<int> y = t.y;
        Matrix Zs = Z;
        std::vector<int> ys = y;
        smote(Zs, ys, opt.smote_k, opt.seed);
        LinearModel probe = detail::fit_kind(best_kind, Zs, ys, best_res.best_config);
        std::vector<double> scores;
        for (const auto& row : Z) scores.push_back(predict_proba(probe, row));
        double train_auc = roc_auc(scores, y);
        if (opt.enable_rfecv && d >= 2 &&
            train_auc - best_res.best_objective > opt.rfe_overfit_gap) {
            mask = rfecv(
                [&](const Matrix& Xm, const std::vector<int>& ym) {
                    Standardizer s2 = standardize_fit(Xm);
                    Matrix Z2 = standardize_apply(s2, Xm);
                    std::vector<int> y2 = ym;
                    smote(Z2, y2, opt.smote_k, opt.seed);
                    LinearModel mm = detail::fit_kind(best_kind, Z2, y2,
                                                      best_res.best_config);
                    return mm.weights;
                },
                [&](const std::vector<bool>& mk) {
                    auto [a, sd] = detail::cv_auc(best_kind, t, split,
                                                  best_res.best_config, &mk,
                                                  opt.smote_k, opt.seed);
                    (void)sd;
                    return a;
                },
                t.X, t.y);
            rfecv_applied = size_t(std::count(mask.begin(), mask.end(), true)) < d;
        }
    }

    // One final split: train the candidate model, pick the aggregation
    // with the higher validation AUC on per-recording scores, then the
    // geometric-mean threshold on that ROC.
    CvSplit final_split =
        group_shuffle_split(t.rec_ids, 1, opt.val_frac, opt.seed + 99);
    const auto& ftr = final_split.train_recs[0];
    const auto& fva = final_split.val_recs[0];
    Matrix Xtr;
    std::vector<int> ytr;
    for (size_t i = 0; i < t.X.size(); ++i)
        if (std::binary_search(ftr.begin(), ftr.end(), t.rec_of[i])) {
            Xtr.push_back(apply_mask(t.X[i], mask));
            ytr.push_back(t.y[i]);
        }
    Standardizer st = standardize_fit(Xtr);
    Matrix Ztr = standardize_apply(st, Xtr);
    smote(Ztr, ytr, opt.smote_k, opt.seed);
    LinearModel mdl = detail::fit_kind(best_kind, Ztr, ytr, best_res.best_config);

    std::vector<double> rec_mean, rec_median, rec_scores_src;
    std::vector<int> rec_labels;
    for (const auto& uuid : fva) {
        std::vector<double> probas;
        int y_rec = labels.at(uuid);
        for (size_t i = 0; i < t.X.size(); ++i)
            if (t.rec_of[i] == uuid) {
                std::vector<double> z = apply_mask(t.X[i], mask);
                for (size_t j = 0; j < z.size(); ++j)
                    z[j] = (z[j] - st.means[j]) / st.stds[j];
                probas.push_back(predict_proba(mdl, z));
            }
        if (probas.empty()) continue;
        rec_mean.push_back(aggregate_logit_mean(probas));
        rec_median.push_back(aggregate_logit_median(probas));
        rec_labels.push_back(y_rec);
    }
    Aggregation agg = Aggregation::logit_mean;
    double auc_mean = 0.5, auc_median = 0.5;
    bool both_classes =
        std::count(rec_labels.begin(), rec_labels.end(), 1) > 0 &&
        std::count(rec_labels.begin(), rec_labels.end(), 0) > 0;
    if (both_classes) {
        auc_mean = roc_auc(rec_mean, rec_labels);
        auc_median = roc_auc(rec_median, rec_labels);
        if (!opt.force_logit_mean && auc_median > auc_mean)
            agg = Aggregation::logit_median;
    }
    const auto& agg_scores =
        agg == Aggregation::logit_mean ? rec_mean : rec_median;
    double threshold = 0.0;
    if (both_classes)
        threshold = pick_threshold(roc_curve(agg_scores, rec_labels));

    // Re-train on the full labeled set with the selected recipe.
    Matrix Xall;
    std::vector<int> yall = t.y;
    for (const auto& row : t.X) Xall.push_back(apply_mask(row, mask));
    Standardizer st_full = standardize_fit(Xall);
    Matrix Zall = standardize_apply(st_full, Xall);
    smote(Zall, yall, opt.smote_k, opt.seed);
    LinearModel final_mdl = detail::fit_kind(best_kind, Zall, yall,
                                             best_res.best_config);

    TrainedModel out;
    // standardizer over the full schema so raw rows can be fed directly
    out.standardizer.means.assign(d, 0.0);
    out.standardizer.stds.assign(d, 1.0);
    out.standardizer.zero_variance.assign(d, false);
    {
        size_t mj = 0;
        for (size_t j = 0; j < d; ++j)
            if (mask[j]) {
                out.standardizer.means[j] = st_full.means[mj];
                out.standardizer.stds[j] = st_full.stds[mj];
                out.standardizer.zero_variance[j] = st_full.zero_variance[mj];
                ++mj;
            }
    }
    out.model = final_mdl;
    out.feature_mask = mask;
    out.threshold = threshold;
    out.aggregation = agg;
    out.feature_names = ds.feature_names;
    {
        std::ostringstream ss;
        ss << t.X.size() << ":" << t.rec_ids.size() << ":" << n_pos;
        out.data_fingerprint = fnv1a64_hex(ss.str());
    }

    if (report) {
        report->chosen_kind = best_kind;
        report->cv_auc = best_res.best_objective;
        report->cv_auc_std = best_res.best_fold_std;
        report->val_auc_mean_agg = auc_mean;
        report->val_auc_median_agg = auc_median;
        report->n_features_selected =
            size_t(std::count(mask.begin(), mask.end(), true));
        report->rfecv_applied = rfecv_applied;
        report->history = std::move(all_history);
    }
    return out;
}

struct ExpertModelSet {
    std::map<std::string, TrainedModel> models;
    std::vector<std::pair<std::string, std::string>> excluded;  // id, reason
};

// Per-annotator covid/healthy labels from corpus metadata; `other` and
// `none` entries are excluded from the annotator's training set.
inline std::map<std::string, int> expert_task_labels(
    const std::vector<RecordingMeta>& corpus, const std::string& annotator) {
    std::map<std::string, int> labels;
    for (const auto& m : corpus) {
        auto it = m.expert_labels.find(annotator);
        if (it == m.expert_labels.end()) continue;
        if (it->second == ExpertLabel::covid) labels[m.uuid] = 1;
        else if (it->second == ExpertLabel::healthy) labels[m.uuid] = 0;
    }
    return labels;
}

// Trains one model per eligible annotator through the full pipeline.
// Annotators with fewer than min_minority recordings in either class
// are excluded (the paper drops its near-silent fourth expert).
inline ExpertModelSet train_expert_models(const std::vector<RecordingMeta>& corpus,
                                          const CoughDataset& ds,
                                          const std::vector<std::string>& annotators,
                                          PipelineOptions opt,
                                          int min_minority = 10,
                                          std::map<std::string, PipelineReport>* reports = nullptr) {
    ExpertModelSet set;
    opt.force_logit_mean = true;  // Eq. 1 aggregation for expert models
    for (const auto& id : annotators) {
        std::map<std::string, int> labels = expert_task_labels(corpus, id);
        long n1 = 0, n0 = 0;
        for (const auto& [_, y] : labels) (y ? n1 : n0)++;
        if (n1 < min_minority || n0 < min_minority) {
            set.excluded.emplace_back(
                id, "minority count < " + std::to_string(min_minority) + " (" +
                        std::to_string(std::min(n0, n1)) + ")");
            continue;
        }
        PipelineReport rep;
        PipelineOptions o = opt;
        o.seed = opt.seed + fnv1a64(id.data(), id.size()) % 10007;
        set.models[id] = train_pipeline(ds, labels, o, &rep);
        if (reports) (*reports)[id] = std::move(rep);
    }
    if (set.models.empty())
        throw std::runtime_error("train_expert_models: no eligible annotator");
    return set;
}

// Propagates labels: original expert diagnoses are kept, everything
// else gets the expert model's thresholded aggregate. Recordings with
// no segmented coughs are dropped.
inline std::vector<LabelRecord> propagate(const ExpertModelSet& set,
                                          const std::vector<RecordingMeta>& corpus,
                                          const CoughDataset& ds) {
    // index cough rows by recording once
    std::map<std::string, std::vector<size_t>> rows;
    for (size_t i = 0; i < ds.rec_of.size(); ++i)
        rows[ds.rec_of[i]].push_back(i);

    std::vector<LabelRecord> out;
    for (const auto& m : corpus) {
        auto rit = rows.find(m.uuid);
        if (rit == rows.end() || rit->second.empty()) continue;  // unlabelable
        LabelRecord rec;
        rec.uuid = m.uuid;
        rec.user_status = m.user_status;
        for (const auto& [id, model] : set.models) {
            auto lit = m.expert_labels.find(id);
            if (lit != m.expert_labels.end() &&
                (lit->second == ExpertLabel::covid ||
                 lit->second == ExpertLabel::healthy)) {
                rec.expert_or_pseudo[id] = lit->second;
                rec.label_source[id] = LabelSource::original_expert;
                continue;
            }
            std::vector<double> probas;
            for (size_t i : rit->second)
                probas.push_back(model.cough_proba(ds.X[i]));
            rec.expert_or_pseudo[id] = model.recording_positive(probas)
                                           ? ExpertLabel::covid
                                           : ExpertLabel::healthy;
            rec.label_source[id] = LabelSource::pseudo_model;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

enum class AgreementScheme { universal, expert, majority };

inline const char* to_string(AgreementScheme s) {
    switch (s) {
        case AgreementScheme::universal: return "universal";
        case AgreementScheme::expert: return "expert";
        default: return "majority";
    }
}

// Keep/discard rule for one record. With k expert slots: universal
// requires unanimity plus a matching user label; expert requires
// unanimity only; majority keeps unanimity regardless of user, or a
// strict majority (>= ceil(k/2), more than the opposition) matching the
// user label.
inline SslStatus apply_agreement(const LabelRecord& rec, AgreementScheme scheme) {
    if (rec.expert_or_pseudo.empty())
        throw std::invalid_argument("apply_agreement: record has no expert labels");
    int n_covid = 0, n_healthy = 0;
    for (const auto& [_, l] : rec.expert_or_pseudo) {
        if (l == ExpertLabel::covid) ++n_covid;
        else if (l == ExpertLabel::healthy) ++n_healthy;
        else
            throw std::invalid_argument(
                "apply_agreement: non-binary expert slot");
    }
    const int k = n_covid + n_healthy;
    const bool unanimous_covid = n_covid == k;
    const bool unanimous_healthy = n_healthy == k;
    const UserStatus u = rec.user_status;

    switch (scheme) {
        case AgreementScheme::universal:
            if (unanimous_covid && u == UserStatus::covid) return SslStatus::covid;
            if (unanimous_healthy && u == UserStatus::healthy)
                return SslStatus::healthy;
            return SslStatus::discarded;
        case AgreementScheme::expert:
            if (unanimous_covid) return SslStatus::covid;
            if (unanimous_healthy) return SslStatus::healthy;
            return SslStatus::discarded;
        case AgreementScheme::majority: {
            if (unanimous_covid) return SslStatus::covid;
            if (unanimous_healthy) return SslStatus::healthy;
            int need = (k + 1) / 2;
            if (n_covid >= need && n_covid > n_healthy && u == UserStatus::covid)
                return SslStatus::covid;
            if (n_healthy >= need && n_healthy > n_covid &&
                u == UserStatus::healthy)
                return SslStatus::healthy;
            return SslStatus::discarded;
        }
    }
    return SslStatus::discarded;
}

struct SchemeCoverage {
    size_t recordings = 0, recordings_pos = 0;
    size_t coughs = 0, coughs_pos = 0;
    double mean_js = 0.0;
};

struct CoverageReport {
    SchemeCoverage universal, expert, majority;
    SchemeCoverage user;  // raw user-labeled baseline
    size_t user_contradicts_majority = 0;  // 2-agree cases vetoed by the user
};

namespace detail {

inline SchemeCoverage scheme_coverage(
    const std::vector<LabelRecord>& records, const CoughDataset& ds,
    AgreementScheme scheme) {
    SchemeCoverage c;
    Matrix pos, neg;
    std::map<std::string, std::vector<size_t>> rows;
    for (size_t i = 0; i < ds.rec_of.size(); ++i)
        rows[ds.rec_of[i]].push_back(i);
    for (const auto& rec : records) {
        SslStatus s = apply_agreement(rec, scheme);
        if (s == SslStatus::discarded) continue;
        auto it = rows.find(rec.uuid);
        size_t n = it == rows.end() ? 0 : it->second.size();
        ++c.recordings;
        c.coughs += n;
        if (s == SslStatus::covid) {
            ++c.recordings_pos;
            c.coughs_pos += n;
        }
        if (it != rows.end())
            for (size_t i : it->second)
                (s == SslStatus::covid ? pos : neg).push_back(ds.X[i]);
    }
    if (!pos.empty() && !neg.empty())
        c.mean_js = mean_js_divergence(pos, neg);
    return c;
}

}  // namespace detail

// Applies propagation output under one chosen scheme and tallies the
// coverage/separability report across all three plus the raw
// user-label baseline.
inline std::pair<std::vector<LabelRecord>, CoverageReport> build_ssl_dataset(
    std::vector<LabelRecord> records, const CoughDataset& ds,
    AgreementScheme scheme) {
    CoverageReport rep;
    rep.universal =
        detail::scheme_coverage(records, ds, AgreementScheme::universal);
    rep.expert = detail::scheme_coverage(records, ds, AgreementScheme::expert);
    rep.majority =
        detail::scheme_coverage(records, ds, AgreementScheme::majority);

    // user baseline: raw self-labels, covid vs healthy
    {
        Matrix pos, neg;
        std::map<std::string, std::vector<size_t>> rows;
        for (size_t i = 0; i < ds.rec_of.size(); ++i)
            rows[ds.rec_of[i]].push_back(i);
        for (const auto& rec : records) {
            if (rec.user_status != UserStatus::covid &&
                rec.user_status != UserStatus::healthy)
                continue;
            auto it = rows.find(rec.uuid);
            size_t n = it == rows.end() ? 0 : it->second.size();
            ++rep.user.recordings;
            rep.user.coughs += n;
            if (rec.user_status == UserStatus::covid) {
                ++rep.user.recordings_pos;
                rep.user.coughs_pos += n;
            }
            if (it != rows.end())
                for (size_t i : it->second)
                    (rec.user_status == UserStatus::covid ? pos : neg)
                        .push_back(ds.X[i]);
        }
        if (!pos.empty() && !neg.empty())
            rep.user.mean_js = mean_js_divergence(pos, neg);
    }

    for (auto& rec : records) {
        rec.ssl_status = apply_agreement(rec, scheme);
        if (rec.ssl_status == SslStatus::discarded &&
            scheme == AgreementScheme::majority) {
            // flag 2-vs-1 splits vetoed by a contradicting user label
            int nc = 0, nh = 0;
            for (const auto& [_, l] : rec.expert_or_pseudo)
                (l == ExpertLabel::covid ? nc : nh)++;
            bool two_one = std::abs(nc - nh) == 1 && nc + nh >= 3;
            bool user_binary = rec.user_status == UserStatus::covid ||
                               rec.user_status == UserStatus::healthy;
            if (two_one && user_binary) ++rep.user_contradicts_majority;
        }
    }
    return {std::move(records), rep};
}

inline std::map<std::string, int> ssl_task_labels(
    const std::vector<LabelRecord>& records) {
    std::map<std::string, int> labels;
    for (const auto& rec : records) {
        if (rec.ssl_status == SslStatus::covid) labels[rec.uuid] = 1;
        else if (rec.ssl_status == SslStatus::healthy) labels[rec.uuid] = 0;
    }
    return labels;
}

// Final classifier on the SSL-kept subset, via the full pipeline.
inline TrainedModel train_final_model(const CoughDataset& ds,
                                      const std::vector<LabelRecord>& ssl_records,
                                      const PipelineOptions& opt,
                                      PipelineReport* report = nullptr) {
    std::map<std::string, int> labels = ssl_task_labels(ssl_records);
    long n_pos = 0;
    for (const auto& [_, y] : labels) n_pos += y;
    if (n_pos == 0 || n_pos == long(labels.size()))
        throw std::invalid_argument(
            "train_final_model: kept set is missing a class");
    return train_pipeline(ds, labels, opt, report);
}

// Gender imputation: train on the recordings with a known gender
// (male=1, female=0) through the same pipeline, then fill the gender
// feature column of unknown-gender recordings with the model's
// per-recording prediction. Known genders are never overwritten.
inline TrainedModel train_gender_model(const std::vector<RecordingMeta>& corpus,
                                       const CoughDataset& ds,
                                       const PipelineOptions& opt) {
    std::map<std::string, int> labels;
    for (const auto& m : corpus) {
        if (m.gender == Gender::male) labels[m.uuid] = 1;
        else if (m.gender == Gender::female) labels[m.uuid] = 0;
    }
    if (labels.empty())
        throw std::invalid_argument("train_gender_model: no gender labels");
    // the gender column itself must not leak into the gender model
    CoughDataset nog = ds;
    int gcol = -1;
    for (size_t j = 0; j < ds.feature_names.size(); ++j)
        if (ds.feature_names[j] == "gender") gcol = int(j);
    if (gcol >= 0)
        for (auto& row : nog.X) row[size_t(gcol)] = 0.0;
    return train_pipeline(nog, labels, opt);
}

inline void impute_gender(const TrainedModel& model,
                          const std::vector<RecordingMeta>& corpus,
                          CoughDataset& ds) {
    int gcol = -1;
    for (size_t j = 0; j < ds.feature_names.size(); ++j)
        if (ds.feature_names[j] == "gender") gcol = int(j);
    if (gcol < 0) return;
    std::map<std::string, Gender> gender_of;
    for (const auto& m : corpus) gender_of[m.uuid] = m.gender;
    std::map<std::string, std::vector<size_t>> rows;
    for (size_t i = 0; i < ds.rec_of.size(); ++i)
        rows[ds.rec_of[i]].push_back(i);
    for (const auto& [uuid, idxs] : rows) {
        auto it = gender_of.find(uuid);
        Gender g = it == gender_of.end() ? Gender::unknown : it->second;
        double v;
        if (g == Gender::male) v = 1.0;
        else if (g == Gender::female) v = 0.0;
        else {
            std::vector<double> probas;
            for (size_t i : idxs) {
                std::vector<double> row = ds.X[i];
                row[size_t(gcol)] = 0.0;
                probas.push_back(model.cough_proba(row));
            }
            v = model.recording_positive(probas) ? 1.0 : 0.0;
        }
        for (size_t i : idxs) ds.X[i][size_t(gcol)] = v;
    }
}

struct EvalMetrics {
    double auc_not_aggregated = 0.0;
    double auc_aggregated = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    size_t n_recordings = 0, n_coughs = 0;
};

// Per-cough and per-recording (aggregated) AUC, plus the operating
// point at the model's stored threshold.
inline EvalMetrics evaluate(const TrainedModel& model, const CoughDataset& ds,
                            const std::map<std::string, int>& test_labels) {
    std::map<std::string, std::vector<size_t>> rows;
    for (size_t i = 0; i < ds.rec_of.size(); ++i)
        rows[ds.rec_of[i]].push_back(i);

    std::vector<double> cough_scores, rec_scores;
    std::vector<int> cough_labels, rec_labels;
    size_t tp = 0, fn = 0, tn = 0, fp = 0;
    EvalMetrics m;
    for (const auto& [uuid, y] : test_labels) {
        auto it = rows.find(uuid);
        if (it == rows.end() || it->second.empty()) continue;
        std::vector<double> probas;
        for (size_t i : it->second) {
            double p = model.cough_proba(ds.X[i]);
            probas.push_back(p);
            cough_scores.push_back(p);
            cough_labels.push_back(y);
        }
        double s = model.recording_score(probas);
        rec_scores.push_back(s);
        rec_labels.push_back(y);
        bool pred = s >= model.threshold;
        if (y) (pred ? tp : fn)++;
        else (pred ? fp : tn)++;
        ++m.n_recordings;
        m.n_coughs += probas.size();
    }
    m.auc_not_aggregated = roc_auc(cough_scores, cough_labels);
    m.auc_aggregated = roc_auc(rec_scores, rec_labels);
    m.sensitivity = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    m.specificity = tn + fp ? double(tn) / double(tn + fp) : 0.0;
    return m;
}

}  // namespace coughml

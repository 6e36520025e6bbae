#pragma once

// Stage orchestration: config file, run manifest with content hashes,
// and the file-based stage functions the CLI subcommands wrap.

#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "coughml/audio.hpp"
#include "coughml/csv.hpp"
#include "coughml/dataset.hpp"
#include "coughml/dsp.hpp"
#include "coughml/features.hpp"
#include "coughml/model_io.hpp"
#include "coughml/segmentation.hpp"
#include "coughml/ssl.hpp"
#include "coughml/stats.hpp"
#include "coughml/synth.hpp"

namespace coughml {

namespace fs = std::filesystem;

struct PipelineConfig {
    std::string audio_dir;
    std::string metadata;
    std::string out_dir = "out";

    double cutoff_hz = 6000.0;
    int filter_order = 4;
    int target_rate = 12000;

    SegmentationParams seg;
    FeatureConfig feat;

    double min_cough_score = 0.8;
    double min_snr_db = 5.0;
    uint64_t seed = 42;
    int tpe_budget = 40;
    int gender_budget = 10;
    AgreementScheme scheme = AgreementScheme::majority;
    int min_minority = 10;
    int jobs = 1;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& w) : std::runtime_error(w) {}
};

// key = value lines, '#' comments. Unknown keys are rejected.
inline PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    PipelineConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string()
                                          : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "audio_dir") c.audio_dir = val;
            else if (key == "metadata") c.metadata = val;
            else if (key == "out_dir") c.out_dir = val;
            else if (key == "cutoff_hz") c.cutoff_hz = std::stod(val);
            else if (key == "filter_order") c.filter_order = std::stoi(val);
            else if (key == "target_rate") c.target_rate = std::stoi(val);
            else if (key == "seg_lower_mult") c.seg.lower_mult = std::stod(val);
            else if (key == "seg_upper_mult") c.seg.upper_mult = std::stod(val);
            else if (key == "seg_tolerance_ms") c.seg.tolerance_ms = std::stod(val);
            else if (key == "seg_min_cough_ms") c.seg.min_cough_ms = std::stod(val);
            else if (key == "seg_pad_ms") c.seg.pad_ms = std::stod(val);
            else if (key == "min_cough_score") c.min_cough_score = std::stod(val);
            else if (key == "min_snr_db") c.min_snr_db = std::stod(val);
            else if (key == "seed") c.seed = std::stoull(val);
            else if (key == "tpe_budget") c.tpe_budget = std::stoi(val);
            else if (key == "gender_budget") c.gender_budget = std::stoi(val);
            else if (key == "min_minority") c.min_minority = std::stoi(val);
            else if (key == "jobs") c.jobs = std::stoi(val);
            else if (key == "scheme") {
                if (val == "universal") c.scheme = AgreementScheme::universal;
                else if (val == "expert") c.scheme = AgreementScheme::expert;
                else if (val == "majority") c.scheme = AgreementScheme::majority;
                else throw ConfigError(path + ": unknown scheme '" + val + "'");
            } else {
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": bad value for '" + key + "'");
        }
    }
    if (c.seg.lower_mult >= c.seg.upper_mult)
        throw ConfigError(path + ": seg_lower_mult must be < seg_upper_mult");
    return c;
}

inline std::string config_hash(const PipelineConfig& c) {
    std::ostringstream ss;
    ss << c.cutoff_hz << '|' << c.filter_order << '|' << c.target_rate << '|'
       << c.seg.lower_mult << '|' << c.seg.upper_mult << '|'
       << c.seg.tolerance_ms << '|' << c.seg.min_cough_ms << '|' << c.seg.pad_ms
       << '|' << c.min_cough_score << '|' << c.min_snr_db << '|' << c.seed
       << '|' << c.tpe_budget << '|' << int(c.scheme) << '|' << c.min_minority;
    return fnv1a64_hex(ss.str());
}

inline std::string hash_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot hash missing file: " + path);
    std::string data((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return fnv1a64_hex(data);
}

// Every stage records its inputs and outputs; downstream stages check
// that their inputs are still the files the upstream stage produced.
class Manifest {
public:
    explicit Manifest(const std::string& out_dir)
        : path_(out_dir + "/manifest.json") {
        std::ifstream f(path_);
        if (f) f >> j_;
        if (!j_.is_object()) j_ = nlohmann::json::object();
    }

    void record_stage(const std::string& stage,
                      const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs,
                      const std::string& cfg_hash, uint64_t seed) {
        nlohmann::json e;
        for (const auto& p : inputs) e["inputs"][p] = hash_file(p);
        for (const auto& p : outputs) e["outputs"][p] = hash_file(p);
        e["config_hash"] = cfg_hash;
        e["seed"] = seed;
        j_[stage] = e;
        std::ofstream f(path_);
        f << j_.dump(2) << '\n';
    }

    // Verifies that `artifact` was produced by `producer_stage` and is
    // unchanged on disk.
    void require(const std::string& producer_stage,
                 const std::string& artifact) const {
        if (!j_.contains(producer_stage))
            throw std::runtime_error("missing upstream artifact '" + artifact +
                                     "': run the " + producer_stage +
                                     " stage first");
        const auto& outs = j_.at(producer_stage).value("outputs",
                                                       nlohmann::json::object());
        if (!outs.contains(artifact))
            throw std::runtime_error("stage " + producer_stage +
                                     " did not produce '" + artifact +
                                     "': rerun " + producer_stage);
        if (!fs::exists(artifact) ||
            hash_file(artifact) != outs.at(artifact).get<std::string>())
            throw std::runtime_error("artifact '" + artifact +
                                     "' is stale: rerun " + producer_stage);
    }

private:
    std::string path_;
    nlohmann::json j_;
};

// ---- stage implementations ------------------------------------------------

inline void stage_preprocess(const PipelineConfig& cfg) {
    auto corpus = load_metadata(cfg.metadata);
    fs::create_directories(cfg.out_dir + "/processed");
    Manifest man(cfg.out_dir);
    std::vector<std::string> outputs;
    for (const auto& m : corpus) {
        std::string in = cfg.audio_dir + "/" + m.uuid + ".wav";
        AudioSignal sig = load_audio(in);
        AudioSignal proc =
            preprocess(sig, cfg.cutoff_hz, cfg.filter_order, cfg.target_rate);
        std::string out = cfg.out_dir + "/processed/" + m.uuid + ".wav";
        write_audio(out, proc);
        outputs.push_back(out);
    }
    man.record_stage("preprocess", {cfg.metadata}, outputs, config_hash(cfg),
                     cfg.seed);
}

inline void stage_segment(const PipelineConfig& cfg) {
    auto corpus = load_metadata(cfg.metadata);
    Manifest man(cfg.out_dir);
    CsvTable seg_table;
    seg_table.header = {"uuid", "index", "start_sample", "end_sample", "snr_db"};
    CsvTable meta_out;
    meta_out.header = {"uuid", "status", "cough_detected", "SNR", "gender"};
    std::vector<std::string> annot;
    if (!corpus.empty())
        for (const auto& [id, _] : corpus[0].expert_labels) annot.push_back(id);
    for (const auto& id : annot) meta_out.header.push_back("expert_" + id);

    for (const auto& m : corpus) {
        std::string in = cfg.out_dir + "/processed/" + m.uuid + ".wav";
        man.require("preprocess", in);
        AudioSignal sig = load_audio(in);
        auto segs = segment_coughs(sig, cfg.seg, m.uuid);
        double snr = -999.0;  // sentinel: no usable SNR, fails the keep rule
        try {
            snr = estimate_snr(sig, segs);
        } catch (const std::invalid_argument&) {
        }
        for (size_t i = 0; i < segs.size(); ++i)
            seg_table.rows.push_back({m.uuid, std::to_string(i),
                                      std::to_string(segs[i].start_sample),
                                      std::to_string(segs[i].end_sample),
                                      csv_num(snr)});
        std::vector<std::string> row = {m.uuid, to_string(m.user_status),
                                        csv_num(m.cough_score), csv_num(snr),
                                        to_string(m.gender)};
        for (const auto& id : annot)
            row.push_back(to_string(m.expert_labels.count(id)
                                        ? m.expert_labels.at(id)
                                        : ExpertLabel::none));
        meta_out.rows.push_back(std::move(row));
    }
    std::string p_seg = cfg.out_dir + "/segments.csv";
    std::string p_meta = cfg.out_dir + "/metadata_snr.csv";
    write_csv(p_seg, seg_table);
    write_csv(p_meta, meta_out);
    man.record_stage("segment", {cfg.metadata}, {p_seg, p_meta},
                     config_hash(cfg), cfg.seed);
}

// In-memory feature extraction used by both the features stage and the
// test harnesses.
inline CoughDataset extract_corpus_features(
    const std::map<std::string, AudioSignal>& audio,
    const std::map<std::string, std::vector<CoughSegment>>& segments,
    const std::map<std::string, Gender>& gender, const FeatureConfig& fc) {
    CoughDataset ds;
    ds.feature_names = feature_names(fc);
    for (const auto& [uuid, segs] : segments) {
        const AudioSignal& sig = audio.at(uuid);
        double g = std::nan("");
        auto git = gender.find(uuid);
        if (git != gender.end()) {
            if (git->second == Gender::male) g = 1.0;
            else if (git->second == Gender::female) g = 0.0;
        }
        for (const auto& s : segs) {
            std::vector<double> seg(sig.samples.begin() + long(s.start_sample),
                                    sig.samples.begin() + long(s.end_sample));
            ds.X.push_back(extract_features(seg, sig.sample_rate, fc, g));
            ds.rec_of.push_back(uuid);
        }
    }
    return ds;
}

inline void write_features_csv(const CoughDataset& ds, const std::string& path) {
    CsvTable t;
    t.header = {"uuid", "segment"};
    for (const auto& n : ds.feature_names) t.header.push_back(n);
    std::map<std::string, int> seg_idx;
    for (size_t i = 0; i < ds.X.size(); ++i) {
        std::vector<std::string> row = {ds.rec_of[i],
                                        std::to_string(seg_idx[ds.rec_of[i]]++)};
        for (double v : ds.X[i]) row.push_back(csv_num(v));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

inline CoughDataset read_features_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    CoughDataset ds;
    ds.feature_names.assign(t.header.begin() + 2, t.header.end());
    for (const auto& row : t.rows) {
        ds.rec_of.push_back(row[0]);
        std::vector<double> v;
        for (size_t j = 2; j < row.size(); ++j) v.push_back(std::stod(row[j]));
        ds.X.push_back(std::move(v));
    }
    return ds;
}

inline void stage_features(const PipelineConfig& cfg) {
    Manifest man(cfg.out_dir);
    std::string p_seg = cfg.out_dir + "/segments.csv";
    std::string p_meta = cfg.out_dir + "/metadata_snr.csv";
    man.require("segment", p_seg);
    man.require("segment", p_meta);
    auto corpus = load_metadata(p_meta);

    std::map<std::string, AudioSignal> audio;
    std::map<std::string, std::vector<CoughSegment>> segments;
    std::map<std::string, Gender> gender;
    CsvTable segs = read_csv(p_seg);
    for (const auto& row : segs.rows)
        segments[row[0]].push_back({size_t(std::stoull(row[2])),
                                    size_t(std::stoull(row[3])), row[0]});
    for (const auto& m : corpus) {
        if (!segments.count(m.uuid)) continue;
        audio[m.uuid] =
            load_audio(cfg.out_dir + "/processed/" + m.uuid + ".wav");
        gender[m.uuid] = m.gender;
    }
    CoughDataset ds = extract_corpus_features(audio, segments, gender, cfg.feat);

    // gender imputation for recordings without a known gender
    std::string p_gmodel = cfg.out_dir + "/models/gender_model.json";
    if (cfg.feat.include_gender) {
        PipelineOptions opt;
        opt.seed = cfg.seed + 17;
        opt.tpe_budget = cfg.gender_budget;
        opt.enable_rfecv = false;
        fs::create_directories(cfg.out_dir + "/models");
        TrainedModel gm = train_gender_model(corpus, ds, opt);
        impute_gender(gm, corpus, ds);
        save_model(gm, p_gmodel);
    }

    std::string p_feat = cfg.out_dir + "/features.csv";
    write_features_csv(ds, p_feat);
    std::vector<std::string> outs = {p_feat};
    if (cfg.feat.include_gender) outs.push_back(p_gmodel);
    man.record_stage("features", {p_seg, p_meta}, outs, config_hash(cfg),
                     cfg.seed);
}

inline void write_tpe_history_csv(const std::vector<Trial>& history,
                                  const std::string& path) {
    CsvTable t;
    t.header = {"trial", "mean_auc", "std_auc", "params"};
    for (size_t i = 0; i < history.size(); ++i) {
        std::ostringstream params;
        for (const auto& [k, v] : history[i].config)
            params << k << "=" << csv_num(v) << ";";
        t.rows.push_back({std::to_string(i), csv_num(history[i].objective),
                          csv_num(history[i].fold_std), params.str()});
    }
    write_csv(path, t);
}

inline void stage_train_experts(const PipelineConfig& cfg) {
    Manifest man(cfg.out_dir);
    std::string p_feat = cfg.out_dir + "/features.csv";
    std::string p_meta = cfg.out_dir + "/metadata_snr.csv";
    man.require("features", p_feat);
    man.require("segment", p_meta);
    auto corpus = filter_corpus(load_metadata(p_meta), cfg.min_cough_score,
                                cfg.min_snr_db);
    CoughDataset ds = read_features_csv(p_feat);

    std::vector<std::string> annot;
    if (!corpus.empty())
        for (const auto& [id, _] : corpus[0].expert_labels) annot.push_back(id);

    PipelineOptions opt;
    opt.seed = cfg.seed;
    opt.tpe_budget = cfg.tpe_budget;
    std::map<std::string, PipelineReport> reports;
    ExpertModelSet set = train_expert_models(corpus, ds, annot, opt,
                                             cfg.min_minority, &reports);

    fs::create_directories(cfg.out_dir + "/models");
    std::vector<std::string> outs;
    CsvTable rep;
    rep.header = {"annotator", "status", "model_kind", "cv_auc", "cv_auc_std",
                  "n_features", "rfecv"};
    for (const auto& [id, model] : set.models) {
        std::string p = cfg.out_dir + "/models/expert_" + id + ".json";
        save_model(model, p);
        outs.push_back(p);
        const auto& r = reports.at(id);
        rep.rows.push_back(
            {id, "trained",
             r.chosen_kind == ModelKind::lda ? "lda" : "logistic_regression",
             csv_num(r.cv_auc), csv_num(r.cv_auc_std),
             std::to_string(r.n_features_selected),
             r.rfecv_applied ? "yes" : "no"});
        std::string ph = cfg.out_dir + "/models/expert_" + id + "_tpe.csv";
        write_tpe_history_csv(r.history, ph);
        outs.push_back(ph);
    }
    for (const auto& [id, reason] : set.excluded)
        rep.rows.push_back({id, "excluded: " + reason, "", "", "", "", ""});
    std::string p_rep = cfg.out_dir + "/expert_training.csv";
    write_csv(p_rep, rep);
    outs.push_back(p_rep);
    man.record_stage("train-experts", {p_feat, p_meta}, outs, config_hash(cfg),
                     cfg.seed);
}

inline void write_coverage_csv(const CoverageReport& rep, const std::string& path) {
    CsvTable t;
    t.header = {"scheme", "recordings", "recordings_pos", "coughs",
                "coughs_pos", "mean_js_divergence"};
    auto add = [&](const char* name, const SchemeCoverage& c) {
        t.rows.push_back({name, std::to_string(c.recordings),
                          std::to_string(c.recordings_pos),
                          std::to_string(c.coughs),
                          std::to_string(c.coughs_pos), csv_num(c.mean_js)});
    };
    add("universal", rep.universal);
    add("expert", rep.expert);
    add("majority", rep.majority);
    add("user", rep.user);
    write_csv(path, t);
}

inline void stage_ssl_relabel(const PipelineConfig& cfg,
                              const std::string& models_dir = "") {
    Manifest man(cfg.out_dir);
    std::string p_feat = cfg.out_dir + "/features.csv";
    std::string p_meta = cfg.out_dir + "/metadata_snr.csv";
    man.require("features", p_feat);
    man.require("segment", p_meta);
    auto corpus = filter_corpus(load_metadata(p_meta), cfg.min_cough_score,
                                cfg.min_snr_db);
    CoughDataset ds = read_features_csv(p_feat);

    std::string mdir =
        models_dir.empty() ? cfg.out_dir + "/models" : models_dir;
    ExpertModelSet set;
    for (const auto& e : fs::directory_iterator(mdir)) {
        std::string name = e.path().filename().string();
        if (name.rfind("expert_", 0) == 0 &&
            e.path().extension() == ".json")
            set.models[name.substr(7, name.size() - 12)] =
                load_model(e.path().string());
    }
    if (set.models.empty())
        throw std::runtime_error("no expert models in " + mdir +
                                 ": run train-experts first");

    auto records = propagate(set, corpus, ds);
    auto [labeled, rep] = build_ssl_dataset(std::move(records), ds, cfg.scheme);

    std::string p_labels = cfg.out_dir + "/labels.csv";
    std::string p_cov = cfg.out_dir + "/coverage.csv";
    write_labels(labeled, p_labels);
    write_coverage_csv(rep, p_cov);

    std::ofstream summary(cfg.out_dir + "/coverage_summary.txt");
    summary << "Agreement scheme coverage (scheme in use: "
            << to_string(cfg.scheme) << ")\n";
    auto line = [&](const char* n, const SchemeCoverage& c) {
        summary << "  " << n << ": " << c.recordings << " recordings ("
                << c.recordings_pos << " positive), " << c.coughs << " coughs ("
                << c.coughs_pos << " positive), mean JS divergence "
                << c.mean_js << "\n";
    };
    line("universal", rep.universal);
    line("expert   ", rep.expert);
    line("majority ", rep.majority);
    line("user     ", rep.user);
    if (rep.user_contradicts_majority)
        summary << "  note: " << rep.user_contradicts_majority
                << " recording(s) had a 2-of-3 expert majority contradicted by "
                   "the user label and were discarded\n";
    man.record_stage("ssl-relabel", {p_feat, p_meta},
                     {p_labels, p_cov, cfg.out_dir + "/coverage_summary.txt"},
                     config_hash(cfg), cfg.seed);
}

inline void stage_train_final(const PipelineConfig& cfg) {
    Manifest man(cfg.out_dir);
    std::string p_feat = cfg.out_dir + "/features.csv";
    std::string p_labels = cfg.out_dir + "/labels.csv";
    man.require("features", p_feat);
    man.require("ssl-relabel", p_labels);
    CoughDataset ds = read_features_csv(p_feat);
    auto records = load_labels(p_labels);

    PipelineOptions opt;
    opt.seed = cfg.seed + 1;
    opt.tpe_budget = cfg.tpe_budget;
    PipelineReport rep;
    TrainedModel model = train_final_model(ds, records, opt, &rep);

    fs::create_directories(cfg.out_dir + "/models");
    std::string p_model = cfg.out_dir + "/models/final.json";
    save_model(model, p_model);
    std::string p_hist = cfg.out_dir + "/models/final_tpe.csv";
    write_tpe_history_csv(rep.history, p_hist);
    man.record_stage("train-final", {p_feat, p_labels}, {p_model, p_hist},
                     config_hash(cfg), cfg.seed);
}

inline void stage_evaluate(const PipelineConfig& cfg,
                           const std::string& model_path = "") {
    Manifest man(cfg.out_dir);
    std::string p_feat = cfg.out_dir + "/features.csv";
    std::string p_labels = cfg.out_dir + "/labels.csv";
    man.require("features", p_feat);
    man.require("ssl-relabel", p_labels);
    std::string p_model =
        model_path.empty() ? cfg.out_dir + "/models/final.json" : model_path;
    TrainedModel model = load_model(p_model);
    CoughDataset ds = read_features_csv(p_feat);
    auto labels = ssl_task_labels(load_labels(p_labels));

    EvalMetrics m = evaluate(model, ds, labels);

    CsvTable t;
    t.header = {"metric", "value"};
    t.rows = {{"auc_not_aggregated", csv_num(m.auc_not_aggregated)},
              {"auc_aggregated", csv_num(m.auc_aggregated)},
              {"sensitivity", csv_num(m.sensitivity)},
              {"specificity", csv_num(m.specificity)},
              {"n_recordings", std::to_string(m.n_recordings)},
              {"n_coughs", std::to_string(m.n_coughs)}};
    std::string p_metrics = cfg.out_dir + "/metrics.csv";
    write_csv(p_metrics, t);

    // aggregated ROC points
    std::map<std::string, std::vector<size_t>> rows;
    for (size_t i = 0; i < ds.rec_of.size(); ++i)
        rows[ds.rec_of[i]].push_back(i);
    std::vector<double> scores;
    std::vector<int> ys;
    for (const auto& [uuid, y] : labels) {
        auto it = rows.find(uuid);
        if (it == rows.end()) continue;
        std::vector<double> probas;
        for (size_t i : it->second) probas.push_back(model.cough_proba(ds.X[i]));
        scores.push_back(model.recording_score(probas));
        ys.push_back(y);
    }
    CsvTable roc;
    roc.header = {"fpr", "tpr", "threshold"};
    for (const auto& p : roc_curve(scores, ys))
        roc.rows.push_back({csv_num(p.fpr), csv_num(p.tpr), csv_num(p.threshold)});
    std::string p_roc = cfg.out_dir + "/roc.csv";
    write_csv(p_roc, roc);
    man.record_stage("evaluate", {p_feat, p_labels, p_model},
                     {p_metrics, p_roc}, config_hash(cfg), cfg.seed);
}

namespace detail {

inline void write_svg_polyline(std::ofstream& f,
                               const std::vector<double>& xs,
                               const std::vector<double>& ys, double x_lo,
                               double x_hi, double y_lo, double y_hi,
                               const char* color) {
    f << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < xs.size(); ++i) {
        double px = 40.0 + 520.0 * (xs[i] - x_lo) / (x_hi - x_lo);
        double py = 360.0 - 320.0 * (ys[i] - y_lo) / (y_hi - y_lo);
        f << px << "," << py << " ";
    }
    f << "\"/>\n";
}

}  // namespace detail

// Regenerates the class PSD report and ROC plot data from cached
// artifacts.
inline void stage_report(const PipelineConfig& cfg) {
    Manifest man(cfg.out_dir);
    std::string p_labels = cfg.out_dir + "/labels.csv";
    std::string p_seg = cfg.out_dir + "/segments.csv";
    man.require("ssl-relabel", p_labels);
    man.require("segment", p_seg);
    auto records = load_labels(p_labels);

    // per-class PSD curves from the processed audio
    std::map<std::string, std::vector<CoughSegment>> segments;
    CsvTable segs = read_csv(p_seg);
    for (const auto& row : segs.rows)
        segments[row[0]].push_back({size_t(std::stoull(row[2])),
                                    size_t(std::stoull(row[3])), row[0]});
    std::vector<PsdCurve> pos, neg;
    for (const auto& rec : records) {
        if (rec.ssl_status == SslStatus::discarded) continue;
        auto it = segments.find(rec.uuid);
        if (it == segments.end()) continue;
        AudioSignal sig =
            load_audio(cfg.out_dir + "/processed/" + rec.uuid + ".wav");
        for (const auto& s : it->second) {
            std::vector<double> seg(sig.samples.begin() + long(s.start_sample),
                                    sig.samples.begin() + long(s.end_sample));
            (rec.ssl_status == SslStatus::covid ? pos : neg)
                .push_back(normalized_psd(seg, sig.sample_rate,
                                          cfg.feat.frame_len));
        }
    }
    ClassPsdReport rep = class_psd_report(pos, neg, cfg.feat.psd_bands);
    CsvTable t;
    t.header = {"freq_hz", "mean_covid", "ci_covid", "mean_healthy",
                "ci_healthy"};
    for (size_t k = 0; k < rep.freqs_hz.size(); ++k)
        t.rows.push_back({csv_num(rep.freqs_hz[k]), csv_num(rep.mean_a[k]),
                          csv_num(rep.ci_a[k]), csv_num(rep.mean_b[k]),
                          csv_num(rep.ci_b[k])});
    std::string p_psd = cfg.out_dir + "/psd_report.csv";
    write_csv(p_psd, t);

    CsvTable bt;
    bt.header = {"band_lo_hz", "band_hi_hz", "p_value", "log10_p"};
    for (size_t b = 0; b < cfg.feat.psd_bands.size(); ++b)
        bt.rows.push_back({csv_num(cfg.feat.psd_bands[b].first),
                           csv_num(cfg.feat.psd_bands[b].second),
                           csv_num(rep.band_p[b]), csv_num(rep.band_log10_p[b])});
    std::string p_bands = cfg.out_dir + "/psd_band_tests.csv";
    write_csv(p_bands, bt);

    // simple SVG render of the PSD curves
    std::string p_svg = cfg.out_dir + "/psd_report.svg";
    {
        std::ofstream f(p_svg);
        double y_hi = 1e-9;
        for (double v : rep.mean_a) y_hi = std::max(y_hi, v);
        for (double v : rep.mean_b) y_hi = std::max(y_hi, v);
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" "
             "height=\"400\" viewBox=\"0 0 600 400\">\n"
             "<rect width=\"600\" height=\"400\" fill=\"white\"/>\n";
        detail::write_svg_polyline(f, rep.freqs_hz, rep.mean_a, 0,
                                   rep.freqs_hz.back(), 0, y_hi, "#c0392b");
        detail::write_svg_polyline(f, rep.freqs_hz, rep.mean_b, 0,
                                   rep.freqs_hz.back(), 0, y_hi, "#2980b9");
        f << "<text x=\"50\" y=\"20\" font-size=\"13\">Average normalized PSD "
             "(red: COVID-19, blue: healthy)</text>\n</svg>\n";
    }

    std::vector<std::string> outs = {p_psd, p_bands, p_svg};
    // ROC plot data if evaluate has run
    std::string p_roc = cfg.out_dir + "/roc.csv";
    if (fs::exists(p_roc)) {
        CsvTable roc = read_csv(p_roc);
        std::vector<double> fpr, tpr;
        for (const auto& row : roc.rows) {
            fpr.push_back(std::stod(row[0]));
            tpr.push_back(std::stod(row[1]));
        }
        std::string p_roc_svg = cfg.out_dir + "/roc.svg";
        std::ofstream f(p_roc_svg);
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" "
             "height=\"400\" viewBox=\"0 0 600 400\">\n"
             "<rect width=\"600\" height=\"400\" fill=\"white\"/>\n";
        detail::write_svg_polyline(f, fpr, tpr, 0, 1, 0, 1, "#27ae60");
        f << "<text x=\"50\" y=\"20\" font-size=\"13\">Aggregated ROC "
             "curve</text>\n</svg>\n";
        outs.push_back(p_roc_svg);
    }
    man.record_stage("report", {p_labels, p_seg}, outs, config_hash(cfg),
                     cfg.seed);
}

// Writes a synthetic corpus to disk (WAV files + metadata CSV) so the
// full CLI pipeline has something to run on.
inline void stage_synth(const PipelineConfig& cfg, const SynthConfig& scfg) {
    SynthCorpus corpus = generate_synthetic_corpus(scfg, cfg.seed);
    fs::create_directories(cfg.audio_dir);
    for (const auto& [uuid, sig] : corpus.audio)
        write_audio(cfg.audio_dir + "/" + uuid + ".wav", sig);
    CsvTable t;
    t.header = {"uuid", "status", "cough_detected", "SNR", "gender"};
    std::vector<std::string> annot;
    if (!corpus.meta.empty())
        for (const auto& [id, _] : corpus.meta[0].expert_labels)
            annot.push_back(id);
    for (const auto& id : annot) t.header.push_back("expert_" + id);
    t.header.push_back("ground_truth");  // extra column, ignored by loaders
    for (const auto& m : corpus.meta) {
        std::vector<std::string> row = {m.uuid, to_string(m.user_status),
                                        csv_num(m.cough_score), "",
                                        to_string(m.gender)};
        for (const auto& id : annot)
            row.push_back(to_string(m.expert_labels.at(id)));
        row.push_back(corpus.ground_truth.at(m.uuid) ? "COVID-19" : "healthy");
        t.rows.push_back(std::move(row));
    }
    fs::create_directories(fs::path(cfg.metadata).parent_path().empty()
                               ? "."
                               : fs::path(cfg.metadata).parent_path().string());
    write_csv(cfg.metadata, t);
}

}  // namespace coughml

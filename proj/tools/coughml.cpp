// coughml: end-to-end pipeline for semi-supervised relabeling of a
// crowdsourced cough-audio corpus.
//
// Exit codes: 0 success, 2 config error, 3 data/processing error.

#include <CLI11.hpp>
#include <iostream>

#include "coughml/pipeline.hpp"

using namespace coughml;

int main(int argc, char** argv) {
    CLI::App app{"cough corpus relabeling pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string audio_dir, metadata, out_dir, models_dir, model_path;
    int seed = -1, budget = -1, jobs = -1, synth_n = 60;
    std::string scheme;

    app.add_option("-c,--config", config_path, "config file (key = value)");
    app.add_option("--audio-dir", audio_dir, "override audio directory");
    app.add_option("--metadata", metadata, "override metadata CSV path");
    app.add_option("--out-dir", out_dir, "override output directory");
    app.add_option("--seed", seed, "override RNG seed");
    app.add_option("--budget", budget, "override TPE trial budget");
    app.add_option("--scheme", scheme,
                   "agreement scheme: universal | expert | majority");
    app.add_option("--jobs", jobs, "worker parallelism cap");

    auto* sc_synth = app.add_subcommand("synth", "generate a synthetic corpus");
    sc_synth->add_option("-n,--recordings", synth_n, "number of recordings");
    auto* sc_pre = app.add_subcommand("preprocess",
                                      "normalize, lowpass, resample to 12 kHz");
    auto* sc_seg = app.add_subcommand("segment",
                                      "segment coughs and estimate SNR");
    auto* sc_feat = app.add_subcommand("features", "extract feature vectors");
    auto* sc_experts =
        app.add_subcommand("train-experts", "train per-annotator models");
    auto* sc_ssl = app.add_subcommand(
        "ssl-relabel", "propagate pseudo-labels and apply the agreement scheme");
    sc_ssl->add_option("--models-dir", models_dir,
                       "expert model directory (default: <out>/models)");
    auto* sc_final =
        app.add_subcommand("train-final", "train the final SSL classifier");
    auto* sc_eval = app.add_subcommand("evaluate", "evaluate a trained model");
    sc_eval->add_option("--model", model_path,
                        "model JSON (default: <out>/models/final.json)");
    auto* sc_report =
        app.add_subcommand("report", "emit PSD / ROC report data and plots");

    CLI11_PARSE(app, argc, argv);

    PipelineConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!audio_dir.empty()) cfg.audio_dir = audio_dir;
        if (!metadata.empty()) cfg.metadata = metadata;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed >= 0) cfg.seed = uint64_t(seed);
        if (budget > 0) cfg.tpe_budget = budget;
        if (jobs > 0) cfg.jobs = jobs;
        if (!scheme.empty()) {
            if (scheme == "universal") cfg.scheme = AgreementScheme::universal;
            else if (scheme == "expert") cfg.scheme = AgreementScheme::expert;
            else if (scheme == "majority") cfg.scheme = AgreementScheme::majority;
            else throw ConfigError("unknown scheme: " + scheme);
        }
        if (cfg.metadata.empty() || cfg.audio_dir.empty())
            throw ConfigError("audio_dir and metadata must be set "
                              "(config file or flags)");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::filesystem::create_directories(cfg.out_dir);
        if (sc_synth->parsed()) {
            SynthConfig scfg;
            scfg.n_recordings = synth_n;
            stage_synth(cfg, scfg);
            std::cout << "wrote " << synth_n << " recordings to "
                      << cfg.audio_dir << " and metadata to " << cfg.metadata
                      << "\n";
        } else if (sc_pre->parsed()) {
            stage_preprocess(cfg);
            std::cout << "preprocess: done\n";
        } else if (sc_seg->parsed()) {
            stage_segment(cfg);
            std::cout << "segment: wrote " << cfg.out_dir << "/segments.csv\n";
        } else if (sc_feat->parsed()) {
            stage_features(cfg);
            std::cout << "features: wrote " << cfg.out_dir << "/features.csv\n";
        } else if (sc_experts->parsed()) {
            stage_train_experts(cfg);
            std::cout << "train-experts: wrote models to " << cfg.out_dir
                      << "/models\n";
        } else if (sc_ssl->parsed()) {
            stage_ssl_relabel(cfg, models_dir);
            std::cout << "ssl-relabel: wrote " << cfg.out_dir << "/labels.csv\n";
        } else if (sc_final->parsed()) {
            stage_train_final(cfg);
            std::cout << "train-final: wrote " << cfg.out_dir
                      << "/models/final.json\n";
        } else if (sc_eval->parsed()) {
            stage_evaluate(cfg, model_path);
            std::cout << "evaluate: wrote " << cfg.out_dir << "/metrics.csv\n";
        } else if (sc_report->parsed()) {
            stage_report(cfg);
            std::cout << "report: wrote " << cfg.out_dir
                      << "/psd_report.csv\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

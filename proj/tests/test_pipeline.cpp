#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "coughml/pipeline.hpp"

using namespace coughml;
namespace fsys = std::filesystem;

namespace {

struct TempDir {
    fsys::path path;
    TempDir() {
        path = fsys::temp_directory_path() /
               ("coughml_pipe_" + std::to_string(std::random_device{}()));
        fsys::create_directories(path);
    }
    ~TempDir() { fsys::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
}

PipelineConfig small_cfg(const TempDir& td, const std::string& out_name) {
    PipelineConfig cfg;
    cfg.audio_dir = td.file("audio");
    cfg.metadata = td.file("metadata.csv");
    cfg.out_dir = td.file(out_name);
    cfg.seed = 42;
    cfg.tpe_budget = 6;
    cfg.gender_budget = 4;
    cfg.min_minority = 5;
    cfg.min_snr_db = 5.0;
    return cfg;
}

SynthConfig small_synth() {
    SynthConfig s;
    s.n_recordings = 50;
    s.annotator_coverage = 0.7;
    return s;
}

void run_all_stages(const PipelineConfig& cfg) {
    stage_preprocess(cfg);
    stage_segment(cfg);
    stage_features(cfg);
    stage_train_experts(cfg);
    stage_ssl_relabel(cfg);
    stage_train_final(cfg);
    stage_evaluate(cfg);
    stage_report(cfg);
}

}  // namespace

TEST_CASE("load_config parses, validates and rejects unknowns") {
    TempDir td;
    write_text(td.file("good.cfg"),
               "# a comment\n"
               "audio_dir = /tmp/a\n"
               "metadata= meta.csv\n"
               "cutoff_hz = 5500 # trailing comment\n"
               "seg_upper_mult = 3.0\n"
               "scheme = expert\n"
               "seed = 123\n"
               "\n");
    PipelineConfig c = load_config(td.file("good.cfg"));
    CHECK(c.audio_dir == "/tmp/a");
    CHECK(c.metadata == "meta.csv");
    CHECK(c.cutoff_hz == doctest::Approx(5500.0));
    CHECK(c.seg.upper_mult == doctest::Approx(3.0));
    CHECK(c.scheme == AgreementScheme::expert);
    CHECK(c.seed == 123);
    CHECK(c.tpe_budget == 40);  // untouched default

    write_text(td.file("unknown.cfg"), "no_such_key = 1\n");
    CHECK_THROWS_WITH_AS(load_config(td.file("unknown.cfg")),
                         doctest::Contains("unknown key"), ConfigError);

    write_text(td.file("badval.cfg"), "cutoff_hz = not_a_number\n");
    CHECK_THROWS_WITH_AS(load_config(td.file("badval.cfg")),
                         doctest::Contains("bad value"), ConfigError);

    write_text(td.file("badline.cfg"), "this line has no equals\n");
    CHECK_THROWS_AS(load_config(td.file("badline.cfg")), ConfigError);

    write_text(td.file("badscheme.cfg"), "scheme = quorum\n");
    CHECK_THROWS_WITH_AS(load_config(td.file("badscheme.cfg")),
                         doctest::Contains("unknown scheme"), ConfigError);

    write_text(td.file("badseg.cfg"),
               "seg_lower_mult = 2.0\nseg_upper_mult = 1.0\n");
    CHECK_THROWS_AS(load_config(td.file("badseg.cfg")), ConfigError);

    CHECK_THROWS_AS(load_config(td.file("missing.cfg")), ConfigError);
}

TEST_CASE("config_hash tracks the analysis-relevant fields") {
    PipelineConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.cutoff_hz = 5000.0;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.out_dir = "elsewhere";  // paths do not affect the analysis hash
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("manifest records stages and detects staleness") {
    TempDir td;
    write_text(td.file("in.txt"), "input data");
    write_text(td.file("out.txt"), "output data");
    {
        Manifest man(td.path.string());
        man.record_stage("stage_a", {td.file("in.txt")}, {td.file("out.txt")},
                         "cfg123", 7);
    }
    // a fresh Manifest instance reads the persisted state back
    {
        Manifest man(td.path.string());
        CHECK_NOTHROW(man.require("stage_a", td.file("out.txt")));
        CHECK_THROWS_WITH_AS(man.require("stage_b", td.file("out.txt")),
                             doctest::Contains("run the stage_b stage first"),
                             std::runtime_error);
        CHECK_THROWS_WITH_AS(man.require("stage_a", td.file("other.txt")),
                             doctest::Contains("did not produce"),
                             std::runtime_error);
    }
    // tampering with the artifact invalidates it
    write_text(td.file("out.txt"), "modified afterwards");
    {
        Manifest man(td.path.string());
        CHECK_THROWS_WITH_AS(man.require("stage_a", td.file("out.txt")),
                             doctest::Contains("stale"), std::runtime_error);
    }
}

TEST_CASE("stages refuse to run out of order") {
    TempDir td;
    PipelineConfig cfg = small_cfg(td, "out");
    stage_synth(cfg, small_synth());
    // features before preprocess/segment: the manifest blocks it
    CHECK_THROWS_AS(stage_features(cfg), std::runtime_error);
    CHECK_THROWS_AS(stage_train_final(cfg), std::runtime_error);
}

TEST_CASE("full pipeline runs end to end and is deterministic") {
    TempDir td;
    PipelineConfig cfg = small_cfg(td, "out1");
    stage_synth(cfg, small_synth());
    run_all_stages(cfg);

    // artifacts exist
    for (const char* f :
         {"segments.csv", "metadata_snr.csv", "features.csv", "labels.csv",
          "coverage.csv", "coverage_summary.txt", "expert_training.csv",
          "metrics.csv", "roc.csv", "psd_report.csv", "psd_band_tests.csv",
          "psd_report.svg", "roc.svg", "manifest.json"})
        CHECK(fsys::exists(fsys::path(cfg.out_dir) / f));
    CHECK(fsys::exists(fsys::path(cfg.out_dir) / "models/final.json"));
    CHECK(fsys::exists(fsys::path(cfg.out_dir) / "models/gender_model.json"));

    // the trained model does better than chance on its own labels
    CsvTable metrics = read_csv(cfg.out_dir + "/metrics.csv");
    double auc = -1.0;
    size_t n_recs = 0;
    for (const auto& row : metrics.rows) {
        if (row[0] == "auc_aggregated") auc = std::stod(row[1]);
        if (row[0] == "n_recordings") n_recs = std::stoul(row[1]);
    }
    CHECK(auc > 0.7);
    CHECK(n_recs > 10);

    // labels round-trip losslessly through the CSV layer
    auto records = load_labels(cfg.out_dir + "/labels.csv");
    CHECK(!records.empty());
    {
        std::string copy = td.file("labels_copy.csv");
        write_labels(records, copy);
        CHECK(slurp(copy) == slurp(cfg.out_dir + "/labels.csv"));
    }

    SUBCASE("identical seed reproduces byte-identical outputs") {
        PipelineConfig cfg2 = small_cfg(td, "out2");
        run_all_stages(cfg2);
        for (const char* f : {"labels.csv", "metrics.csv", "coverage.csv",
                              "features.csv", "roc.csv"})
            CHECK(slurp(cfg.out_dir + "/" + f) == slurp(cfg2.out_dir + "/" + f));
    }

    SUBCASE("a different seed changes the trained artifacts") {
        PipelineConfig cfg3 = small_cfg(td, "out3");
        cfg3.seed = 43;
        // same corpus on disk; only the training seed differs
        run_all_stages(cfg3);
        CHECK(slurp(cfg.out_dir + "/models/final.json") !=
              slurp(cfg3.out_dir + "/models/final.json"));
    }
}

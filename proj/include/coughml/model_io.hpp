#pragma once

// Versioned JSON persistence for TrainedModel.

#include <fstream>
#include <nlohmann/json.hpp>

#include "coughml/ml.hpp"

namespace coughml {

inline constexpr int kModelSchemaVersion = 1;

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    j["standardizer"] = {{"means", m.standardizer.means},
                         {"stds", m.standardizer.stds}};
    std::vector<int> zv(m.standardizer.zero_variance.begin(),
                        m.standardizer.zero_variance.end());
    j["standardizer"]["zero_variance"] = zv;
    j["model"] = {{"kind", m.model.kind == ModelKind::lda ? "lda"
                                                          : "logistic_regression"},
                  {"weights", m.model.weights},
                  {"bias", m.model.bias},
                  {"hyperparams", m.model.hyperparams}};
    std::vector<int> mask(m.feature_mask.begin(), m.feature_mask.end());
    j["feature_mask"] = mask;
    j["threshold"] = m.threshold;
    j["aggregation"] =
        m.aggregation == Aggregation::logit_mean ? "logit_mean" : "logit_median";
    j["feature_names"] = m.feature_names;
    j["data_fingerprint"] = m.data_fingerprint;
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion)
        throw std::runtime_error("unsupported model schema version");
    TrainedModel m;
    m.standardizer.means = j.at("standardizer").at("means").get<std::vector<double>>();
    m.standardizer.stds = j.at("standardizer").at("stds").get<std::vector<double>>();
    for (int v : j.at("standardizer").at("zero_variance").get<std::vector<int>>())
        m.standardizer.zero_variance.push_back(v != 0);
    m.model.kind = j.at("model").at("kind").get<std::string>() == "lda"
                       ? ModelKind::lda
                       : ModelKind::logistic_regression;
    m.model.weights = j.at("model").at("weights").get<std::vector<double>>();
    m.model.bias = j.at("model").at("bias").get<double>();
    m.model.hyperparams =
        j.at("model").at("hyperparams").get<std::map<std::string, double>>();
    for (int v : j.at("feature_mask").get<std::vector<int>>())
        m.feature_mask.push_back(v != 0);
    m.threshold = j.at("threshold").get<double>();
    m.aggregation = j.at("aggregation").get<std::string>() == "logit_median"
                        ? Aggregation::logit_median
                        : Aggregation::logit_mean;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.data_fingerprint = j.at("data_fingerprint").get<std::string>();
    return m;
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write model file: " + path);
    f << model_to_json(m).dump(2) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j;
    f >> j;
    return model_from_json(j);
}

}  // namespace coughml

#pragma once

// Corpus metadata and relabeled-output tables.
//
// Metadata CSV columns: uuid,status,cough_detected,SNR,gender,expert_<id>
// (extra columns ignored). Output adds status_SSL and label_source_<id>.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "coughml/csv.hpp"

namespace coughml {

enum class UserStatus { covid, healthy, symptomatic, none };
enum class ExpertLabel { covid, healthy, other, none };
enum class Gender { male, female, unknown };
enum class SslStatus { covid, healthy, discarded };
enum class LabelSource { original_expert, pseudo_model };

inline std::string to_string(UserStatus s) {
    switch (s) {
        case UserStatus::covid: return "COVID-19";
        case UserStatus::healthy: return "healthy";
        case UserStatus::symptomatic: return "symptomatic";
        default: return "";
    }
}
inline std::string to_string(ExpertLabel s) {
    switch (s) {
        case ExpertLabel::covid: return "COVID-19";
        case ExpertLabel::healthy: return "healthy";
        case ExpertLabel::other: return "other";
        default: return "";
    }
}
inline std::string to_string(SslStatus s) {
    switch (s) {
        case SslStatus::covid: return "COVID-19";
        case SslStatus::healthy: return "healthy";
        default: return "discarded";
    }
}
inline std::string to_string(Gender g) {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        default: return "";
    }
}

inline UserStatus parse_user_status(const std::string& s) {
    if (s == "COVID-19" || s == "covid" || s == "COVID") return UserStatus::covid;
    if (s == "healthy") return UserStatus::healthy;
    if (s == "symptomatic") return UserStatus::symptomatic;
    return UserStatus::none;
}
inline ExpertLabel parse_expert_label(const std::string& s) {
    if (s == "COVID-19" || s == "covid" || s == "COVID") return ExpertLabel::covid;
    if (s == "healthy") return ExpertLabel::healthy;
    if (s.empty()) return ExpertLabel::none;
    return ExpertLabel::other;
}
inline Gender parse_gender(const std::string& s) {
    if (s == "male" || s == "m") return Gender::male;
    if (s == "female" || s == "f") return Gender::female;
    return Gender::unknown;
}

struct RecordingMeta {
    std::string uuid;
    UserStatus user_status = UserStatus::none;
    std::map<std::string, ExpertLabel> expert_labels;  // annotator id -> label
    Gender gender = Gender::unknown;
    double cough_score = 0.0;  // cough-detector output, [0, 1]
    std::optional<double> snr_db;
};

struct LabelRecord {
    std::string uuid;
    UserStatus user_status = UserStatus::none;
    std::map<std::string, ExpertLabel> expert_or_pseudo;  // covid/healthy only
    std::map<std::string, LabelSource> label_source;
    SslStatus ssl_status = SslStatus::discarded;
};

class DatasetError : public std::runtime_error {
public:
    explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

// Loads the corpus metadata table. Annotator ids are taken from the
// expert_<id> columns. Duplicate uuids and malformed numeric cells are
// rejected with the offending row number.
inline std::vector<RecordingMeta> load_metadata(const std::string& path) {
    CsvTable t = read_csv(path);
    int c_uuid = t.column("uuid");
    if (c_uuid < 0) throw DatasetError(path + ": missing uuid column");
    int c_status = t.column("status");
    int c_score = t.column("cough_detected");
    int c_snr = t.column("SNR");
    int c_gender = t.column("gender");

    std::vector<std::pair<std::string, int>> expert_cols;  // id, column
    for (size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind("expert_", 0) == 0)
            expert_cols.emplace_back(t.header[i].substr(7), int(i));

    std::vector<RecordingMeta> corpus;
    std::map<std::string, size_t> seen;  // uuid -> row number
    for (size_t r = 0; r < t.rows.size(); ++r) {
        RecordingMeta m;
        m.uuid = t.cell(r, c_uuid);
        if (m.uuid.empty())
            throw DatasetError(path + ": row " + std::to_string(r + 2) +
                               ": empty uuid");
        auto [it, inserted] = seen.emplace(m.uuid, r + 2);
        if (!inserted)
            throw DatasetError(path + ": duplicate uuid '" + m.uuid +
                               "' at rows " + std::to_string(it->second) +
                               " and " + std::to_string(r + 2));
        m.user_status = parse_user_status(t.cell(r, c_status));
        m.gender = parse_gender(t.cell(r, c_gender));
        const std::string& score = t.cell(r, c_score);
        if (!score.empty()) {
            try {
                m.cough_score = std::stod(score);
            } catch (const std::exception&) {
                throw DatasetError(path + ": row " + std::to_string(r + 2) +
                                   ", column cough_detected: bad value '" +
                                   score + "'");
            }
            if (m.cough_score < 0.0 || m.cough_score > 1.0)
                throw DatasetError(path + ": row " + std::to_string(r + 2) +
                                   ": cough_detected out of [0,1]");
        }
        const std::string& snr = t.cell(r, c_snr);
        if (!snr.empty()) {
            try {
                m.snr_db = std::stod(snr);
            } catch (const std::exception&) {
                throw DatasetError(path + ": row " + std::to_string(r + 2) +
                                   ", column SNR: bad value '" + snr + "'");
            }
        }
        for (const auto& [id, col] : expert_cols)
            m.expert_labels[id] = parse_expert_label(t.cell(r, col));
        corpus.push_back(std::move(m));
    }
    return corpus;
}

// Keeps entries passing both quality gates (strict inequalities).
inline std::vector<RecordingMeta> filter_corpus(
    const std::vector<RecordingMeta>& corpus, double min_cough_score,
    double min_snr_db) {
    std::vector<RecordingMeta> out;
    for (const auto& m : corpus) {
        if (!m.snr_db)
            throw DatasetError("recording " + m.uuid +
                               " has no SNR value; run the segment stage first");
        if (m.cough_score > min_cough_score && *m.snr_db > min_snr_db)
            out.push_back(m);
    }
    return out;
}

inline std::vector<std::string> annotator_ids(const std::vector<LabelRecord>& records) {
    std::set<std::string> ids;
    for (const auto& r : records)
        for (const auto& [id, _] : r.expert_or_pseudo) ids.insert(id);
    return {ids.begin(), ids.end()};
}

inline void write_labels(const std::vector<LabelRecord>& records,
                         const std::string& path) {
    CsvTable t;
    std::vector<std::string> ids = annotator_ids(records);
    t.header = {"uuid", "status", "status_SSL"};
    for (const auto& id : ids) {
        t.header.push_back("expert_" + id);
        t.header.push_back("label_source_" + id);
    }
    for (const auto& rec : records) {
        std::vector<std::string> row = {rec.uuid, to_string(rec.user_status),
                                        to_string(rec.ssl_status)};
        for (const auto& id : ids) {
            auto it = rec.expert_or_pseudo.find(id);
            if (it == rec.expert_or_pseudo.end()) {
                row.push_back("");
                row.push_back("");
            } else {
                row.push_back(to_string(it->second));
                row.push_back(rec.label_source.at(id) ==
                                      LabelSource::original_expert
                                  ? "original_expert"
                                  : "pseudo_model");
            }
        }
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

inline std::vector<LabelRecord> load_labels(const std::string& path) {
    CsvTable t = read_csv(path);
    int c_uuid = t.column("uuid");
    int c_status = t.column("status");
    int c_ssl = t.column("status_SSL");
    if (c_uuid < 0 || c_ssl < 0)
        throw DatasetError(path + ": not a label table (uuid/status_SSL)");

    std::vector<std::pair<std::string, std::pair<int, int>>> expert_cols;
    for (size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind("expert_", 0) == 0) {
            std::string id = t.header[i].substr(7);
            int src = t.column("label_source_" + id);
            expert_cols.push_back({id, {int(i), src}});
        }

    std::vector<LabelRecord> out;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        LabelRecord rec;
        rec.uuid = t.cell(r, c_uuid);
        rec.user_status = parse_user_status(t.cell(r, c_status));
        const std::string& ssl = t.cell(r, c_ssl);
        rec.ssl_status = ssl == "COVID-19" ? SslStatus::covid
                         : ssl == "healthy" ? SslStatus::healthy
                                            : SslStatus::discarded;
        for (const auto& [id, cols] : expert_cols) {
            const std::string& lbl = t.cell(r, cols.first);
            if (lbl.empty()) continue;
            rec.expert_or_pseudo[id] = parse_expert_label(lbl);
            rec.label_source[id] =
                t.cell(r, cols.second) == "pseudo_model"
                    ? LabelSource::pseudo_model
                    : LabelSource::original_expert;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace coughml

#include "mibci/config.hpp"

#include <algorithm>
#include <fstream>

#include "json_util.hpp"
#include "mibci/error.hpp"

namespace mibci {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw Error(ErrorCode::ConfigError,
                        "unknown config key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ConfigError,
                    std::string("config field '") + key + "' in " + where +
                        " is missing or has the wrong type");
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& target, const std::string& where) {
    if (j.contains(key)) target = get_field<T>(j, key, where);
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

RunConfig parse_run_config(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "config is not valid JSON");

    reject_unknown_keys(j,
                        {"format_version", "seed", "data", "epoch", "filter", "ica", "features",
                         "split", "section_size", "classifiers", "hyperparameters"},
                        "top level");
    if (j.contains("format_version") && get_field<int>(j, "format_version", "top level") != 1) {
        throw Error(ErrorCode::ConfigError, "unsupported config format_version");
    }

    RunConfig cfg;
    maybe(j, "seed", cfg.seed, "top level");

    if (j.contains("data")) {
        const json& data = j.at("data");
        reject_unknown_keys(data, {"dir", "subjects"}, "data");
        cfg.data_dir = get_field<std::string>(data, "dir", "data");
        for (const auto& sj : get_field<json>(data, "subjects", "data")) {
            reject_unknown_keys(sj, {"name", "recordings"}, "data.subjects");
            SubjectData sd;
            sd.name = get_field<std::string>(sj, "name", "data.subjects");
            sd.recordings = get_field<std::vector<std::string>>(sj, "recordings", "data.subjects");
            if (sd.recordings.empty()) {
                throw Error(ErrorCode::ConfigError, "subject '" + sd.name + "' lists no recordings");
            }
            cfg.subjects.push_back(std::move(sd));
        }
        if (cfg.subjects.size() != 2) {
            throw Error(ErrorCode::ConfigError, "exactly two subjects are supported");
        }
    }

    if (j.contains("epoch")) {
        const json& e = j.at("epoch");
        reject_unknown_keys(e, {"start_s", "end_s"}, "epoch");
        maybe(e, "start_s", cfg.epoch_start_s, "epoch");
        maybe(e, "end_s", cfg.epoch_end_s, "epoch");
        if (!(cfg.epoch_end_s > cfg.epoch_start_s)) {
            throw Error(ErrorCode::ConfigError, "epoch window must have positive length");
        }
    }

    if (j.contains("filter")) {
        const json& f = j.at("filter");
        reject_unknown_keys(f, {"order", "low_hz", "high_hz"}, "filter");
        maybe(f, "order", cfg.filter.order, "filter");
        maybe(f, "low_hz", cfg.filter.band.low_hz, "filter");
        maybe(f, "high_hz", cfg.filter.band.high_hz, "filter");
        if (cfg.filter.order != 2 && cfg.filter.order != 4 && cfg.filter.order != 6 &&
            cfg.filter.order != 8) {
            throw Error(ErrorCode::ConfigError, "filter order must be 2, 4, 6 or 8");
        }
        if (!(cfg.filter.band.low_hz > 0.0) ||
            !(cfg.filter.band.low_hz < cfg.filter.band.high_hz)) {
            throw Error(ErrorCode::ConfigError, "filter band must satisfy 0 < low < high");
        }
    }

    cfg.ica.assign(2, IcaConfig{});
    cfg.ica[0].enabled = true;  // cleaning helps subject 1; subject 2 ships with it off
    if (j.contains("ica")) {
        const json& ica = j.at("ica");
        reject_unknown_keys(ica, {"enabled", "threshold", "max_drop", "tol", "max_iter"}, "ica");
        if (ica.contains("enabled")) {
            const auto enabled = get_field<std::vector<bool>>(ica, "enabled", "ica");
            if (enabled.size() != 2) {
                throw Error(ErrorCode::ConfigError, "ica.enabled needs one flag per subject");
            }
            cfg.ica[0].enabled = enabled[0];
            cfg.ica[1].enabled = enabled[1];
        }
        for (auto& ic : cfg.ica) {
            maybe(ica, "threshold", ic.threshold, "ica");
            maybe(ica, "max_drop", ic.max_drop, "ica");
            maybe(ica, "tol", ic.tol, "ica");
            maybe(ica, "max_iter", ic.max_iter, "ica");
        }
        if (cfg.ica[0].threshold < 0.0 || cfg.ica[0].threshold > 1.0) {
            throw Error(ErrorCode::ConfigError, "ica.threshold must lie in [0, 1]");
        }
        if (cfg.ica[0].max_drop < 0 || cfg.ica[0].max_iter <= 0 || !(cfg.ica[0].tol > 0.0)) {
            throw Error(ErrorCode::ConfigError, "invalid ica settings");
        }
    }

    if (j.contains("features")) {
        const json& f = j.at("features");
        reject_unknown_keys(
            f, {"kind", "channels", "bands", "band_names", "welch_segment_s", "welch_overlap",
                "csp_filters"},
            "features");
        if (f.contains("kind")) {
            const auto kind = get_field<std::string>(f, "kind", "features");
            if (kind == "log_subband_power") {
                cfg.extractor.kind = kernels::ExtractorKind::LogSubbandPower;
            } else if (kind == "csp") {
                cfg.extractor.kind = kernels::ExtractorKind::Csp;
            } else {
                throw Error(ErrorCode::ConfigError, "features.kind must be log_subband_power or csp");
            }
        }
        if (f.contains("channels")) {
            cfg.extractor.layout.channels =
                get_field<std::vector<std::string>>(f, "channels", "features");
            if (cfg.extractor.layout.channels.empty()) {
                throw Error(ErrorCode::ConfigError, "features.channels must not be empty");
            }
        }
        if (f.contains("bands")) {
            cfg.extractor.layout.bands.clear();
            cfg.extractor.layout.band_names.clear();
            for (const auto& b : f.at("bands")) {
                if (!b.is_array() || b.size() != 2) {
                    throw Error(ErrorCode::ConfigError, "features.bands entries must be [low, high]");
                }
                const BandSpec band{b.at(0).get<double>(), b.at(1).get<double>()};
                if (!(band.low_hz > 0.0) || !(band.low_hz < band.high_hz)) {
                    throw Error(ErrorCode::ConfigError, "invalid feature band");
                }
                cfg.extractor.layout.bands.push_back(band);
            }
            if (f.contains("band_names")) {
                cfg.extractor.layout.band_names =
                    get_field<std::vector<std::string>>(f, "band_names", "features");
                if (cfg.extractor.layout.band_names.size() != cfg.extractor.layout.bands.size()) {
                    throw Error(ErrorCode::ConfigError, "band_names length must match bands");
                }
            }
        } else if (f.contains("band_names")) {
            throw Error(ErrorCode::ConfigError, "band_names given without bands");
        }
        maybe(f, "welch_segment_s", cfg.extractor.layout.welch_segment_s, "features");
        maybe(f, "welch_overlap", cfg.extractor.layout.welch_overlap, "features");
        maybe(f, "csp_filters", cfg.extractor.csp_filters, "features");
        if (!(cfg.extractor.layout.welch_segment_s > 0.0) ||
            cfg.extractor.layout.welch_overlap < 0.0 || cfg.extractor.layout.welch_overlap >= 1.0) {
            throw Error(ErrorCode::ConfigError, "invalid Welch settings");
        }
        if (cfg.extractor.csp_filters <= 0 || cfg.extractor.csp_filters % 2 != 0) {
            throw Error(ErrorCode::ConfigError, "csp_filters must be a positive even count");
        }
    }

    if (j.contains("split")) {
        const json& s = j.at("split");
        reject_unknown_keys(s, {"train_fraction"}, "split");
        maybe(s, "train_fraction", cfg.train_fraction, "split");
        if (!(cfg.train_fraction > 0.0) || !(cfg.train_fraction < 1.0)) {
            throw Error(ErrorCode::ConfigError, "train_fraction must lie in (0, 1)");
        }
    }

    maybe(j, "section_size", cfg.section_size, "top level");
    if (cfg.section_size <= 0) {
        throw Error(ErrorCode::ConfigError, "section_size must be positive");
    }

    if (j.contains("classifiers")) {
        const json& c = j.at("classifiers");
        reject_unknown_keys(c, {"table", "mi_selected", "gate_selected"}, "classifiers");
        maybe(c, "table", cfg.table_classifiers, "classifiers");
        maybe(c, "mi_selected", cfg.mi_selected, "classifiers");
        maybe(c, "gate_selected", cfg.gate_selected, "classifiers");
        if (cfg.table_classifiers.empty()) {
            throw Error(ErrorCode::ConfigError, "classifiers.table must not be empty");
        }
        if (cfg.mi_selected.size() != 2) {
            throw Error(ErrorCode::ConfigError, "classifiers.mi_selected needs one entry per subject");
        }
        for (const auto& name : cfg.table_classifiers) classifier_kind_from_string(name);
        for (const auto& name : cfg.mi_selected) classifier_kind_from_string(name);
        classifier_kind_from_string(cfg.gate_selected);
    }

    if (j.contains("hyperparameters")) {
        const json& h = j.at("hyperparameters");
        reject_unknown_keys(h, {"logreg", "lda", "gnb", "knn", "svm"}, "hyperparameters");
        if (h.contains("logreg")) {
            const json& p = h.at("logreg");
            reject_unknown_keys(p, {"learning_rate", "epochs", "l2"}, "hyperparameters.logreg");
            maybe(p, "learning_rate", cfg.hyper.logreg.learning_rate, "logreg");
            maybe(p, "epochs", cfg.hyper.logreg.epochs, "logreg");
            maybe(p, "l2", cfg.hyper.logreg.l2, "logreg");
        }
        if (h.contains("lda")) {
            const json& p = h.at("lda");
            reject_unknown_keys(p, {"ridge_scale"}, "hyperparameters.lda");
            maybe(p, "ridge_scale", cfg.hyper.lda.ridge_scale, "lda");
        }
        if (h.contains("gnb")) {
            const json& p = h.at("gnb");
            reject_unknown_keys(p, {"variance_floor"}, "hyperparameters.gnb");
            maybe(p, "variance_floor", cfg.hyper.gnb.variance_floor, "gnb");
        }
        if (h.contains("knn")) {
            const json& p = h.at("knn");
            reject_unknown_keys(p, {"k"}, "hyperparameters.knn");
            maybe(p, "k", cfg.hyper.knn.k, "knn");
        }
        if (h.contains("svm")) {
            const json& p = h.at("svm");
            reject_unknown_keys(p, {"lambda", "epochs"}, "hyperparameters.svm");
            maybe(p, "lambda", cfg.hyper.svm.lambda, "svm");
            maybe(p, "epochs", cfg.hyper.svm.epochs, "svm");
        }
        if (cfg.hyper.logreg.epochs <= 0 || cfg.hyper.svm.epochs <= 0 || cfg.hyper.knn.k <= 0 ||
            cfg.hyper.knn.k % 2 == 0 || !(cfg.hyper.svm.lambda > 0.0) ||
            !(cfg.hyper.logreg.learning_rate > 0.0)) {
            throw Error(ErrorCode::ConfigError, "invalid hyperparameters");
        }
    }

    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["format_version"] = 1;
    j["seed"] = cfg.seed;
    json subjects = json::array();
    for (const auto& s : cfg.subjects) {
        subjects.push_back({{"name", s.name}, {"recordings", s.recordings}});
    }
    j["data"] = {{"dir", cfg.data_dir.string()}, {"subjects", subjects}};
    j["epoch"] = {{"start_s", cfg.epoch_start_s}, {"end_s", cfg.epoch_end_s}};
    j["filter"] = {{"order", cfg.filter.order},
                   {"low_hz", cfg.filter.band.low_hz},
                   {"high_hz", cfg.filter.band.high_hz}};
    j["ica"] = {{"enabled", json::array({cfg.ica.empty() ? true : cfg.ica[0].enabled,
                                         cfg.ica.size() < 2 ? false : cfg.ica[1].enabled})},
                {"threshold", cfg.ica.empty() ? 0.3 : cfg.ica[0].threshold},
                {"max_drop", cfg.ica.empty() ? 1 : cfg.ica[0].max_drop},
                {"tol", cfg.ica.empty() ? 1e-4 : cfg.ica[0].tol},
                {"max_iter", cfg.ica.empty() ? 200 : cfg.ica[0].max_iter}};
    json bands = json::array();
    for (const auto& b : cfg.extractor.layout.bands) bands.push_back({b.low_hz, b.high_hz});
    j["features"] = {
        {"kind", cfg.extractor.kind == kernels::ExtractorKind::Csp ? "csp" : "log_subband_power"},
        {"channels", cfg.extractor.layout.channels},
        {"bands", bands},
        {"band_names", cfg.extractor.layout.band_names},
        {"welch_segment_s", cfg.extractor.layout.welch_segment_s},
        {"welch_overlap", cfg.extractor.layout.welch_overlap},
        {"csp_filters", cfg.extractor.csp_filters}};
    j["split"] = {{"train_fraction", cfg.train_fraction}};
    j["section_size"] = cfg.section_size;
    j["classifiers"] = {{"table", cfg.table_classifiers},
                        {"mi_selected", cfg.mi_selected},
                        {"gate_selected", cfg.gate_selected}};
    j["hyperparameters"] = {
        {"logreg",
         {{"learning_rate", cfg.hyper.logreg.learning_rate},
          {"epochs", cfg.hyper.logreg.epochs},
          {"l2", cfg.hyper.logreg.l2}}},
        {"lda", {{"ridge_scale", cfg.hyper.lda.ridge_scale}}},
        {"gnb", {{"variance_floor", cfg.hyper.gnb.variance_floor}}},
        {"knn", {{"k", cfg.hyper.knn.k}}},
        {"svm", {{"lambda", cfg.hyper.svm.lambda}, {"epochs", cfg.hyper.svm.epochs}}}};
    return j.dump(2);
}

std::string RunConfig::fingerprint() const {
    // Canonical dump of the full config; nlohmann objects are key-sorted so
    // the serialization is stable.
    return fnv1a_hex(run_config_to_json(*this));
}

TrialSet load_subject_trials(const RunConfig& cfg, int subject_index) {
    if (subject_index < 0 || subject_index >= static_cast<int>(cfg.subjects.size())) {
        throw Error(ErrorCode::ConfigError, "subject index out of range");
    }
    const SubjectData& sd = cfg.subjects[static_cast<std::size_t>(subject_index)];
    TrialSet pooled;
    bool first = true;
    for (const auto& rel : sd.recordings) {
        const Recording rec = load_recording(cfg.data_dir / rel);
        TrialSet ts = epoch_trials(rec, cfg.epoch_start_s, cfg.epoch_end_s, subject_index);
        if (first) {
            pooled = std::move(ts);
            first = false;
            continue;
        }
        if (pooled.fs != ts.fs || pooled.channels.size() != ts.channels.size()) {
            throw Error(ErrorCode::ShapeMismatch,
                        "sessions of subject '" + sd.name + "' disagree on layout");
        }
        for (std::size_t i = 0; i < pooled.channels.size(); ++i) {
            if (pooled.channels[i].name != ts.channels[i].name) {
                throw Error(ErrorCode::ShapeMismatch,
                            "sessions of subject '" + sd.name + "' disagree on channel names");
            }
        }
        for (auto& t : ts.trials) pooled.trials.push_back(std::move(t));
    }
    if (pooled.empty()) {
        throw Error(ErrorCode::ConfigError, "subject '" + sd.name + "' has no trials");
    }
    return pooled;
}

}  // namespace mibci

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mibci/pipeline.hpp"

namespace mibci {

// Run configuration for the CLI. Parsed from JSON with exhaustive validation;
// unknown keys anywhere in the document are rejected.
struct SubjectData {
    std::string name;
    std::vector<std::string> recordings;  // header paths relative to data dir
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::filesystem::path data_dir;
    std::vector<SubjectData> subjects;  // index 0 = subject 1, index 1 = subject 2
    double epoch_start_s = 0.5;
    double epoch_end_s = 3.5;
    FilterConfig filter;
    std::vector<IcaConfig> ica;  // per subject
    ExtractorConfig extractor;
    double train_fraction = 0.8;
    int section_size = 5;
    Hyperparams hyper;
    std::vector<std::string> table_classifiers = {"logreg", "lda", "gnb", "ensemble"};
    std::vector<std::string> mi_selected = {"lda", "logreg"};  // per subject
    std::string gate_selected = "ensemble";

    // Stable hash of the canonicalized config (output paths excluded); stamped
    // into bundles and reports so mismatched model/config pairs are refused.
    std::string fingerprint() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

// Loads and pools every session of one subject into a single epoched set.
TrialSet load_subject_trials(const RunConfig& cfg, int subject_index);

// FNV-1a over a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mibci

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mibci/classifiers.hpp"
#include "mibci/dataset.hpp"
#include "mibci/ica.hpp"
#include "mibci/kernels.hpp"

namespace mibci {

struct FilterConfig {
    int order = 4;
    BandSpec band{2.0, 60.0};
};

struct IcaConfig {
    bool enabled = false;
    double threshold = 0.3;  // drop the top-scoring component iff score >= threshold
    int max_drop = 1;
    double tol = 1e-4;
    int max_iter = 200;
};

struct ExtractorConfig {
    kernels::ExtractorKind kind = kernels::ExtractorKind::LogSubbandPower;
    SubbandLayout layout = SubbandLayout::default_layout();
    int csp_filters = 2;  // even
};

// Fitted EOG-artifact remover: applies a fixed ICA transform and drops the
// selected components. Fit on training data only; applied to any trial.
struct IcaCleaner {
    IcaModel model;
    std::vector<int> drop;
    std::vector<int> eeg_columns;  // columns the model was fit on
    EogScores scores;

    Eigen::MatrixXd clean(const Eigen::MatrixXd& trial_data) const;
};

struct TrainMeta {
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
    int n_train = 0;
    int n_test = 0;
};

// Per-subject motor-imagery classifier plus everything needed to reproduce
// its preprocessing on unseen trials.
struct MiBundle {
    int subject_id = 0;
    FilterConfig filter;
    std::optional<IcaCleaner> cleaner;
    ExtractorConfig extractor;
    std::optional<CspModel> csp;
    Standardizer standardizer;
    ClassifierModel model;
    std::vector<std::string> feature_names;
    TrainMeta meta;

    // bandpass -> optional ICA cleaning -> features -> standardize
    Eigen::VectorXd features_for(const Trial& trial, const std::vector<ChannelInfo>& channels,
                                 double fs) const;
    int predict_trial(const Trial& trial, const std::vector<ChannelInfo>& channels,
                      double fs) const;
};

// Cross-subject gate: one extractor and one standardizer shared by both
// subjects' data (no per-subject cleaning).
struct GateBundle {
    FilterConfig filter;
    ExtractorConfig extractor;
    std::optional<CspModel> csp;
    Standardizer standardizer;
    ClassifierModel model;
    std::vector<std::string> feature_names;
    int section_size = 5;
    TrainMeta meta;

    Eigen::VectorXd features_for(const Trial& trial, const std::vector<ChannelInfo>& channels,
                                 double fs) const;
};

struct DispatchPipeline {
    GateBundle gate;
    std::map<int, MiBundle> mi;  // subject label -> bundle
};

struct SectionRecord {
    int index = 0;
    int true_label = -1;  // -1 when unknown
    int predicted = 0;
    std::vector<int> votes;
};

struct EvaluationReport {
    std::string task;  // "mi", "gate", "dispatch"
    int subject_id = -1;
    std::string classifier;
    std::uint64_t seed = 0;
    std::string config_fingerprint;
    int n_train = 0;
    int n_test = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    Eigen::Matrix2i confusion;  // [true][pred] on the test split

    // gate extras
    double sectioned_accuracy = 0.0;
    double per_trial_accuracy = 0.0;
    std::vector<SectionRecord> sections;

    // dispatch extras
    double gate_routing_accuracy = 0.0;
    double end_to_end_mi_accuracy = 0.0;
    double oracle_gate_mi_accuracy = 0.0;

    std::string to_json() const;
};

struct MiTrainConfig {
    FilterConfig filter;
    IcaConfig ica;
    ExtractorConfig extractor;
    ClassifierKind kind = ClassifierKind::Lda;
    Hyperparams hyper;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct GateTrainConfig {
    FilterConfig filter;
    ExtractorConfig extractor;
    ClassifierKind kind = ClassifierKind::Ensemble;
    Hyperparams hyper;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    int section_size = 5;
};

// Shared preprocessing for one task: everything that is independent of the
// classifier kind. Fitted objects (ICA, CSP, standardizer) use training rows
// only; the split is a pure function of (n, fraction, seed).
struct PreparedTask {
    TrialSet processed;  // bandpassed (and cleaned, for MI) trials, all of them
    SplitIndices split;
    Eigen::MatrixXd train_X, test_X;  // standardized
    Eigen::VectorXi train_y, test_y;
    std::vector<int> test_subjects;  // true subject per test row (gate/dispatch bookkeeping)
    std::optional<IcaCleaner> cleaner;
    std::optional<CspModel> csp;
    Standardizer standardizer;
    std::vector<std::string> feature_names;
};

PreparedTask prepare_mi_task(const TrialSet& trials, const MiTrainConfig& cfg,
                             std::optional<SplitIndices> split_override = std::nullopt);

// Relabels by subject, pools, applies identical preprocessing to both
// subjects. Default split shuffles the pooled set; an override of per-input
// splits builds the gate partitions from them instead.
PreparedTask prepare_gate_task(const TrialSet& trials1, const TrialSet& trials2,
                               const GateTrainConfig& cfg,
                               std::optional<std::pair<SplitIndices, SplitIndices>> split_override =
                                   std::nullopt);

// Fit one classifier kind on an already-prepared task and evaluate it. With a
// positive `section_size`, the report additionally carries the sectioned
// (mode-per-section) accuracy grouped by true subject.
EvaluationReport evaluate_on_prepared(const PreparedTask& task, const ClassifierModel& model,
                                      const std::string& task_name, int subject_id,
                                      int section_size, std::uint64_t seed);

MiBundle assemble_mi_bundle(const PreparedTask& task, const MiTrainConfig& cfg,
                            ClassifierModel model, int subject_id);
GateBundle assemble_gate_bundle(const PreparedTask& task, const GateTrainConfig& cfg,
                                ClassifierModel model);

std::pair<MiBundle, EvaluationReport> train_mi(const TrialSet& trials, const MiTrainConfig& cfg,
                                               std::optional<SplitIndices> split_override =
                                                   std::nullopt);

std::pair<GateBundle, EvaluationReport> train_gate(
    const TrialSet& trials1, const TrialSet& trials2, const GateTrainConfig& cfg,
    std::optional<std::pair<SplitIndices, SplitIndices>> split_override = std::nullopt);

// Mode of the per-row gate predictions; rows are standardized gate features.
// Ties (possible only for short remainder sections) resolve to label 0.
int sectioned_predict(const GateBundle& gate, const Eigen::MatrixXd& section_rows);

// Routes a run of raw trials through the gate, then labels every trial with
// the selected subject's MI bundle.
std::pair<int, std::vector<int>> dispatch_predict(const DispatchPipeline& p,
                                                  const std::vector<Trial>& run,
                                                  const std::vector<ChannelInfo>& channels,
                                                  double fs);

// Partitions each subject's held-out trials into runs of `section_size`
// (seeded shuffle first; the remainder forms a short run), dispatches each
// run, and reports routing accuracy, end-to-end MI accuracy and the
// oracle-gate upper bound.
EvaluationReport evaluate_dispatch(const DispatchPipeline& p, const TrialSet& test1,
                                   const TrialSet& test2, std::uint64_t seed);

// --- bundle serialization ----------------------------------------------------

std::string mi_bundle_to_json(const MiBundle& b, const std::string& config_fingerprint);
MiBundle mi_bundle_from_json(const std::string& text, std::string* fingerprint_out = nullptr);
std::string gate_bundle_to_json(const GateBundle& b, const std::string& config_fingerprint);
GateBundle gate_bundle_from_json(const std::string& text, std::string* fingerprint_out = nullptr);

}  // namespace mibci

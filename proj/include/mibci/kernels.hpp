#pragma once

#include <optional>

#include "mibci/classifiers.hpp"
#include "mibci/dsp.hpp"
#include "mibci/features.hpp"
#include "mibci/types.hpp"

// Batch kernels over trials and feature rows. Each has an OpenMP-parallel
// version (the one the pipeline uses) and a serial reference; every item is
// computed independently, so the two produce bit-identical output and the
// tests assert exactly that. `mibci_bench` times the pairs.
namespace mibci::kernels {

enum class ExtractorKind { LogSubbandPower, Csp };

// Per-trial feature extraction, resolved from either a sub-band layout or a
// fitted CSP model.
struct FeatureExtractor {
    ExtractorKind kind = ExtractorKind::LogSubbandPower;
    SubbandLayout layout;
    std::optional<CspModel> csp;

    Eigen::VectorXd extract(const Eigen::MatrixXd& trial_data,
                            const std::vector<ChannelInfo>& trial_channels, double fs) const;
    std::vector<std::string> feature_names() const;
    int dimension() const;
};

// Zero-phase bandpass applied to every channel of every trial.
TrialSet filter_trials(const TrialSet& ts, const FilterCoefficients& c);
TrialSet filter_trials_serial(const TrialSet& ts, const FilterCoefficients& c);

Eigen::MatrixXd filter_recording_samples(const Eigen::MatrixXd& samples,
                                         const FilterCoefficients& c);

FeatureMatrix extract_features(const TrialSet& ts, const FeatureExtractor& fx);
FeatureMatrix extract_features_serial(const TrialSet& ts, const FeatureExtractor& fx);

Eigen::VectorXi predict_batch(const ClassifierModel& model, const Eigen::MatrixXd& X);

}  // namespace mibci::kernels

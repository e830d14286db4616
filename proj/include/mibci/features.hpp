#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mibci/dsp.hpp"
#include "mibci/types.hpp"

namespace mibci {

// Sub-band power layout. The default splits alpha (8-14 Hz) into four
// 1.5 Hz sub-bands and beta (14-30 Hz) into four 4 Hz sub-bands, computed on
// C3 and C4, giving a 16-dimensional feature vector.
struct SubbandLayout {
    std::vector<BandSpec> bands;
    std::vector<std::string> channels;
    std::vector<std::string> band_names;  // "alpha1".."beta4"
    double welch_segment_s = 1.0;
    double welch_overlap = 0.5;

    static SubbandLayout default_layout();
    // Channels-major, bands-minor: "C3.alpha1", ..., "C4.beta4".
    std::vector<std::string> feature_names() const;
    int dimension() const { return static_cast<int>(bands.size() * channels.size()); }
};

struct FeatureMatrix {
    Eigen::MatrixXd X;  // [n_trials x d]
    Eigen::VectorXi y;
    std::vector<std::string> feature_names;
};

// ln(max(band power, 1e-12)) for every (channel, sub-band) pair.
Eigen::VectorXd log_subband_power(const Eigen::MatrixXd& trial_data,
                                  const std::vector<ChannelInfo>& trial_channels,
                                  const SubbandLayout& layout, double fs);

struct CspModel {
    Eigen::MatrixXd filters;  // [m x n_ch], extreme eigenvalue pairs first
    Eigen::VectorXd eigvals;  // generalized eigenvalues in (0, 1)
    std::vector<std::string> channels;
};

// Solves sigma0 w = lambda (sigma0 + sigma1) w on trace-normalized average
// class covariances; keeps the m/2 largest- and m/2 smallest-lambda filters.
CspModel fit_csp(const TrialSet& trials, int m, std::vector<std::string> channels = {});

// feature_i = ln(var(filter_i . channels)); dimension m.
Eigen::VectorXd apply_csp(const CspModel& model, const Eigen::MatrixXd& trial_data,
                          const std::vector<ChannelInfo>& trial_channels);

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // floored at 1e-9
};

Standardizer fit_standardizer(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& X);
Eigen::VectorXd apply_standardizer(const Standardizer& s, const Eigen::VectorXd& x);

struct PcaModel {
    Eigen::MatrixXd components;  // [k x d], orthonormal rows
    Eigen::VectorXd mean;
    Eigen::VectorXd explained_variance;  // descending
    bool rank_deficient = false;         // k exceeded the numeric rank of X
};

// SVD of the centered matrix; components are the top-k right singular
// vectors with a deterministic sign convention.
PcaModel fit_pca(const Eigen::MatrixXd& X, int k);
Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& X);

}  // namespace mibci

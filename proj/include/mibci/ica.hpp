#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mibci/types.hpp"

namespace mibci {

struct IcaModel {
    Eigen::MatrixXd whitening;  // [k x n_ch]
    Eigen::MatrixXd unmixing;   // [k x k], orthogonal in whitened space
    Eigen::MatrixXd mixing;     // [n_ch x k], pseudo-inverse of unmixing * whitening
    Eigen::VectorXd means;      // per-channel means
    int n_components = 0;
    bool converged = true;
    int iterations = 0;

    // sources = (X - means) * (unmixing * whitening)^T, unit variance per column
    Eigen::MatrixXd sources(const Eigen::MatrixXd& eeg) const;
};

// Symmetric fixed-point FastICA with tanh contrast. Centers, whitens via an
// eigendecomposition of the covariance, then iterates until
// max_j |1 - |diag(W_new W_old^T)_j|| < tol or max_iter. Components are
// ordered by descending explained variance of their back-projection.
// Deterministic per seed. A non-converged run returns the model with
// `converged = false` rather than throwing.
IcaModel fast_ica(const Eigen::MatrixXd& eeg, int k, std::uint64_t seed, double tol = 1e-4,
                  int max_iter = 200);

struct EogScores {
    std::vector<double> score;         // per component: max over EOG channels of |r|
    std::vector<std::string> channel;  // argmax EOG channel name
};

EogScores score_eog_correlation(const IcaModel& model, const Eigen::MatrixXd& eeg,
                                const Eigen::MatrixXd& eog,
                                const std::vector<std::string>& eog_names = {});

// Reconstruction with the dropped sources zeroed; channel means re-added.
Eigen::MatrixXd remove_components(const IcaModel& model, const Eigen::MatrixXd& eeg,
                                  const std::vector<int>& drop);

}  // namespace mibci

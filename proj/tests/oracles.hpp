#pragma once

// Test-side oracles. These deliberately avoid the library's own computation
// paths: the frequency response is evaluated directly from the coefficients,
// nearest neighbours are found by exhaustive scan, and gradients come from
// central differences on the loss.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mibci/classifiers.hpp"
#include "mibci/dsp.hpp"

namespace oracle {

// H(e^{jw}) of the SOS cascade, w in radians/sample.
inline std::complex<double> freq_response(const mibci::FilterCoefficients& c, double w) {
    const std::complex<double> z1 = std::exp(std::complex<double>(0.0, -w));
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h(c.gain, 0.0);
    for (const auto& s : c.sections) {
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return h;
}

inline double magnitude_at_hz(const mibci::FilterCoefficients& c, double f, double fs) {
    return std::abs(freq_response(c, 2.0 * std::numbers::pi * f / fs));
}

// Zero-phase filtering squares the magnitude response.
inline double zero_phase_magnitude_db(const mibci::FilterCoefficients& c, double f, double fs) {
    return 40.0 * std::log10(magnitude_at_hz(c, f, fs));
}

// Lag of the cross-correlation peak between two equal-length signals,
// searched over [-max_lag, max_lag].
inline int xcorr_peak_lag(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int max_lag) {
    int best_lag = 0;
    double best = -1.0;
    const int n = static_cast<int>(a.size());
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const int j = i + lag;
            if (j < 0 || j >= n) continue;
            acc += a(i) * b(j);
        }
        if (std::abs(acc) > best) {
            best = std::abs(acc);
            best_lag = lag;
        }
    }
    return best_lag;
}

// Exhaustive k-nearest-neighbour vote with the same tie rule the model
// documents: distance ties break toward the lower training index.
inline int brute_knn(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, int k,
                     const Eigen::VectorXd& q) {
    std::vector<std::pair<double, int>> d;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        d.emplace_back((X.row(i).transpose() - q).squaredNorm(), static_cast<int>(i));
    }
    std::sort(d.begin(), d.end());
    int ones = 0;
    for (int i = 0; i < k; ++i) ones += y(d[static_cast<std::size_t>(i)].second);
    return 2 * ones > k ? 1 : 0;
}

// Central finite differences of the logistic loss.
inline void numeric_logreg_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                    double bias, const Eigen::VectorXd& w, double l2, double h,
                                    double& grad_bias, Eigen::VectorXd& grad_w) {
    grad_bias = (mibci::logreg_loss(X, y, bias + h, w, l2) -
                 mibci::logreg_loss(X, y, bias - h, w, l2)) /
                (2.0 * h);
    grad_w.resize(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        Eigen::VectorXd wp = w, wm = w;
        wp(i) += h;
        wm(i) -= h;
        grad_w(i) =
            (mibci::logreg_loss(X, y, bias, wp, l2) - mibci::logreg_loss(X, y, bias, wm, l2)) /
            (2.0 * h);
    }
}

// Best |Pearson r| against any estimated source, per true source.
inline std::vector<double> best_match_correlations(const Eigen::MatrixXd& truth,
                                                   const Eigen::MatrixXd& estimate) {
    std::vector<double> out;
    for (Eigen::Index t = 0; t < truth.cols(); ++t) {
        double best = 0.0;
        for (Eigen::Index e = 0; e < estimate.cols(); ++e) {
            best = std::max(best, std::abs(mibci::pearson(truth.col(t), estimate.col(e))));
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace oracle

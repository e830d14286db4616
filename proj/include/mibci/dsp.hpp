#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mibci/types.hpp"

namespace mibci {

// One biquad, transfer function (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct SosSection {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
    std::vector<SosSection> sections;
    double gain = 1.0;  // applied once per filtering pass
};

// Digital bandpass from an order-N analog Butterworth prototype via the
// lowpass-to-bandpass transform and a prewarped bilinear transform. The
// result has 2N poles, factored into N second-order sections with zeros
// split as (+1, -1) per section. Supported orders: 2, 4, 6, 8.
FilterCoefficients design_butterworth_bandpass(int order, BandSpec band, double fs);

// Single causal pass through the cascade, zero initial state.
Eigen::VectorXd sos_filter(const Eigen::VectorXd& x, const FilterCoefficients& c);

// Forward-backward filtering: squared magnitude response, zero net phase.
// Edges are handled by odd-reflection padding of 3 * (2 * prototype order)
// samples, with per-section initial conditions set to the step-response
// steady state scaled by the first padded sample.
Eigen::VectorXd filter_zero_phase(const Eigen::VectorXd& x, const FilterCoefficients& c);

// Hann-windowed overlapped periodogram average (one-sided, density scaling:
// sum(power) * df ~ variance for zero-mean input). Each segment has its mean
// removed before windowing.
Psd welch_psd(const Eigen::VectorXd& x, double fs, double segment_s, double overlap_fraction);

// Trapezoidal integral of the PSD over [low_hz, high_hz], with linear
// interpolation at the band edges. Throws EmptyBand when no grid point lies
// inside the band.
double band_power(const Psd& p, BandSpec band);

}  // namespace mibci

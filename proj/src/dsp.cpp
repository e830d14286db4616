#include "mibci/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

#include "mibci/error.hpp"

namespace mibci {

namespace {

using cplx = std::complex<double>;

void validate_band(const BandSpec& band, double fs) {
    if (!(band.low_hz > 0.0) || !(band.low_hz < band.high_hz) || !(band.high_hz < fs / 2.0)) {
        throw Error(ErrorCode::InvalidBand,
                    "band must satisfy 0 < low < high < fs/2, got [" +
                        std::to_string(band.low_hz) + ", " + std::to_string(band.high_hz) +
                        ") at fs " + std::to_string(fs));
    }
}

// Steady-state internal state of a DF2T biquad driven by a unit step, so a
// constant input produces its steady-state output from the first sample.
void step_steady_state(const SosSection& s, double& z1, double& z2) {
    const double h1 = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    z2 = s.b2 - s.a2 * h1;
    z1 = s.b1 + s.b2 - (s.a1 + s.a2) * h1;
}

Eigen::VectorXd sos_filter_zi(const Eigen::VectorXd& x, const FilterCoefficients& c,
                              bool steady_state_init) {
    Eigen::VectorXd y = x;
    for (const auto& s : c.sections) {
        double z1 = 0.0, z2 = 0.0;
        if (steady_state_init) {
            // Scale the step-response steady state by the first sample seen by
            // this cascade stage.
            step_steady_state(s, z1, z2);
            z1 *= y(0);
            z2 *= y(0);
        }
        for (Eigen::Index n = 0; n < y.size(); ++n) {
            const double xn = y(n);
            const double yn = s.b0 * xn + z1;
            z1 = s.b1 * xn - s.a1 * yn + z2;
            z2 = s.b2 * xn - s.a2 * yn;
            y(n) = yn;
        }
    }
    return y * c.gain;
}

int pad_length(const FilterCoefficients& c) {
    return 3 * static_cast<int>(2 * c.sections.size());
}

}  // namespace

FilterCoefficients design_butterworth_bandpass(int order, BandSpec band, double fs) {
    if (order != 2 && order != 4 && order != 6 && order != 8) {
        throw Error(ErrorCode::UnsupportedOrder,
                    "supported Butterworth orders are 2, 4, 6, 8; got " + std::to_string(order));
    }
    validate_band(band, fs);

    // Prewarped analog edge frequencies (rad/s) for the bilinear transform
    // s = 2 fs (z - 1) / (z + 1).
    const double fs2 = 2.0 * fs;
    const double w1 = fs2 * std::tan(std::numbers::pi * band.low_hz / fs);
    const double w2 = fs2 * std::tan(std::numbers::pi * band.high_hz / fs);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;

    // Left-half-plane prototype poles for the analog lowpass of this order.
    // Even orders only, so poles come in conjugate pairs; keep the upper half.
    std::vector<cplx> proto;
    for (int k = 0; k < order / 2; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + 1.0) / (2.0 * order) +
                             std::numbers::pi / 2.0;
        proto.emplace_back(std::cos(theta), std::sin(theta));
    }

    // Lowpass-to-bandpass: each prototype pole p yields the two roots of
    // s^2 - p bw s + w0^2 = 0. Together with their conjugates this gives
    // 2*order analog poles; zeros are `order` at s=0 and `order` at infinity.
    std::vector<cplx> analog_poles;
    for (const cplx& p : proto) {
        const cplx pb = p * bw * 0.5;
        const cplx disc = std::sqrt(pb * pb - cplx(w0sq, 0.0));
        analog_poles.push_back(pb + disc);
        analog_poles.push_back(pb - disc);
    }

    // Bilinear transform of poles; zeros at s=0 map to z=1 and the zeros at
    // infinity map to z=-1. Overall gain carried analytically:
    //   H(s) = (bw s)^order / prod(s - s_k)  (conjugates included)
    //   k_z  = bw^order * Re[ prod(fs2 - s_zero) / prod(fs2 - s_pole) ]
    // with `order` zeros at 0 and each pole paired with its conjugate.
    std::vector<cplx> digital_poles;
    cplx denom(1.0, 0.0);
    for (const cplx& sp : analog_poles) {
        digital_poles.push_back((fs2 + sp) / (fs2 - sp));
        denom *= (fs2 - sp) * (fs2 - std::conj(sp));
    }
    cplx numer = std::pow(cplx(bw * fs2, 0.0), order);
    const double gain = (numer / denom).real();

    FilterCoefficients out;
    out.gain = gain;
    for (const cplx& zp : digital_poles) {
        if (std::abs(zp) >= 1.0) {
            throw Error(ErrorCode::InvalidBand, "designed pole on or outside the unit circle");
        }
        // One zero at +1 and one at -1 per section: b = (1, 0, -1).
        SosSection s;
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        out.sections.push_back(s);
    }
    return out;
}

Eigen::VectorXd sos_filter(const Eigen::VectorXd& x, const FilterCoefficients& c) {
    return sos_filter_zi(x, c, false);
}

Eigen::VectorXd filter_zero_phase(const Eigen::VectorXd& x, const FilterCoefficients& c) {
    const int pad = pad_length(c);
    const Eigen::Index n = x.size();
    if (n <= pad) {
        throw Error(ErrorCode::SignalTooShort,
                    "zero-phase filtering needs more than " + std::to_string(pad) + " samples, got " +
                        std::to_string(n));
    }

    // Odd reflection about both endpoints.
    Eigen::VectorXd ext(n + 2 * pad);
    for (int i = 0; i < pad; ++i) {
        ext(i) = 2.0 * x(0) - x(pad - i);
        ext(n + pad + i) = 2.0 * x(n - 1) - x(n - 2 - i);
    }
    ext.segment(pad, n) = x;

    Eigen::VectorXd fwd = sos_filter_zi(ext, c, true);
    fwd.reverseInPlace();
    Eigen::VectorXd bwd = sos_filter_zi(fwd, c, true);
    bwd.reverseInPlace();

    return bwd.segment(pad, n);
}

Psd welch_psd(const Eigen::VectorXd& x, double fs, double segment_s, double overlap_fraction) {
    if (fs <= 0.0) throw Error(ErrorCode::InvalidArgument, "welch_psd: fs must be positive");
    if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) {
        throw Error(ErrorCode::InvalidArgument, "welch_psd: overlap must lie in [0, 1)");
    }
    const Eigen::Index seg = static_cast<Eigen::Index>(std::llround(segment_s * fs));
    if (seg < 2) throw Error(ErrorCode::InvalidArgument, "welch_psd: segment shorter than 2 samples");
    if (seg > x.size()) {
        throw Error(ErrorCode::SegmentTooLong, "welch_psd: segment of " + std::to_string(seg) +
                                                   " samples exceeds signal of " +
                                                   std::to_string(x.size()));
    }

    // Periodic Hann window.
    Eigen::VectorXd window(seg);
    for (Eigen::Index i = 0; i < seg; ++i) {
        window(i) = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(seg)));
    }
    const double win_sumsq = window.squaredNorm();

    const Eigen::Index hop = seg - static_cast<Eigen::Index>(std::floor(double(seg) * overlap_fraction));
    const Eigen::Index n_seg = 1 + (x.size() - seg) / hop;

    const Eigen::Index n_bins = seg / 2 + 1;
    Eigen::VectorXd accum = Eigen::VectorXd::Zero(n_bins);

    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<std::size_t>(seg));
    std::vector<std::complex<double>> spec;
    for (Eigen::Index s = 0; s < n_seg; ++s) {
        const Eigen::VectorXd chunk = x.segment(s * hop, seg);
        const double mean = chunk.mean();
        for (Eigen::Index i = 0; i < seg; ++i) {
            buf[static_cast<std::size_t>(i)] = (chunk(i) - mean) * window(i);
        }
        fft.fwd(spec, buf);
        for (Eigen::Index k = 0; k < n_bins; ++k) {
            accum(k) += std::norm(spec[static_cast<std::size_t>(k)]);
        }
    }

    // One-sided density scaling; interior bins doubled.
    const double scale = 1.0 / (fs * win_sumsq * double(n_seg));
    Psd out;
    out.freqs_hz.resize(n_bins);
    out.power.resize(n_bins);
    const bool even = (seg % 2) == 0;
    for (Eigen::Index k = 0; k < n_bins; ++k) {
        out.freqs_hz(k) = double(k) * fs / double(seg);
        double p = accum(k) * scale;
        const bool interior = k != 0 && !(even && k == n_bins - 1);
        if (interior) p *= 2.0;
        out.power(k) = p;
    }
    return out;
}

double band_power(const Psd& p, BandSpec band) {
    if (!(band.low_hz < band.high_hz)) {
        throw Error(ErrorCode::InvalidBand, "band_power: low must be below high");
    }
    const Eigen::Index n = p.freqs_hz.size();
    if (n < 2) throw Error(ErrorCode::EmptyBand, "band_power: PSD grid too small");

    // Any grid point inside the closed band?
    bool any_inside = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (p.freqs_hz(i) >= band.low_hz && p.freqs_hz(i) <= band.high_hz) {
            any_inside = true;
            break;
        }
    }
    if (!any_inside || band.high_hz <= p.freqs_hz(0) || band.low_hz >= p.freqs_hz(n - 1)) {
        throw Error(ErrorCode::EmptyBand, "band_power: no PSD grid point in band");
    }

    const double lo = std::max(band.low_hz, p.freqs_hz(0));
    const double hi = std::min(band.high_hz, p.freqs_hz(n - 1));

    auto interp = [&](double f) {
        Eigen::Index i = 0;
        while (i + 2 < n && p.freqs_hz(i + 1) <= f) ++i;
        const double f0 = p.freqs_hz(i), f1 = p.freqs_hz(i + 1);
        const double t = (f - f0) / (f1 - f0);
        return (1.0 - t) * p.power(i) + t * p.power(i + 1);
    };

    // Trapezoid over interior grid points plus interpolated band edges.
    double total = 0.0;
    double prev_f = lo;
    double prev_p = interp(lo);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double f = p.freqs_hz(i);
        if (f <= lo || f >= hi) continue;
        total += 0.5 * (prev_p + p.power(i)) * (f - prev_f);
        prev_f = f;
        prev_p = p.power(i);
    }
    total += 0.5 * (prev_p + interp(hi)) * (hi - prev_f);
    return total;
}

}  // namespace mibci

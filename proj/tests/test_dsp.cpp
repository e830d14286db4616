#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mibci/dsp.hpp"
#include "oracles.hpp"

using namespace mibci;

namespace {

Eigen::VectorXd sinusoid(double freq, double fs, int n, double amplitude = 1.0) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
        x(i) = amplitude * std::sin(2.0 * std::numbers::pi * freq * i / fs);
    }
    return x;
}

}  // namespace

TEST_SUITE("dsp.design") {
    TEST_CASE("wideband design is flat at the geometric center and blocks DC") {
        const auto c = design_butterworth_bandpass(4, {2.0, 60.0}, 250.0);
        const double center = std::sqrt(2.0 * 60.0);
        const double mag = oracle::magnitude_at_hz(c, center, 250.0);
        CHECK(20.0 * std::log10(mag) > -1.0);
        CHECK(20.0 * std::log10(mag) < 1.0);
        CHECK(oracle::magnitude_at_hz(c, 1e-9, 250.0) < 1e-3);
    }

    TEST_CASE("invalid band and unsupported order are rejected") {
        CHECK_THROWS_AS(design_butterworth_bandpass(4, {60.0, 2.0}, 250.0), Error);
        CHECK_THROWS_AS(design_butterworth_bandpass(4, {2.0, 130.0}, 250.0), Error);
        CHECK_THROWS_AS(design_butterworth_bandpass(5, {2.0, 60.0}, 250.0), Error);
        CHECK_THROWS_AS(design_butterworth_bandpass(0, {2.0, 60.0}, 250.0), Error);
    }

    TEST_CASE("alpha band keeps 11 Hz above both shoulders") {
        const auto c = design_butterworth_bandpass(4, {8.0, 14.0}, 250.0);
        const double in_band = oracle::magnitude_at_hz(c, 11.0, 250.0);
        CHECK(in_band >= oracle::magnitude_at_hz(c, 16.0, 250.0));
        CHECK(in_band >= oracle::magnitude_at_hz(c, 6.0, 250.0));
    }

    TEST_CASE("all sections are stable across supported orders and bands") {
        const std::vector<BandSpec> bands = {{2.0, 60.0}, {8.0, 14.0}, {14.0, 30.0}, {1.0, 100.0}};
        for (int order : {2, 4, 6, 8}) {
            for (const auto& band : bands) {
                for (double fs : {250.0, 160.0}) {
                    if (!(band.high_hz < fs / 2.0)) continue;
                    const auto c = design_butterworth_bandpass(order, band, fs);
                    CHECK(c.sections.size() == static_cast<std::size_t>(order));
                    CHECK(std::isfinite(c.gain));
                    CHECK(c.gain != 0.0);
                    for (const auto& s : c.sections) {
                        // Poles of z^2 + a1 z + a2 lie inside the unit circle iff
                        // |a2| < 1 and |a1| < 1 + a2.
                        CHECK(std::abs(s.a2) < 1.0);
                        CHECK(std::abs(s.a1) < 1.0 + s.a2);
                    }
                }
            }
        }
    }

    TEST_CASE("stopband magnitude decays monotonically away from the passband") {
        const auto c = design_butterworth_bandpass(4, {8.0, 14.0}, 250.0);
        double prev = oracle::magnitude_at_hz(c, 6.0, 250.0);
        for (double f = 5.5; f >= 0.5; f -= 0.5) {
            const double mag = oracle::magnitude_at_hz(c, f, 250.0);
            CHECK(mag <= prev + 1e-12);
            prev = mag;
        }
        prev = oracle::magnitude_at_hz(c, 17.0, 250.0);
        for (double f = 18.0; f <= 124.0; f += 1.0) {
            const double mag = oracle::magnitude_at_hz(c, f, 250.0);
            CHECK(mag <= prev + 1e-12);
            prev = mag;
        }
    }
}

TEST_SUITE("dsp.zero_phase") {
    TEST_CASE("a constant is rejected by the bandpass") {
        const auto c = design_butterworth_bandpass(4, {2.0, 60.0}, 250.0);
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(1000, 5.0);
        const Eigen::VectorXd y = filter_zero_phase(x, c);
        CHECK(y.size() == x.size());
        CHECK(y.segment(100, 800).cwiseAbs().maxCoeff() < 0.05);
    }

    TEST_CASE("in-band sinusoid keeps zero lag") {
        const auto c = design_butterworth_bandpass(4, {2.0, 60.0}, 250.0);
        const Eigen::VectorXd x = sinusoid(10.0, 250.0, 1000);
        const Eigen::VectorXd y = filter_zero_phase(x, c);
        CHECK(oracle::xcorr_peak_lag(x, y, 20) == 0);
        // Squared passband magnitude keeps the amplitude near unity.
        CHECK(y.segment(200, 600).cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(0.05));
    }

    TEST_CASE("too-short input throws") {
        const auto c = design_butterworth_bandpass(4, {2.0, 60.0}, 250.0);
        Eigen::VectorXd x(2);
        x << 1.0, 2.0;
        CHECK_THROWS_AS(filter_zero_phase(x, c), Error);
    }

    TEST_CASE("filtering is linear") {
        const auto c = design_butterworth_bandpass(4, {2.0, 60.0}, 250.0);
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss;
        Eigen::VectorXd x(600), y(600);
        for (int i = 0; i < 600; ++i) {
            x(i) = gauss(rng);
            y(i) = gauss(rng);
        }
        const double alpha = 1.7, beta = -0.4;
        const Eigen::VectorXd combined = filter_zero_phase(alpha * x + beta * y, c);
        const Eigen::VectorXd separate =
            alpha * filter_zero_phase(x, c) + beta * filter_zero_phase(y, c);
        const double rel = (combined - separate).norm() / separate.norm();
        CHECK(rel < 1e-9);
    }
}

TEST_SUITE("dsp.welch") {
    TEST_CASE("sinusoid peaks at the nearest grid frequency") {
        const Eigen::VectorXd x = sinusoid(10.0, 250.0, 1000);
        const Psd p = welch_psd(x, 250.0, 1.0, 0.5);
        Eigen::Index argmax;
        p.power.maxCoeff(&argmax);
        CHECK(p.freqs_hz(argmax) == doctest::Approx(10.0));
    }

    TEST_CASE("zero signal gives zero power") {
        const Psd p = welch_psd(Eigen::VectorXd::Zero(500), 250.0, 1.0, 0.5);
        CHECK(p.power.cwiseAbs().maxCoeff() == 0.0);
        CHECK(p.freqs_hz(0) == 0.0);
        CHECK(p.freqs_hz(p.freqs_hz.size() - 1) == doctest::Approx(125.0));
    }

    TEST_CASE("integrated density matches white-noise variance") {
        double total = 0.0;
        const int n_seeds = 100;
        for (int seed = 0; seed < n_seeds; ++seed) {
            std::mt19937_64 rng(static_cast<std::uint64_t>(seed) + 1);
            std::normal_distribution<double> gauss;
            Eigen::VectorXd x(1000);
            for (int i = 0; i < 1000; ++i) x(i) = gauss(rng);
            const Psd p = welch_psd(x, 250.0, 1.0, 0.5);
            const double df = p.freqs_hz(1) - p.freqs_hz(0);
            total += p.power.sum() * df;
        }
        CHECK(total / n_seeds == doctest::Approx(1.0).epsilon(0.2));
    }

    TEST_CASE("segment longer than the signal throws") {
        CHECK_THROWS_AS(welch_psd(Eigen::VectorXd::Zero(100), 250.0, 1.0, 0.5), Error);
    }
}

TEST_SUITE("dsp.band_power") {
    TEST_CASE("sinusoid energy concentrates in its band") {
        const Eigen::VectorXd x = sinusoid(10.0, 250.0, 1000);
        const Psd p = welch_psd(x, 250.0, 1.0, 0.5);
        const double alpha = band_power(p, {8.0, 14.0});
        const double beta = band_power(p, {20.0, 30.0});
        CHECK(alpha >= 10.0 * beta);
    }

    TEST_CASE("zero power integrates to zero") {
        const Psd p = welch_psd(Eigen::VectorXd::Zero(500), 250.0, 1.0, 0.5);
        CHECK(band_power(p, {8.0, 14.0}) == 0.0);
    }

    TEST_CASE("band outside the grid throws") {
        const Psd p = welch_psd(Eigen::VectorXd::Zero(500), 250.0, 1.0, 0.5);
        CHECK_THROWS_AS(band_power(p, {130.0, 140.0}), Error);
    }

    TEST_CASE("integral is additive at a grid point") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> gauss;
        Eigen::VectorXd x(1250);
        for (int i = 0; i < 1250; ++i) x(i) = gauss(rng);
        const Psd p = welch_psd(x, 250.0, 1.0, 0.5);
        const double whole = band_power(p, {8.0, 30.0});
        const double left = band_power(p, {8.0, 14.0});
        const double right = band_power(p, {14.0, 30.0});
        CHECK(std::abs(whole - (left + right)) < 1e-9 * std::max(1.0, whole));
    }
}

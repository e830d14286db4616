#include <doctest.h>

#include "mibci/kernels.hpp"
#include "synth_helpers.hpp"

using namespace mibci;

// The OpenMP kernels compute every item independently, so they must agree
// bit-for-bit with the serial references regardless of thread count.
TEST_SUITE("kernels.parallel_matches_serial") {
    TEST_CASE("trial filtering") {
        const TrialSet ts = fixtures::subject_trials(0, 6, 3);
        const auto coeffs = design_butterworth_bandpass(4, {2.0, 60.0}, ts.fs);
        const TrialSet parallel = kernels::filter_trials(ts, coeffs);
        const TrialSet serial = kernels::filter_trials_serial(ts, coeffs);
        REQUIRE(parallel.size() == serial.size());
        for (std::size_t i = 0; i < parallel.size(); ++i) {
            CHECK(parallel.trials[i].data == serial.trials[i].data);
        }
    }

    TEST_CASE("feature extraction") {
        const TrialSet ts = fixtures::subject_trials(1, 6, 4);
        kernels::FeatureExtractor fx;
        fx.layout = SubbandLayout::default_layout();
        const FeatureMatrix parallel = kernels::extract_features(ts, fx);
        const FeatureMatrix serial = kernels::extract_features_serial(ts, fx);
        CHECK(parallel.X == serial.X);
        CHECK(parallel.y == serial.y);
        CHECK(parallel.feature_names == serial.feature_names);
        CHECK(parallel.X.cols() == 16);
    }

    TEST_CASE("batch prediction") {
        Eigen::MatrixXd X(40, 2);
        Eigen::VectorXi y(40);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gauss;
        for (int i = 0; i < 40; ++i) {
            X(i, 0) = gauss(rng) + (i % 2 ? 1.0 : -1.0);
            X(i, 1) = gauss(rng);
            y(i) = i % 2;
        }
        const ClassifierModel model = fit_classifier(ClassifierKind::Ensemble, X, y, {});
        CHECK(kernels::predict_batch(model, X) == predict_batch_serial(model, X));
    }

    TEST_CASE("recording-wide filtering") {
        const Recording rec = synthesize_recording(fixtures::subject_spec(0, 4), 9);
        const auto coeffs = design_butterworth_bandpass(4, {2.0, 60.0}, rec.fs);
        const Eigen::MatrixXd parallel = kernels::filter_recording_samples(rec.samples, coeffs);
        Eigen::MatrixXd serial(rec.samples.rows(), rec.samples.cols());
        for (Eigen::Index c = 0; c < rec.samples.cols(); ++c) {
            serial.col(c) = filter_zero_phase(rec.samples.col(c), coeffs);
        }
        CHECK(parallel == serial);
    }

    TEST_CASE("errors inside the parallel region surface as exceptions") {
        TrialSet ts = fixtures::subject_trials(0, 3, 6);
        for (auto& t : ts.trials) t.data.conservativeResize(10, Eigen::NoChange);
        const auto coeffs = design_butterworth_bandpass(4, {2.0, 60.0}, ts.fs);
        CHECK_THROWS_AS(kernels::filter_trials(ts, coeffs), Error);
    }
}

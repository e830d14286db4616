#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mibci/features.hpp"
#include "mibci/error.hpp"

using namespace mibci;

namespace {

const std::vector<ChannelInfo> kTwoChannels = {{"C3", ChannelKind::Eeg, 0},
                                               {"C4", ChannelKind::Eeg, 1}};

Eigen::MatrixXd burst_trial(int n, double freq, int channel, double amplitude) {
    Eigen::MatrixXd data = Eigen::MatrixXd::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
        data(i, channel) = amplitude * std::sin(2.0 * std::numbers::pi * freq * i / 250.0);
    }
    return data;
}

Eigen::MatrixXd noise_matrix(int rows, int cols, std::uint64_t seed, double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = gauss(rng);
    }
    return m;
}

}  // namespace

TEST_SUITE("features.log_subband_power") {
    TEST_CASE("default layout spans 2 channels x 8 sub-bands") {
        const SubbandLayout layout = SubbandLayout::default_layout();
        CHECK(layout.dimension() == 16);
        const auto names = layout.feature_names();
        REQUIRE(names.size() == 16);
        CHECK(names.front() == "C3.alpha1");
        CHECK(names[7] == "C3.beta4");
        CHECK(names[8] == "C4.alpha1");
        CHECK(names.back() == "C4.beta4");
        CHECK(layout.bands.front().low_hz == 8.0);
        CHECK(layout.bands[3].high_hz == 14.0);
        CHECK(layout.bands.back().high_hz == 30.0);

        const Eigen::VectorXd f =
            log_subband_power(Eigen::MatrixXd::Zero(500, 2), kTwoChannels, layout, 250.0);
        CHECK(f.size() == 16);
    }

    TEST_CASE("silent trial hits the epsilon floor everywhere") {
        const Eigen::VectorXd f = log_subband_power(Eigen::MatrixXd::Zero(500, 2), kTwoChannels,
                                                    SubbandLayout::default_layout(), 250.0);
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            CHECK(f(i) == doctest::Approx(std::log(1e-12)));
        }
    }

    TEST_CASE("a 10 Hz burst on C3 dominates its covering sub-band") {
        const SubbandLayout layout = SubbandLayout::default_layout();
        const Eigen::VectorXd f =
            log_subband_power(burst_trial(750, 10.0, 0, 5.0), kTwoChannels, layout, 250.0);
        // C3 entries are 0..7; [9.5, 11) is index 2.
        Eigen::Index argmax_c3 = 0;
        f.head(8).maxCoeff(&argmax_c3);
        CHECK(argmax_c3 == 2);
        CHECK(f(2) > f(8 + 2));
    }

    TEST_CASE("DC offsets do not move features") {
        const SubbandLayout layout = SubbandLayout::default_layout();
        const Eigen::MatrixXd base = noise_matrix(750, 2, 77);
        const Eigen::VectorXd f0 = log_subband_power(base, kTwoChannels, layout, 250.0);
        const Eigen::VectorXd f1 =
            log_subband_power(base.array() + 40.0, kTwoChannels, layout, 250.0);
        CHECK((f1 - f0).cwiseAbs().maxCoeff() < 1e-6);
    }

    TEST_CASE("scaling the trial adds 2 ln c to every feature") {
        const SubbandLayout layout = SubbandLayout::default_layout();
        const Eigen::MatrixXd base = noise_matrix(750, 2, 78);
        const double c = 3.0;
        const Eigen::VectorXd f0 = log_subband_power(base, kTwoChannels, layout, 250.0);
        const Eigen::VectorXd f1 = log_subband_power(c * base, kTwoChannels, layout, 250.0);
        CHECK((f1 - f0 - Eigen::VectorXd::Constant(16, 2.0 * std::log(c))).cwiseAbs().maxCoeff() <
              1e-6);
    }

    TEST_CASE("missing channel and short trial throw") {
        const SubbandLayout layout = SubbandLayout::default_layout();
        const std::vector<ChannelInfo> odd = {{"Cz", ChannelKind::Eeg, 0},
                                              {"C4", ChannelKind::Eeg, 1}};
        CHECK_THROWS_AS(log_subband_power(Eigen::MatrixXd::Zero(500, 2), odd, layout, 250.0),
                        Error);
        CHECK_THROWS_AS(log_subband_power(Eigen::MatrixXd::Zero(100, 2), kTwoChannels, layout, 250.0),
                        Error);
    }
}

TEST_SUITE("features.csp") {
    namespace {
    TrialSet variance_contrast_set(int per_class, std::uint64_t seed) {
        TrialSet ts;
        ts.fs = 250.0;
        ts.channels = kTwoChannels;
        for (int i = 0; i < per_class; ++i) {
            Trial t0;
            t0.label = 0;
            t0.data = noise_matrix(300, 2, seed + 2 * static_cast<std::uint64_t>(i));
            t0.data.col(0) *= 3.0;  // class 0 concentrates variance on C3
            ts.trials.push_back(std::move(t0));
            Trial t1;
            t1.label = 1;
            t1.data = noise_matrix(300, 2, seed + 2 * static_cast<std::uint64_t>(i) + 1);
            t1.data.col(1) *= 3.0;
            ts.trials.push_back(std::move(t1));
        }
        return ts;
    }
    }  // namespace

    TEST_CASE("top filter separates variance-contrasted classes") {
        const TrialSet ts = variance_contrast_set(30, 900);
        const CspModel model = fit_csp(ts, 2, {"C3", "C4"});
        CHECK(model.filters.rows() == 2);
        CHECK(model.filters.cols() == 2);
        for (Eigen::Index i = 0; i < model.eigvals.size(); ++i) {
            CHECK(model.eigvals(i) > 0.0);
            CHECK(model.eigvals(i) < 1.0);
        }

        // Projected variance ratio between classes for the first filter.
        double var0 = 0.0, var1 = 0.0;
        int n0 = 0, n1 = 0;
        for (const auto& t : ts.trials) {
            const Eigen::VectorXd proj = t.data * model.filters.row(0).transpose();
            const double v = (proj.array() - proj.mean()).square().mean();
            if (t.label == 0) {
                var0 += v;
                ++n0;
            } else {
                var1 += v;
                ++n1;
            }
        }
        var0 /= n0;
        var1 /= n1;
        const double ratio = std::max(var0, var1) / std::min(var0, var1);
        CHECK(ratio >= 4.0);
    }

    TEST_CASE("filters jointly diagonalize the class covariances") {
        const TrialSet ts = variance_contrast_set(30, 901);
        const CspModel model = fit_csp(ts, 2, {"C3", "C4"});

        // Recompute the trace-normalized average covariances independently.
        Eigen::MatrixXd sigma[2] = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
        int counts[2] = {0, 0};
        for (const auto& t : ts.trials) {
            Eigen::MatrixXd X = t.data;
            X.rowwise() -= X.colwise().mean();
            Eigen::MatrixXd cov = X.transpose() * X;
            sigma[t.label] += cov / cov.trace();
            ++counts[t.label];
        }
        sigma[0] /= counts[0];
        sigma[1] /= counts[1];
        const Eigen::MatrixXd total =
            model.filters * (sigma[0] + sigma[1]) * model.filters.transpose();
        CHECK((total - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
    }

    TEST_CASE("single class is rejected") {
        TrialSet ts = variance_contrast_set(5, 902);
        for (auto& t : ts.trials) t.label = 0;
        CHECK_THROWS_AS(fit_csp(ts, 2, {"C3", "C4"}), Error);
    }

    TEST_CASE("apply: identity filters on unit noise give near-zero log variance") {
        CspModel ident;
        ident.filters = Eigen::MatrixXd::Identity(2, 2);
        ident.eigvals = Eigen::VectorXd::Constant(2, 0.5);
        ident.channels = {"C3", "C4"};
        const Eigen::VectorXd f = apply_csp(ident, noise_matrix(2000, 2, 55), kTwoChannels);
        CHECK(std::abs(f(0)) < 0.2);
        CHECK(std::abs(f(1)) < 0.2);
    }

    TEST_CASE("apply: scaling a trial by 2 adds ln 4 exactly") {
        CspModel ident;
        ident.filters = Eigen::MatrixXd::Identity(2, 2);
        ident.eigvals = Eigen::VectorXd::Constant(2, 0.5);
        ident.channels = {"C3", "C4"};
        const Eigen::MatrixXd base = noise_matrix(500, 2, 56);
        const Eigen::VectorXd f0 = apply_csp(ident, base, kTwoChannels);
        const Eigen::VectorXd f1 = apply_csp(ident, 2.0 * base, kTwoChannels);
        CHECK((f1 - f0 - Eigen::VectorXd::Constant(2, std::log(4.0))).cwiseAbs().maxCoeff() < 1e-9);
    }

    TEST_CASE("apply: wrong layout throws ShapeMismatch") {
        CspModel ident;
        ident.filters = Eigen::MatrixXd::Identity(2, 2);
        ident.eigvals = Eigen::VectorXd::Constant(2, 0.5);
        ident.channels = {"C3", "C4"};
        const std::vector<ChannelInfo> other = {{"Cz", ChannelKind::Eeg, 0}};
        try {
            apply_csp(ident, Eigen::MatrixXd::Zero(100, 1), other);
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
}

TEST_SUITE("features.standardizer") {
    TEST_CASE("self-application yields zero mean, unit std") {
        const Eigen::MatrixXd X = noise_matrix(200, 5, 61, 3.0).array() + 7.0;
        const Standardizer s = fit_standardizer(X);
        const Eigen::MatrixXd Z = apply_standardizer(s, X);
        for (int c = 0; c < 5; ++c) {
            CHECK(std::abs(Z.col(c).mean()) < 1e-9);
            const double var = (Z.col(c).array() - Z.col(c).mean()).square().mean();
            CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    TEST_CASE("constant column collapses to zero through the floor") {
        Eigen::MatrixXd X = noise_matrix(50, 2, 62);
        X.col(1).setConstant(4.2);
        const Standardizer s = fit_standardizer(X);
        const Eigen::MatrixXd Z = apply_standardizer(s, X);
        CHECK(Z.col(1).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("held-out shift is preserved, not re-fit") {
        const Eigen::MatrixXd train = noise_matrix(300, 3, 63);
        const Standardizer s = fit_standardizer(train);
        const Eigen::MatrixXd shifted = noise_matrix(300, 3, 64).array() + 2.0;
        const Eigen::MatrixXd Z = apply_standardizer(s, shifted);
        for (int c = 0; c < 3; ++c) {
            const double expected = (shifted.col(c).mean() - s.mean(c)) / s.std(c);
            CHECK(Z.col(c).mean() == doctest::Approx(expected).epsilon(1e-9));
            CHECK(std::abs(Z.col(c).mean()) > 0.5);  // shift visible after transform
        }
    }

    TEST_CASE("one row is TooFewRows") {
        CHECK_THROWS_AS(fit_standardizer(Eigen::MatrixXd::Zero(1, 4)), Error);
    }
}

TEST_SUITE("features.pca") {
    TEST_CASE("axis-aligned variance recovers the axis") {
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(50, 3);
        std::mt19937_64 rng(71);
        std::normal_distribution<double> gauss;
        for (int i = 0; i < 50; ++i) X(i, 0) = gauss(rng);
        const PcaModel model = fit_pca(X, 1);
        CHECK(std::abs(model.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(model.components(0, 1)) < 1e-8);
        CHECK(std::abs(model.components(0, 2)) < 1e-8);
    }

    TEST_CASE("full-rank projection reconstructs the data") {
        const Eigen::MatrixXd X = noise_matrix(40, 4, 72);
        const PcaModel model = fit_pca(X, 4);
        const Eigen::MatrixXd P = pca_project(model, X);
        const Eigen::MatrixXd back =
            (P * model.components).rowwise() + model.mean.transpose();
        CHECK((back - X).cwiseAbs().maxCoeff() < 1e-8);
    }

    TEST_CASE("components are orthonormal and variances descend") {
        const Eigen::MatrixXd X = noise_matrix(100, 6, 73);
        const PcaModel model = fit_pca(X, 4);
        const Eigen::MatrixXd gram = model.components * model.components.transpose();
        CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
        for (int i = 1; i < 4; ++i) {
            CHECK(model.explained_variance(i) <= model.explained_variance(i - 1) + 1e-12);
        }
        CHECK_FALSE(model.rank_deficient);
    }

    TEST_CASE("projections decorrelate and capture the total variance at full rank") {
        const Eigen::MatrixXd X = noise_matrix(120, 5, 74);
        const PcaModel model = fit_pca(X, 5);
        const Eigen::MatrixXd P = pca_project(model, X);
        const Eigen::MatrixXd centered = P.rowwise() - P.colwise().mean();
        const Eigen::MatrixXd cov = centered.transpose() * centered / double(P.rows() - 1);
        for (int r = 0; r < 5; ++r) {
            for (int c = 0; c < 5; ++c) {
                if (r != c) CHECK(std::abs(cov(r, c)) < 1e-8);
            }
        }
        const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
        const double total = (Xc.transpose() * Xc / double(X.rows() - 1)).trace();
        CHECK(model.explained_variance.sum() == doctest::Approx(total).epsilon(1e-8));
    }

    TEST_CASE("rank deficiency is flagged, excess k rejected") {
        Eigen::MatrixXd X(10, 4);
        std::mt19937_64 rng(75);
        std::normal_distribution<double> gauss;
        for (int i = 0; i < 10; ++i) {
            X(i, 0) = gauss(rng);
            X(i, 1) = 2.0 * X(i, 0);
            X(i, 2) = -X(i, 0);
            X(i, 3) = 0.5 * X(i, 0);
        }
        const PcaModel model = fit_pca(X, 2);  // numeric rank is 1
        CHECK(model.rank_deficient);
        CHECK_THROWS_AS(fit_pca(X, 5), Error);
    }
}

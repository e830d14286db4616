#include <doctest.h>

#include <cmath>
#include <random>

#include "mibci/classifiers.hpp"
#include "oracles.hpp"

using namespace mibci;

namespace {

// Two separable clusters on a line: class 0 near -2, class 1 near +2.
void separable_1d(int per_class, Eigen::MatrixXd& X, Eigen::VectorXi& y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.3);
    X.resize(2 * per_class, 1);
    y.resize(2 * per_class);
    for (int i = 0; i < per_class; ++i) {
        X(2 * i, 0) = -2.0 + gauss(rng);
        y(2 * i) = 0;
        X(2 * i + 1, 0) = 2.0 + gauss(rng);
        y(2 * i + 1) = 1;
    }
}

Eigen::MatrixXd gaussian_blob(int n, const Eigen::VectorXd& center, double sigma,
                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::MatrixXd X(n, center.size());
    for (int i = 0; i < n; ++i) {
        for (Eigen::Index d = 0; d < center.size(); ++d) X(i, d) = center(d) + gauss(rng);
    }
    return X;
}

}  // namespace

TEST_SUITE("classifiers.logreg") {
    TEST_CASE("zero parameters give probability exactly one half") {
        LogisticRegressionModel m;
        m.bias = 0.0;
        m.weights = Eigen::VectorXd::Zero(3);
        Eigen::VectorXd x(3);
        x << 0.7, -1.3, 4.0;
        CHECK(logreg_proba(m, x) == 0.5);
        CHECK(predict(ClassifierModel{m}, x) == 0);  // boundary tie resolves to 0
    }

    TEST_CASE("separable data is fit to full training accuracy") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(20, X, y, 31);
        const auto m = fit_logreg(X, y, {});
        CHECK(m.weights(0) > 0.0);
        const Eigen::VectorXi pred = predict_batch_serial(ClassifierModel{m}, X);
        CHECK((pred.array() == y.array()).all());
    }

    TEST_CASE("analytic gradient matches central differences") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 12, d = 4;
            Eigen::MatrixXd X(n, d);
            Eigen::VectorXi y(n);
            Eigen::VectorXd w(d);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) X(i, j) = gauss(rng);
                y(i) = (rng() & 1) ? 1 : 0;
            }
            for (int j = 0; j < d; ++j) w(j) = gauss(rng);
            const double bias = gauss(rng);
            const double l2 = 1e-3;

            double gb_exact;
            Eigen::VectorXd gw_exact;
            logreg_gradient(X, y, bias, w, l2, gb_exact, gw_exact);
            double gb_num;
            Eigen::VectorXd gw_num;
            oracle::numeric_logreg_gradient(X, y, bias, w, l2, 1e-5, gb_num, gw_num);

            const double scale = std::max(1.0, gw_num.cwiseAbs().maxCoeff());
            CHECK(std::abs(gb_exact - gb_num) / std::max(1.0, std::abs(gb_num)) < 1e-5);
            CHECK((gw_exact - gw_num).cwiseAbs().maxCoeff() / scale < 1e-5);
        }
    }

    TEST_CASE("loss is nonincreasing along the descent path") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(15, X, y, 32);
        LogRegParams p;
        p.epochs = 0;
        double prev = fit_logreg(X, y, p).final_loss;
        for (int epochs = 1; epochs <= 30; ++epochs) {
            p.epochs = epochs;
            const double loss = fit_logreg(X, y, p).final_loss;
            CHECK(loss <= prev + 1e-12);
            prev = loss;
        }
    }

    TEST_CASE("absurd learning rate reports divergence") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(15, X, y, 33);
        LogRegParams p;
        p.learning_rate = 1e12;
        p.epochs = 2000;
        CHECK_THROWS_AS(fit_logreg(X, y, p), Error);
    }
}

TEST_SUITE("classifiers.lda") {
    TEST_CASE("isotropic classes align the weight vector with the mean offset") {
        Eigen::VectorXd mu(3);
        mu << 1.0, -0.5, 2.0;
        const int n = 1000;
        Eigen::MatrixXd X(2 * n, 3);
        Eigen::VectorXi y(2 * n);
        X.topRows(n) = gaussian_blob(n, -mu, 1.0, 41);
        X.bottomRows(n) = gaussian_blob(n, mu, 1.0, 42);
        y.head(n).setZero();
        y.tail(n).setOnes();
        const LdaModel m = fit_lda(X, y, {});
        const double cosine = m.weights.dot(2.0 * mu) / (m.weights.norm() * (2.0 * mu).norm());
        CHECK(std::acos(std::min(1.0, cosine)) < 5.0 * std::numbers::pi / 180.0);
    }

    TEST_CASE("midpoint between projected means with equal priors goes to class 0") {
        Eigen::MatrixXd X(8, 1);
        Eigen::VectorXi y(8);
        for (int i = 0; i < 4; ++i) {
            X(i, 0) = -2.0 + 0.5 * i;  // mean -1.25
            y(i) = 0;
            X(4 + i, 0) = 2.0 - 0.5 * i;  // mean 1.25
            y(4 + i) = 1;
        }
        const LdaModel m = fit_lda(X, y, {});
        Eigen::VectorXd mid(1);
        mid << 0.0;
        CHECK(m.weights.dot(mid) == m.threshold);  // exactly on the boundary
        CHECK(predict(ClassifierModel{m}, mid) == 0);
    }

    TEST_CASE("single class throws") {
        Eigen::MatrixXd X = gaussian_blob(10, Eigen::VectorXd::Zero(2), 1.0, 43);
        Eigen::VectorXi y = Eigen::VectorXi::Zero(10);
        CHECK_THROWS_AS(fit_lda(X, y, {}), Error);
    }

    TEST_CASE("predictions survive a common invertible affine map") {
        Eigen::VectorXd mu(4);
        mu << 1.0, 0.2, -0.7, 0.4;
        const int n = 200;
        Eigen::MatrixXd X(2 * n, 4);
        Eigen::VectorXi y(2 * n);
        X.topRows(n) = gaussian_blob(n, -mu, 1.0, 44);
        X.bottomRows(n) = gaussian_blob(n, mu, 1.0, 45);
        y.head(n).setZero();
        y.tail(n).setOnes();
        const Eigen::MatrixXd Q = gaussian_blob(120, Eigen::VectorXd::Zero(4), 1.0, 46);

        std::mt19937_64 rng(47);
        std::normal_distribution<double> gauss;
        Eigen::MatrixXd A(4, 4);
        do {
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) A(r, c) = gauss(rng);
            }
        } while (std::abs(A.determinant()) < 0.3);
        Eigen::VectorXd shift(4);
        shift << 3.0, -1.0, 0.5, 2.0;

        const LdaModel base = fit_lda(X, y, {});
        const Eigen::MatrixXd Xm = (X * A.transpose()).rowwise() + shift.transpose();
        const LdaModel mapped = fit_lda(Xm, y, {});
        const Eigen::MatrixXd Qm = (Q * A.transpose()).rowwise() + shift.transpose();
        const Eigen::VectorXi p0 = predict_batch_serial(ClassifierModel{base}, Q);
        const Eigen::VectorXi p1 = predict_batch_serial(ClassifierModel{mapped}, Qm);
        CHECK(p0 == p1);
    }
}

TEST_SUITE("classifiers.gnb") {
    TEST_CASE("symmetric case gives an even posterior") {
        // Class 0 with exact mean 0, class 1 with exact mean 2, both unit
        // variance; x = 1 is equidistant.
        Eigen::MatrixXd X(8, 1);
        Eigen::VectorXi y(8);
        const double vals0[] = {-1.0, 1.0, -1.0, 1.0};
        for (int i = 0; i < 4; ++i) {
            X(i, 0) = vals0[i];
            y(i) = 0;
            X(4 + i, 0) = vals0[i] + 2.0;
            y(4 + i) = 1;
        }
        const GaussianNbModel m = fit_gnb(X, y, {});
        CHECK(m.mean0(0) == doctest::Approx(0.0));
        CHECK(m.mean1(0) == doctest::Approx(2.0));
        Eigen::VectorXd x(1);
        x << 1.0;
        const Eigen::Vector2d post = gnb_posterior(m, x);
        CHECK(post(0) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(post(1) == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(predict(ClassifierModel{m}, x) == 0);  // tie resolves to class 0
    }

    TEST_CASE("posteriors always sum to one") {
        Eigen::MatrixXd X(40, 3);
        Eigen::VectorXi y(40);
        std::mt19937_64 rng(51);
        std::normal_distribution<double> gauss;
        for (int i = 0; i < 40; ++i) {
            for (int d = 0; d < 3; ++d) X(i, d) = gauss(rng) + (i % 2 ? 1.5 : 0.0);
            y(i) = i % 2;
        }
        const GaussianNbModel m = fit_gnb(X, y, {});
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::VectorXd x(3);
            for (int d = 0; d < 3; ++d) x(d) = 10.0 * gauss(rng);
            const Eigen::Vector2d post = gnb_posterior(m, x);
            CHECK(std::abs(post.sum() - 1.0) < 1e-12);
            CHECK(post(0) >= 0.0);
            CHECK(post(1) >= 0.0);
        }
    }

    TEST_CASE("single class throws") {
        Eigen::MatrixXd X = gaussian_blob(10, Eigen::VectorXd::Zero(2), 1.0, 52);
        CHECK_THROWS_AS(fit_gnb(X, Eigen::VectorXi::Ones(10), {}), Error);
    }
}

TEST_SUITE("classifiers.knn") {
    TEST_CASE("an exact training point returns its own label at k=1") {
        Eigen::MatrixXd X(4, 2);
        X << 0, 0, 1, 0, 0, 1, 1, 1;
        Eigen::VectorXi y(4);
        y << 0, 1, 1, 0;
        const KnnModel m = fit_knn(X, y, {1});
        CHECK(predict(ClassifierModel{m}, X.row(1).transpose()) == 1);
        CHECK(predict(ClassifierModel{m}, X.row(3).transpose()) == 0);
    }

    TEST_CASE("majority of {1,1,0} is 1") {
        Eigen::MatrixXd X(3, 1);
        X << 0.1, -0.1, 0.3;
        Eigen::VectorXi y(3);
        y << 1, 1, 0;
        const KnnModel m = fit_knn(X, y, {3});
        Eigen::VectorXd q(1);
        q << 0.0;
        CHECK(predict(ClassifierModel{m}, q) == 1);
    }

    TEST_CASE("agrees with the exhaustive oracle on random queries") {
        std::mt19937_64 rng(61);
        std::normal_distribution<double> gauss;
        Eigen::MatrixXd X(200, 4);
        Eigen::VectorXi y(200);
        for (int i = 0; i < 200; ++i) {
            for (int d = 0; d < 4; ++d) X(i, d) = gauss(rng);
            y(i) = (rng() & 1) ? 1 : 0;
        }
        const KnnModel m = fit_knn(X, y, {5});
        for (int q = 0; q < 100; ++q) {
            Eigen::VectorXd query(4);
            for (int d = 0; d < 4; ++d) query(d) = gauss(rng);
            CHECK(predict(ClassifierModel{m}, query) == oracle::brute_knn(X, y, 5, query));
        }
    }

    TEST_CASE("labels are invariant under translation of the space") {
        std::mt19937_64 rng(62);
        std::normal_distribution<double> gauss;
        Eigen::MatrixXd X(60, 3);
        Eigen::VectorXi y(60);
        for (int i = 0; i < 60; ++i) {
            for (int d = 0; d < 3; ++d) X(i, d) = gauss(rng);
            y(i) = (rng() & 1) ? 1 : 0;
        }
        Eigen::VectorXd shift(3);
        shift << 5.0, -3.0, 8.0;
        const KnnModel base = fit_knn(X, y, {5});
        const KnnModel moved = fit_knn(X.rowwise() + shift.transpose(), y, {5});
        for (int q = 0; q < 40; ++q) {
            Eigen::VectorXd query(3);
            for (int d = 0; d < 3; ++d) query(d) = gauss(rng);
            CHECK(predict(ClassifierModel{base}, query) ==
                  predict(ClassifierModel{moved}, Eigen::VectorXd(query + shift)));
        }
    }

    TEST_CASE("even or oversized k is rejected") {
        Eigen::MatrixXd X(4, 1);
        X << 0, 1, 2, 3;
        Eigen::VectorXi y(4);
        y << 0, 1, 0, 1;
        CHECK_THROWS_AS(fit_knn(X, y, {4}), Error);
        CHECK_THROWS_AS(fit_knn(X, y, {5}), Error);
    }
}

TEST_SUITE("classifiers.svm") {
    TEST_CASE("separable data reaches full training accuracy") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(20, X, y, 71);
        const LinearSvmModel m = fit_svm(X, y, {});
        const Eigen::VectorXi pred = predict_batch_serial(ClassifierModel{m}, X);
        CHECK((pred.array() == y.array()).all());
    }

    TEST_CASE("degenerate single-label data predicts that label") {
        Eigen::MatrixXd X = gaussian_blob(20, Eigen::VectorXd::Zero(2), 1.0, 72);
        const Eigen::VectorXi ones = Eigen::VectorXi::Ones(20);
        const LinearSvmModel m = fit_svm(X, ones, {});
        for (int i = 0; i < 20; ++i) {
            CHECK(predict(ClassifierModel{m}, X.row(i).transpose()) == 1);
        }
        const Eigen::VectorXi zeros = Eigen::VectorXi::Zero(20);
        const LinearSvmModel m0 = fit_svm(X, zeros, {});
        for (int i = 0; i < 20; ++i) {
            CHECK(predict(ClassifierModel{m0}, X.row(i).transpose()) == 0);
        }
    }

    TEST_CASE("final objective never exceeds the value at zero") {
        std::mt19937_64 rng(73);
        std::normal_distribution<double> gauss;
        Eigen::MatrixXd X(50, 3);
        Eigen::VectorXi y(50);
        for (int i = 0; i < 50; ++i) {
            for (int d = 0; d < 3; ++d) X(i, d) = gauss(rng) + (i % 2 ? 0.5 : -0.5);
            y(i) = i % 2;
        }
        const LinearSvmModel m = fit_svm(X, y, {});
        CHECK(svm_objective(X, y, m.weights, m.bias, m.lambda) <= 1.0 + 1e-12);
    }
}

TEST_SUITE("classifiers.ensemble") {
    TEST_CASE("majority vote of constructed members") {
        // kNN says 1, LDA says 1, SVM says 0 for x = +0.4.
        Eigen::MatrixXd Xk(2, 1);
        Xk << 0.5, -0.5;
        Eigen::VectorXi yk(2);
        yk << 1, 0;
        EnsembleModel m;
        m.knn = fit_knn(Xk, yk, {1});
        m.lda.mean0 = Eigen::VectorXd::Constant(1, -1.0);
        m.lda.mean1 = Eigen::VectorXd::Constant(1, 1.0);
        m.lda.pooled_cov = Eigen::MatrixXd::Identity(1, 1);
        m.lda.weights = Eigen::VectorXd::Constant(1, 1.0);
        m.lda.threshold = 0.0;
        m.svm.weights = Eigen::VectorXd::Constant(1, -1.0);
        m.svm.bias = 0.0;

        Eigen::VectorXd x(1);
        x << 0.4;
        CHECK(predict(ClassifierModel{m.knn}, x) == 1);
        CHECK(predict(ClassifierModel{m.lda}, x) == 1);
        CHECK(predict(ClassifierModel{m.svm}, x) == 0);
        CHECK(predict(ClassifierModel{m}, x) == 1);

        // Unanimous zero on the other side.
        m.svm.weights = Eigen::VectorXd::Constant(1, 1.0);
        Eigen::VectorXd neg(1);
        neg << -0.4;
        CHECK(predict(ClassifierModel{m}, neg) == 0);
    }

    TEST_CASE("the vote always equals one of the member outputs") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(25, X, y, 81);
        const EnsembleModel m = fit_ensemble(X, y, {});
        std::mt19937_64 rng(82);
        std::normal_distribution<double> gauss(0.0, 3.0);
        for (int q = 0; q < 50; ++q) {
            Eigen::VectorXd x(1);
            x << gauss(rng);
            const int vote = predict(ClassifierModel{m}, x);
            const int a = predict(ClassifierModel{m.knn}, x);
            const int b = predict(ClassifierModel{m.lda}, x);
            const int c = predict(ClassifierModel{m.svm}, x);
            CHECK((vote == a || vote == b || vote == c));
            const int majority = (a + b + c) >= 2 ? 1 : 0;
            CHECK(vote == majority);
        }
    }

    TEST_CASE("ensemble accuracy on the separable set is recorded") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(25, X, y, 83);
        const EnsembleModel m = fit_ensemble(X, y, {});
        const Eigen::VectorXi pred = predict_batch_serial(ClassifierModel{m}, X);
        int correct = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) correct += pred(i) == y(i) ? 1 : 0;
        CHECK(double(correct) / double(y.size()) >= 0.95);
    }
}

TEST_SUITE("classifiers.serialization") {
    TEST_CASE("every kind round-trips with identical predictions") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(15, X, y, 91);
        const std::vector<std::string> names = {"f0"};
        std::mt19937_64 rng(92);
        std::normal_distribution<double> gauss(0.0, 2.5);

        for (auto kind : {ClassifierKind::LogReg, ClassifierKind::Lda, ClassifierKind::Gnb,
                          ClassifierKind::Knn, ClassifierKind::Svm, ClassifierKind::Ensemble}) {
            const ClassifierModel model = fit_classifier(kind, X, y, {});
            const std::string text = classifier_to_json(model, names);
            const ClassifierModel back = classifier_from_json(text, names);
            for (int q = 0; q < 25; ++q) {
                Eigen::VectorXd x(1);
                x << gauss(rng);
                CHECK(predict(model, x) == predict(back, x));
            }
        }
    }

    TEST_CASE("feature-name mismatch is refused") {
        Eigen::MatrixXd X;
        Eigen::VectorXi y;
        separable_1d(15, X, y, 93);
        const ClassifierModel model = fit_classifier(ClassifierKind::Lda, X, y, {});
        const std::string text = classifier_to_json(model, {"f0"});
        CHECK_THROWS_AS(classifier_from_json(text, {"other"}), Error);
    }
}

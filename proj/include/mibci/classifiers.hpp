#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mibci/types.hpp"

namespace mibci {

enum class ClassifierKind { LogReg, Lda, Gnb, Knn, Svm, Ensemble };

ClassifierKind classifier_kind_from_string(const std::string& s);
std::string classifier_kind_to_string(ClassifierKind kind);

struct LogRegParams {
    double learning_rate = 0.1;
    int epochs = 1000;
    double l2 = 1e-4;
};

struct LdaParams {
    double ridge_scale = 1e-6;  // ridge = ridge_scale * trace(cov) / d
};

struct GnbParams {
    double variance_floor = 1e-9;
};

struct KnnParams {
    int k = 5;  // odd
};

struct SvmParams {
    double lambda = 1e-2;
    int epochs = 2000;
};

struct Hyperparams {
    LogRegParams logreg;
    LdaParams lda;
    GnbParams gnb;
    KnnParams knn;
    SvmParams svm;
};

struct LogisticRegressionModel {
    double bias = 0.0;
    Eigen::VectorXd weights;
    double final_loss = 0.0;
};

struct LdaModel {
    Eigen::VectorXd mean0, mean1;
    Eigen::MatrixXd pooled_cov;  // after ridge
    Eigen::VectorXd weights;     // cov^-1 (mean1 - mean0)
    double threshold = 0.0;      // predict 1 iff w.x > threshold
};

struct GaussianNbModel {
    double prior0 = 0.5, prior1 = 0.5;
    Eigen::VectorXd mean0, mean1;
    Eigen::VectorXd var0, var1;  // floored
};

struct KnnModel {
    Eigen::MatrixXd train_X;
    Eigen::VectorXi train_y;
    int k = 5;
};

struct LinearSvmModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double lambda = 1e-2;
};

struct EnsembleModel;  // below, after the variant

using ClassifierModel = std::variant<LogisticRegressionModel, LdaModel, GaussianNbModel, KnnModel,
                                     LinearSvmModel, EnsembleModel>;

// Majority vote over kNN, LDA and linear SVM fitted on the same data. Three
// members, so a binary vote can never tie.
struct EnsembleModel {
    KnnModel knn;
    LdaModel lda;
    LinearSvmModel svm;
};

// --- fitting ---------------------------------------------------------------

// Full-batch gradient descent on the L2-regularized cross-entropy, zero
// initialization (deterministic; the seed parameter is accepted for interface
// uniformity). Throws NonFiniteLoss if the loss diverges.
LogisticRegressionModel fit_logreg(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                   const LogRegParams& p, std::uint64_t seed = 0);

LdaModel fit_lda(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const LdaParams& p);

GaussianNbModel fit_gnb(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const GnbParams& p);

KnnModel fit_knn(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const KnnParams& p);

// Primal sub-gradient descent on hinge loss + lambda/2 ||w||^2 with 1/(lambda t)
// steps, keeping the iterate with the lowest objective (which bounds the final
// objective by the value at w = 0).
LinearSvmModel fit_svm(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const SvmParams& p,
                       std::uint64_t seed = 0);

EnsembleModel fit_ensemble(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                           const Hyperparams& h, std::uint64_t seed = 0);

ClassifierModel fit_classifier(ClassifierKind kind, const Eigen::MatrixXd& X,
                               const Eigen::VectorXi& y, const Hyperparams& h,
                               std::uint64_t seed = 0);

// --- prediction ------------------------------------------------------------

// Ties on the decision boundary resolve to class 0.
int predict(const ClassifierModel& model, const Eigen::VectorXd& x);
Eigen::VectorXi predict_batch_serial(const ClassifierModel& model, const Eigen::MatrixXd& X);

double logreg_proba(const LogisticRegressionModel& m, const Eigen::VectorXd& x);
Eigen::Vector2d gnb_posterior(const GaussianNbModel& m, const Eigen::VectorXd& x);

// Loss/gradient of the logistic objective at arbitrary parameters, exposed so
// the analytic gradient can be checked against finite differences.
double logreg_loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double bias,
                   const Eigen::VectorXd& w, double l2);
void logreg_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double bias,
                     const Eigen::VectorXd& w, double l2, double& grad_bias,
                     Eigen::VectorXd& grad_w);

double svm_objective(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                     const Eigen::VectorXd& w, double bias, double lambda);

// --- serialization ----------------------------------------------------------

// JSON with an explicit kind tag, parameter arrays, and the feature names the
// model was trained against. Loading refuses mismatched feature names.
std::string classifier_to_json(const ClassifierModel& model,
                               const std::vector<std::string>& feature_names);
ClassifierModel classifier_from_json(const std::string& text,
                                     const std::vector<std::string>& expected_feature_names);

}  // namespace mibci

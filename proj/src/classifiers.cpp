#include "mibci/classifiers.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mibci/error.hpp"

namespace mibci {

namespace {

using nlohmann::json;

void check_binary_labels(const Eigen::VectorXi& y, Eigen::Index n) {
    if (y.size() != n) throw Error(ErrorCode::LengthMismatch, "label count differs from row count");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) != 0 && y(i) != 1) {
            throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
        }
    }
}

void require_both_classes(const Eigen::VectorXi& y, const char* who) {
    const int n1 = y.sum();
    if (n1 == 0 || n1 == y.size()) {
        throw Error(ErrorCode::SingleClass, std::string(who) + " needs both classes present");
    }
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v(i++) = x.get<double>();
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXi& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXi ivector_from_json(const json& j) {
    Eigen::VectorXi v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v(i++) = x.get<int>();
    return v;
}

json lda_to_json(const LdaModel& m) {
    return json{{"mean0", vector_to_json(m.mean0)},
                {"mean1", vector_to_json(m.mean1)},
                {"pooled_cov", matrix_to_json(m.pooled_cov)},
                {"weights", vector_to_json(m.weights)},
                {"threshold", m.threshold}};
}

LdaModel lda_from_json(const json& j) {
    LdaModel m;
    m.mean0 = vector_from_json(j.at("mean0"));
    m.mean1 = vector_from_json(j.at("mean1"));
    m.pooled_cov = matrix_from_json(j.at("pooled_cov"));
    m.weights = vector_from_json(j.at("weights"));
    m.threshold = j.at("threshold").get<double>();
    return m;
}

json knn_to_json(const KnnModel& m) {
    return json{{"train_X", matrix_to_json(m.train_X)},
                {"train_y", vector_to_json(m.train_y)},
                {"k", m.k}};
}

KnnModel knn_from_json(const json& j) {
    KnnModel m;
    m.train_X = matrix_from_json(j.at("train_X"));
    m.train_y = ivector_from_json(j.at("train_y"));
    m.k = j.at("k").get<int>();
    return m;
}

json svm_to_json(const LinearSvmModel& m) {
    return json{{"weights", vector_to_json(m.weights)}, {"bias", m.bias}, {"lambda", m.lambda}};
}

LinearSvmModel svm_from_json(const json& j) {
    LinearSvmModel m;
    m.weights = vector_from_json(j.at("weights"));
    m.bias = j.at("bias").get<double>();
    m.lambda = j.at("lambda").get<double>();
    return m;
}

}  // namespace

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "logreg") return ClassifierKind::LogReg;
    if (s == "lda") return ClassifierKind::Lda;
    if (s == "gnb") return ClassifierKind::Gnb;
    if (s == "knn") return ClassifierKind::Knn;
    if (s == "svm") return ClassifierKind::Svm;
    if (s == "ensemble") return ClassifierKind::Ensemble;
    throw Error(ErrorCode::ConfigError, "unknown classifier kind '" + s + "'");
}

std::string classifier_kind_to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::LogReg: return "logreg";
        case ClassifierKind::Lda: return "lda";
        case ClassifierKind::Gnb: return "gnb";
        case ClassifierKind::Knn: return "knn";
        case ClassifierKind::Svm: return "svm";
        case ClassifierKind::Ensemble: return "ensemble";
    }
    return "unknown";
}

double logreg_loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double bias,
                   const Eigen::VectorXd& w, double l2) {
    const Eigen::Index n = X.rows();
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = bias + X.row(i).dot(w);
        // log(1 + exp(-|a|)) form avoids overflow on extreme activations.
        const double log1pexp = std::log1p(std::exp(-std::abs(a))) + std::max(a, 0.0);
        loss += y(i) == 1 ? log1pexp - a : log1pexp;
    }
    return loss / double(n) + 0.5 * l2 * w.squaredNorm();
}

void logreg_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double bias,
                     const Eigen::VectorXd& w, double l2, double& grad_bias,
                     Eigen::VectorXd& grad_w) {
    const Eigen::Index n = X.rows();
    Eigen::VectorXd residual(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        residual(i) = sigmoid(bias + X.row(i).dot(w)) - double(y(i));
    }
    grad_bias = residual.mean();
    grad_w = X.transpose() * residual / double(n) + l2 * w;
}

LogisticRegressionModel fit_logreg(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                   const LogRegParams& p, std::uint64_t) {
    check_binary_labels(y, X.rows());
    LogisticRegressionModel model;
    model.weights = Eigen::VectorXd::Zero(X.cols());
    model.bias = 0.0;

    Eigen::VectorXd grad_w(X.cols());
    double grad_b = 0.0;
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
        logreg_gradient(X, y, model.bias, model.weights, p.l2, grad_b, grad_w);
        model.bias -= p.learning_rate * grad_b;
        model.weights -= p.learning_rate * grad_w;
        if (!model.weights.allFinite() || !std::isfinite(model.bias)) {
            throw Error(ErrorCode::NonFiniteLoss, "logistic regression diverged; lower the learning rate");
        }
    }
    model.final_loss = logreg_loss(X, y, model.bias, model.weights, p.l2);
    if (!std::isfinite(model.final_loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "logistic regression loss is not finite");
    }
    return model;
}

double logreg_proba(const LogisticRegressionModel& m, const Eigen::VectorXd& x) {
    return sigmoid(m.bias + m.weights.dot(x));
}

LdaModel fit_lda(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const LdaParams& p) {
    check_binary_labels(y, X.rows());
    require_both_classes(y, "LDA");
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    const int n1 = y.sum();
    const int n0 = static_cast<int>(n) - n1;
    if (n0 < 2 || n1 < 2) {
        throw Error(ErrorCode::SingleClass, "LDA needs at least 2 samples per class");
    }

    LdaModel m;
    m.mean0 = Eigen::VectorXd::Zero(d);
    m.mean1 = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        (y(i) == 1 ? m.mean1 : m.mean0) += X.row(i).transpose();
    }
    m.mean0 /= double(n0);
    m.mean1 /= double(n1);

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd dev = X.row(i).transpose() - (y(i) == 1 ? m.mean1 : m.mean0);
        scatter += dev * dev.transpose();
    }
    m.pooled_cov = scatter / double(n - 2);
    const double ridge = p.ridge_scale * m.pooled_cov.trace() / double(d);
    m.pooled_cov += ridge * Eigen::MatrixXd::Identity(d, d);

    Eigen::LDLT<Eigen::MatrixXd> solver(m.pooled_cov);
    if (solver.info() != Eigen::Success || !solver.isPositive()) {
        throw Error(ErrorCode::SingularCovariance, "pooled covariance is not positive definite");
    }
    m.weights = solver.solve(m.mean1 - m.mean0);
    // Midpoint between projected class means, shifted by the log prior ratio.
    m.threshold = 0.5 * m.weights.dot(m.mean0 + m.mean1) - std::log(double(n1) / double(n0));
    return m;
}

GaussianNbModel fit_gnb(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const GnbParams& p) {
    check_binary_labels(y, X.rows());
    require_both_classes(y, "Gaussian naive Bayes");
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    const int n1 = y.sum();
    const int n0 = static_cast<int>(n) - n1;

    GaussianNbModel m;
    m.prior0 = double(n0) / double(n);
    m.prior1 = double(n1) / double(n);
    m.mean0 = Eigen::VectorXd::Zero(d);
    m.mean1 = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        (y(i) == 1 ? m.mean1 : m.mean0) += X.row(i).transpose();
    }
    m.mean0 /= double(n0);
    m.mean1 /= double(n1);

    m.var0 = Eigen::VectorXd::Zero(d);
    m.var1 = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) == 1) {
            m.var1 += (X.row(i).transpose() - m.mean1).array().square().matrix();
        } else {
            m.var0 += (X.row(i).transpose() - m.mean0).array().square().matrix();
        }
    }
    m.var0 = (m.var0 / double(n0)).cwiseMax(p.variance_floor);
    m.var1 = (m.var1 / double(n1)).cwiseMax(p.variance_floor);
    return m;
}

Eigen::Vector2d gnb_posterior(const GaussianNbModel& m, const Eigen::VectorXd& x) {
    auto log_likelihood = [&](const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
        double ll = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double dev = x(i) - mean(i);
            ll += -0.5 * (std::log(2.0 * std::numbers::pi * var(i)) + dev * dev / var(i));
        }
        return ll;
    };
    const double l0 = std::log(m.prior0) + log_likelihood(m.mean0, m.var0);
    const double l1 = std::log(m.prior1) + log_likelihood(m.mean1, m.var1);
    const double top = std::max(l0, l1);
    const double z = std::exp(l0 - top) + std::exp(l1 - top);
    return {std::exp(l0 - top) / z, std::exp(l1 - top) / z};
}

KnnModel fit_knn(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const KnnParams& p) {
    check_binary_labels(y, X.rows());
    if (p.k <= 0 || p.k % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument, "kNN needs an odd positive k");
    }
    if (p.k > X.rows()) {
        throw Error(ErrorCode::InvalidArgument, "k exceeds the training set size");
    }
    return KnnModel{X, y, p.k};
}

namespace {

int knn_predict(const KnnModel& m, const Eigen::VectorXd& x) {
    const Eigen::Index n = m.train_X.rows();
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        dist[static_cast<std::size_t>(i)] = {(m.train_X.row(i).transpose() - x).squaredNorm(),
                                             static_cast<int>(i)};
    }
    // Distance ties break toward the lower training index.
    std::partial_sort(dist.begin(), dist.begin() + m.k, dist.end());
    int votes1 = 0;
    for (int i = 0; i < m.k; ++i) {
        votes1 += m.train_y(dist[static_cast<std::size_t>(i)].second);
    }
    return votes1 * 2 > m.k ? 1 : 0;
}

}  // namespace

double svm_objective(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                     const Eigen::VectorXd& w, double bias, double lambda) {
    const Eigen::Index n = X.rows();
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double yi = y(i) == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - yi * (X.row(i).dot(w) + bias));
    }
    return 0.5 * lambda * w.squaredNorm() + hinge / double(n);
}

LinearSvmModel fit_svm(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const SvmParams& p,
                       std::uint64_t) {
    check_binary_labels(y, X.rows());
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double bias = 0.0;
    LinearSvmModel best{w, bias, p.lambda};
    double best_obj = svm_objective(X, y, w, bias, p.lambda);

    for (int t = 1; t <= p.epochs; ++t) {
        const double step = 1.0 / (p.lambda * double(t));
        Eigen::VectorXd grad = p.lambda * w;
        double grad_b = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double yi = y(i) == 1 ? 1.0 : -1.0;
            if (yi * (X.row(i).dot(w) + bias) < 1.0) {
                grad -= yi / double(n) * X.row(i).transpose();
                grad_b -= yi / double(n);
            }
        }
        w -= step * grad;
        bias -= step * grad_b;
        if (!w.allFinite() || !std::isfinite(bias)) {
            throw Error(ErrorCode::NonFiniteLoss, "SVM training diverged");
        }
        const double obj = svm_objective(X, y, w, bias, p.lambda);
        if (obj < best_obj) {
            best_obj = obj;
            best.weights = w;
            best.bias = bias;
        }
    }
    return best;
}

EnsembleModel fit_ensemble(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                           const Hyperparams& h, std::uint64_t seed) {
    EnsembleModel m;
    m.knn = fit_knn(X, y, h.knn);
    m.lda = fit_lda(X, y, h.lda);
    m.svm = fit_svm(X, y, h.svm, seed);
    return m;
}

ClassifierModel fit_classifier(ClassifierKind kind, const Eigen::MatrixXd& X,
                               const Eigen::VectorXi& y, const Hyperparams& h,
                               std::uint64_t seed) {
    switch (kind) {
        case ClassifierKind::LogReg: return fit_logreg(X, y, h.logreg, seed);
        case ClassifierKind::Lda: return fit_lda(X, y, h.lda);
        case ClassifierKind::Gnb: return fit_gnb(X, y, h.gnb);
        case ClassifierKind::Knn: return fit_knn(X, y, h.knn);
        case ClassifierKind::Svm: return fit_svm(X, y, h.svm, seed);
        case ClassifierKind::Ensemble: return fit_ensemble(X, y, h, seed);
    }
    throw Error(ErrorCode::ConfigError, "unhandled classifier kind");
}

int predict(const ClassifierModel& model, const Eigen::VectorXd& x) {
    return std::visit(
        [&](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticRegressionModel>) {
                return logreg_proba(m, x) > 0.5 ? 1 : 0;
            } else if constexpr (std::is_same_v<T, LdaModel>) {
                return m.weights.dot(x) > m.threshold ? 1 : 0;
            } else if constexpr (std::is_same_v<T, GaussianNbModel>) {
                const Eigen::Vector2d post = gnb_posterior(m, x);
                return post(1) > post(0) ? 1 : 0;
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                return knn_predict(m, x);
            } else if constexpr (std::is_same_v<T, LinearSvmModel>) {
                return m.weights.dot(x) + m.bias > 0.0 ? 1 : 0;
            } else {
                const int votes = predict(ClassifierModel{m.knn}, x) +
                                  predict(ClassifierModel{m.lda}, x) +
                                  predict(ClassifierModel{m.svm}, x);
                return votes >= 2 ? 1 : 0;
            }
        },
        model);
}

Eigen::VectorXi predict_batch_serial(const ClassifierModel& model, const Eigen::MatrixXd& X) {
    Eigen::VectorXi out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        out(i) = predict(model, X.row(i).transpose());
    }
    return out;
}

std::string classifier_to_json(const ClassifierModel& model,
                               const std::vector<std::string>& feature_names) {
    json j;
    j["feature_names"] = feature_names;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticRegressionModel>) {
                j["kind"] = "logreg";
                j["params"] = {{"bias", m.bias}, {"weights", vector_to_json(m.weights)}};
            } else if constexpr (std::is_same_v<T, LdaModel>) {
                j["kind"] = "lda";
                j["params"] = lda_to_json(m);
            } else if constexpr (std::is_same_v<T, GaussianNbModel>) {
                j["kind"] = "gnb";
                j["params"] = {{"prior0", m.prior0},       {"prior1", m.prior1},
                               {"mean0", vector_to_json(m.mean0)}, {"mean1", vector_to_json(m.mean1)},
                               {"var0", vector_to_json(m.var0)},   {"var1", vector_to_json(m.var1)}};
            } else if constexpr (std::is_same_v<T, KnnModel>) {
                j["kind"] = "knn";
                j["params"] = knn_to_json(m);
            } else if constexpr (std::is_same_v<T, LinearSvmModel>) {
                j["kind"] = "svm";
                j["params"] = svm_to_json(m);
            } else {
                j["kind"] = "ensemble";
                j["params"] = {{"knn", knn_to_json(m.knn)},
                               {"lda", lda_to_json(m.lda)},
                               {"svm", svm_to_json(m.svm)}};
            }
        },
        model);
    return j.dump(2);
}

ClassifierModel classifier_from_json(const std::string& text,
                                     const std::vector<std::string>& expected_feature_names) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ModelMismatch, "model file is not valid JSON");
    try {
        const auto names = j.at("feature_names").get<std::vector<std::string>>();
        if (!expected_feature_names.empty() && names != expected_feature_names) {
            throw Error(ErrorCode::ModelMismatch,
                        "model was trained against a different feature layout");
        }
        const std::string kind = j.at("kind").get<std::string>();
        const json& p = j.at("params");
        if (kind == "logreg") {
            LogisticRegressionModel m;
            m.bias = p.at("bias").get<double>();
            m.weights = vector_from_json(p.at("weights"));
            return m;
        }
        if (kind == "lda") return lda_from_json(p);
        if (kind == "gnb") {
            GaussianNbModel m;
            m.prior0 = p.at("prior0").get<double>();
            m.prior1 = p.at("prior1").get<double>();
            m.mean0 = vector_from_json(p.at("mean0"));
            m.mean1 = vector_from_json(p.at("mean1"));
            m.var0 = vector_from_json(p.at("var0"));
            m.var1 = vector_from_json(p.at("var1"));
            return m;
        }
        if (kind == "knn") return knn_from_json(p);
        if (kind == "svm") return svm_from_json(p);
        if (kind == "ensemble") {
            EnsembleModel m;
            m.knn = knn_from_json(p.at("knn"));
            m.lda = lda_from_json(p.at("lda"));
            m.svm = svm_from_json(p.at("svm"));
            return m;
        }
        throw Error(ErrorCode::ModelMismatch, "unknown classifier kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ModelMismatch, std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace mibci

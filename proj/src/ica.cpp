#include "mibci/ica.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mibci/error.hpp"

namespace mibci {

namespace {

// W <- (W W^T)^(-1/2) W, making the rows an orthonormal set.
Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& W) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W * W.transpose());
    const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * W;
}

}  // namespace

Eigen::MatrixXd IcaModel::sources(const Eigen::MatrixXd& eeg) const {
    return (eeg.rowwise() - means.transpose()) * (unmixing * whitening).transpose();
}

IcaModel fast_ica(const Eigen::MatrixXd& eeg, int k, std::uint64_t seed, double tol, int max_iter) {
    const Eigen::Index n = eeg.rows();
    const Eigen::Index n_ch = eeg.cols();
    if (k <= 0 || k > n_ch || n_ch > n) {
        throw Error(ErrorCode::InvalidArgument,
                    "fast_ica requires 0 < k <= n_channels <= n_samples");
    }
    if (!eeg.allFinite()) {
        throw Error(ErrorCode::NonFiniteSample, "fast_ica: data contains non-finite values");
    }

    IcaModel model;
    model.n_components = k;
    model.means = eeg.colwise().mean().transpose();
    const Eigen::MatrixXd centered = eeg.rowwise() - model.means.transpose();

    const Eigen::MatrixXd cov = centered.transpose() * centered / double(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    // Eigenvalues come back ascending; use the top k.
    const Eigen::VectorXd evals = es.eigenvalues();
    const double lead = evals(n_ch - 1);
    if (!(lead > 0.0) || evals(n_ch - k) <= lead * 1e-10) {
        throw Error(ErrorCode::SingularCovariance,
                    "covariance rank below the requested " + std::to_string(k) + " components");
    }
    model.whitening.resize(k, n_ch);
    for (int i = 0; i < k; ++i) {
        const Eigen::Index src = n_ch - 1 - i;
        model.whitening.row(i) = es.eigenvectors().col(src).transpose() / std::sqrt(evals(src));
    }

    const Eigen::MatrixXd Z = centered * model.whitening.transpose();  // [n x k], identity cov

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd W(k, k);
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) W(r, c) = gauss(rng);
    }
    W = symmetric_decorrelate(W);

    model.converged = false;
    model.iterations = max_iter;
    for (int it = 0; it < max_iter; ++it) {
        // Fixed-point update with tanh contrast:
        //   w_j <- E[z tanh(w_j.z)] - E[1 - tanh^2(w_j.z)] w_j
        const Eigen::MatrixXd G = (Z * W.transpose()).array().tanh();  // [n x k]
        Eigen::MatrixXd W_new(k, k);
        for (int j = 0; j < k; ++j) {
            const double gprime_mean = 1.0 - G.col(j).array().square().mean();
            W_new.row(j) = (G.col(j).transpose() * Z) / double(n) - gprime_mean * W.row(j);
        }
        W_new = symmetric_decorrelate(W_new);

        const Eigen::VectorXd diag = (W_new * W.transpose()).diagonal();
        const double delta = (1.0 - diag.array().abs()).abs().maxCoeff();
        W = W_new;
        if (delta < tol) {
            model.converged = true;
            model.iterations = it + 1;
            break;
        }
    }

    model.unmixing = W;
    Eigen::MatrixXd combined = W * model.whitening;  // [k x n_ch]
    model.mixing = combined.completeOrthogonalDecomposition().pseudoInverse();

    // Order components by the variance their back-projection explains; since
    // sources have unit variance this is the squared norm of each mixing
    // column. Fix signs so the dominant mixing entry is positive.
    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    const Eigen::RowVectorXd colnorm = model.mixing.colwise().squaredNorm();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return colnorm(a) > colnorm(b); });

    Eigen::MatrixXd unmix_sorted(k, k);
    Eigen::MatrixXd mixing_sorted(n_ch, k);
    for (int i = 0; i < k; ++i) {
        const int src = order[static_cast<std::size_t>(i)];
        double sign = 1.0;
        Eigen::Index argmax;
        model.mixing.col(src).cwiseAbs().maxCoeff(&argmax);
        if (model.mixing(argmax, src) < 0.0) sign = -1.0;
        unmix_sorted.row(i) = sign * model.unmixing.row(src);
        mixing_sorted.col(i) = sign * model.mixing.col(src);
    }
    model.unmixing = unmix_sorted;
    model.mixing = mixing_sorted;
    return model;
}

EogScores score_eog_correlation(const IcaModel& model, const Eigen::MatrixXd& eeg,
                                const Eigen::MatrixXd& eog,
                                const std::vector<std::string>& eog_names) {
    if (eeg.rows() != eog.rows()) {
        throw Error(ErrorCode::LengthMismatch, "EEG and EOG sample counts differ");
    }
    const Eigen::MatrixXd S = model.sources(eeg);
    EogScores out;
    for (int i = 0; i < model.n_components; ++i) {
        double best = 0.0;
        Eigen::Index best_j = 0;
        for (Eigen::Index j = 0; j < eog.cols(); ++j) {
            const double r = std::abs(pearson(S.col(i), eog.col(j)));
            if (r > best) {
                best = r;
                best_j = j;
            }
        }
        out.score.push_back(best);
        out.channel.push_back(best_j < Eigen::Index(eog_names.size())
                                  ? eog_names[static_cast<std::size_t>(best_j)]
                                  : "EOG" + std::to_string(best_j));
    }
    return out;
}

Eigen::MatrixXd remove_components(const IcaModel& model, const Eigen::MatrixXd& eeg,
                                  const std::vector<int>& drop) {
    for (int d : drop) {
        if (d < 0 || d >= model.n_components) {
            throw Error(ErrorCode::IndexOutOfRange,
                        "component " + std::to_string(d) + " outside [0, " +
                            std::to_string(model.n_components) + ")");
        }
    }
    Eigen::MatrixXd S = model.sources(eeg);
    for (int d : drop) S.col(d).setZero();
    return (S * model.mixing.transpose()).rowwise() + model.means.transpose();
}

}  // namespace mibci

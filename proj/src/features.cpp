#include "mibci/features.hpp"

#include <algorithm>
#include <cmath>

#include "mibci/error.hpp"

namespace mibci {

namespace {

constexpr double kPowerFloor = 1e-12;  // uV^2, keeps the log finite on silent channels
constexpr double kStdFloor = 1e-9;

int column_for(const std::vector<ChannelInfo>& channels, const std::string& name) {
    for (const auto& ch : channels) {
        if (ch.name == name) return ch.index;
    }
    throw Error(ErrorCode::MissingChannel, "channel not found: " + name);
}

}  // namespace

SubbandLayout SubbandLayout::default_layout() {
    SubbandLayout layout;
    // Alpha 8-14 Hz in four 1.5 Hz steps, beta 14-30 Hz in four 4 Hz steps.
    for (int i = 0; i < 4; ++i) {
        layout.bands.push_back({8.0 + 1.5 * i, 8.0 + 1.5 * (i + 1)});
        layout.band_names.push_back("alpha" + std::to_string(i + 1));
    }
    for (int i = 0; i < 4; ++i) {
        layout.bands.push_back({14.0 + 4.0 * i, 14.0 + 4.0 * (i + 1)});
        layout.band_names.push_back("beta" + std::to_string(i + 1));
    }
    layout.channels = {"C3", "C4"};
    return layout;
}

std::vector<std::string> SubbandLayout::feature_names() const {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        for (std::size_t b = 0; b < bands.size(); ++b) {
            const std::string band = b < band_names.size()
                                         ? band_names[b]
                                         : "band" + std::to_string(b + 1);
            names.push_back(channels[c] + "." + band);
        }
    }
    return names;
}

Eigen::VectorXd log_subband_power(const Eigen::MatrixXd& trial_data,
                                  const std::vector<ChannelInfo>& trial_channels,
                                  const SubbandLayout& layout, double fs) {
    const Eigen::Index seg = static_cast<Eigen::Index>(std::llround(layout.welch_segment_s * fs));
    if (seg > trial_data.rows()) {
        throw Error(ErrorCode::SignalTooShort,
                    "trial of " + std::to_string(trial_data.rows()) +
                        " samples is shorter than one Welch segment (" + std::to_string(seg) + ")");
    }
    Eigen::VectorXd out(layout.dimension());
    Eigen::Index at = 0;
    for (const auto& name : layout.channels) {
        const int col = column_for(trial_channels, name);
        const Psd psd = welch_psd(trial_data.col(col), fs, layout.welch_segment_s,
                                  layout.welch_overlap);
        for (const auto& band : layout.bands) {
            out(at++) = std::log(std::max(band_power(psd, band), kPowerFloor));
        }
    }
    return out;
}

CspModel fit_csp(const TrialSet& trials, int m, std::vector<std::string> channels) {
    if (channels.empty()) {
        for (int idx : trials.indices_of_kind(ChannelKind::Eeg)) {
            channels.push_back(trials.channels[static_cast<std::size_t>(idx)].name);
        }
    }
    const int n_ch = static_cast<int>(channels.size());
    if (m <= 0 || m % 2 != 0 || m > 2 * n_ch) {
        throw Error(ErrorCode::InvalidArgument, "CSP filter count must be even and <= 2 * channels");
    }

    std::vector<int> cols;
    for (const auto& name : channels) cols.push_back(trials.channel_index(name));

    // Trace-normalized average covariance per class.
    Eigen::MatrixXd sigma[2] = {Eigen::MatrixXd::Zero(n_ch, n_ch),
                                Eigen::MatrixXd::Zero(n_ch, n_ch)};
    int counts[2] = {0, 0};
    for (const auto& trial : trials.trials) {
        if (trial.label != 0 && trial.label != 1) {
            throw Error(ErrorCode::InvalidArgument, "CSP expects binary labels");
        }
        Eigen::MatrixXd X(trial.data.rows(), n_ch);
        for (int c = 0; c < n_ch; ++c) X.col(c) = trial.data.col(cols[static_cast<std::size_t>(c)]);
        X.rowwise() -= X.colwise().mean();
        Eigen::MatrixXd cov = X.transpose() * X;
        const double tr = cov.trace();
        if (tr <= 0.0) continue;
        sigma[trial.label] += cov / tr;
        ++counts[trial.label];
    }
    if (counts[0] == 0 || counts[1] == 0) {
        throw Error(ErrorCode::SingleClass, "CSP needs trials from both classes");
    }
    sigma[0] /= double(counts[0]);
    sigma[1] /= double(counts[1]);

    const Eigen::MatrixXd total = sigma[0] + sigma[1];
    {
        Eigen::LLT<Eigen::MatrixXd> llt(total);
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorCode::SingularCovariance, "composite class covariance is singular");
        }
    }

    // sigma0 w = lambda (sigma0 + sigma1) w, eigenvalues ascending, vectors
    // normalized so W^T (sigma0 + sigma1) W = I.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sigma[0], total);
    if (ges.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularCovariance, "generalized eigensolver failed");
    }

    CspModel model;
    model.channels = channels;
    model.filters.resize(m, n_ch);
    model.eigvals.resize(m);
    // Extreme pairs first: largest, smallest, second largest, second smallest...
    for (int pair = 0; pair < m / 2; ++pair) {
        const int hi = n_ch - 1 - pair;
        const int lo = pair;
        model.filters.row(2 * pair) = ges.eigenvectors().col(hi).transpose();
        model.eigvals(2 * pair) = ges.eigenvalues()(hi);
        model.filters.row(2 * pair + 1) = ges.eigenvectors().col(lo).transpose();
        model.eigvals(2 * pair + 1) = ges.eigenvalues()(lo);
    }
    return model;
}

Eigen::VectorXd apply_csp(const CspModel& model, const Eigen::MatrixXd& trial_data,
                          const std::vector<ChannelInfo>& trial_channels) {
    const int n_ch = static_cast<int>(model.channels.size());
    Eigen::MatrixXd X(trial_data.rows(), n_ch);
    for (int c = 0; c < n_ch; ++c) {
        const auto& name = model.channels[static_cast<std::size_t>(c)];
        int col = -1;
        for (const auto& ch : trial_channels) {
            if (ch.name == name) {
                col = ch.index;
                break;
            }
        }
        if (col < 0 || col >= trial_data.cols()) {
            throw Error(ErrorCode::ShapeMismatch,
                        "trial layout does not provide CSP channel " + name);
        }
        X.col(c) = trial_data.col(col);
    }
    const Eigen::MatrixXd projected = X * model.filters.transpose();  // [n x m]
    Eigen::VectorXd out(model.filters.rows());
    for (Eigen::Index i = 0; i < projected.cols(); ++i) {
        const Eigen::VectorXd col = projected.col(i);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        out(i) = std::log(std::max(var, kPowerFloor));
    }
    return out;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) {
        throw Error(ErrorCode::TooFewRows, "standardizer needs at least 2 rows");
    }
    Standardizer s;
    s.mean = X.colwise().mean().transpose();
    Eigen::VectorXd var(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        var(c) = (X.col(c).array() - s.mean(c)).square().mean();
    }
    s.std = var.cwiseSqrt().cwiseMax(kStdFloor);
    return s;
}

Eigen::MatrixXd apply_standardizer(const Standardizer& s, const Eigen::MatrixXd& X) {
    if (X.cols() != s.mean.size()) {
        throw Error(ErrorCode::ShapeMismatch, "standardizer dimension mismatch");
    }
    return (X.rowwise() - s.mean.transpose()) * s.std.cwiseInverse().asDiagonal();
}

Eigen::VectorXd apply_standardizer(const Standardizer& s, const Eigen::VectorXd& x) {
    if (x.size() != s.mean.size()) {
        throw Error(ErrorCode::ShapeMismatch, "standardizer dimension mismatch");
    }
    return (x - s.mean).cwiseQuotient(s.std);
}

PcaModel fit_pca(const Eigen::MatrixXd& X, int k) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    if (k <= 0 || k > std::min<Eigen::Index>(n - 1, d)) {
        throw Error(ErrorCode::InvalidArgument, "PCA components must satisfy 0 < k <= min(n-1, d)");
    }

    PcaModel model;
    model.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();

    const double rank_eps = sv(0) * std::max(n, d) * 1e-15;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rank_eps) ++rank;
    }
    model.rank_deficient = k > rank;

    model.components.resize(k, d);
    model.explained_variance.resize(k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd comp = svd.matrixV().col(i);
        // Deterministic sign: the entry of largest magnitude is positive.
        Eigen::Index argmax;
        comp.cwiseAbs().maxCoeff(&argmax);
        if (comp(argmax) < 0.0) comp = -comp;
        model.components.row(i) = comp.transpose();
        model.explained_variance(i) = sv(i) * sv(i) / double(n - 1);
    }
    return model;
}

Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.mean.size()) {
        throw Error(ErrorCode::ShapeMismatch, "PCA dimension mismatch");
    }
    return (X.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace mibci

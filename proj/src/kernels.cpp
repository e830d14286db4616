#include "mibci/kernels.hpp"

#include <exception>
#include <mutex>

#include "mibci/error.hpp"

namespace mibci::kernels {

Eigen::VectorXd FeatureExtractor::extract(const Eigen::MatrixXd& trial_data,
                                          const std::vector<ChannelInfo>& trial_channels,
                                          double fs) const {
    if (kind == ExtractorKind::LogSubbandPower) {
        return log_subband_power(trial_data, trial_channels, layout, fs);
    }
    if (!csp) {
        throw Error(ErrorCode::InvalidArgument, "CSP extractor used before fitting");
    }
    return apply_csp(*csp, trial_data, trial_channels);
}

std::vector<std::string> FeatureExtractor::feature_names() const {
    if (kind == ExtractorKind::LogSubbandPower) return layout.feature_names();
    std::vector<std::string> names;
    const Eigen::Index m = csp ? csp->filters.rows() : 0;
    for (Eigen::Index i = 0; i < m; ++i) names.push_back("csp" + std::to_string(i));
    return names;
}

int FeatureExtractor::dimension() const {
    if (kind == ExtractorKind::LogSubbandPower) return layout.dimension();
    return csp ? static_cast<int>(csp->filters.rows()) : 0;
}

namespace {

// Runs `work(i)` for i in [0, n), OpenMP-parallel. Items are independent, so
// scheduling cannot change results; the first exception is captured and
// rethrown after the region (exceptions must not escape a parallel loop).
template <typename Work>
void parallel_for(Eigen::Index n, Work&& work) {
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            work(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

Trial filter_one(const Trial& t, const FilterCoefficients& c) {
    Trial out = t;
    for (Eigen::Index col = 0; col < t.data.cols(); ++col) {
        out.data.col(col) = filter_zero_phase(t.data.col(col), c);
    }
    return out;
}

}  // namespace

TrialSet filter_trials(const TrialSet& ts, const FilterCoefficients& c) {
    TrialSet out = ts;
    parallel_for(static_cast<Eigen::Index>(ts.trials.size()), [&](Eigen::Index i) {
        out.trials[static_cast<std::size_t>(i)] = filter_one(ts.trials[static_cast<std::size_t>(i)], c);
    });
    return out;
}

TrialSet filter_trials_serial(const TrialSet& ts, const FilterCoefficients& c) {
    TrialSet out = ts;
    for (std::size_t i = 0; i < ts.trials.size(); ++i) {
        out.trials[i] = filter_one(ts.trials[i], c);
    }
    return out;
}

Eigen::MatrixXd filter_recording_samples(const Eigen::MatrixXd& samples,
                                         const FilterCoefficients& c) {
    Eigen::MatrixXd out(samples.rows(), samples.cols());
    parallel_for(samples.cols(), [&](Eigen::Index col) {
        out.col(col) = filter_zero_phase(samples.col(col), c);
    });
    return out;
}

FeatureMatrix extract_features(const TrialSet& ts, const FeatureExtractor& fx) {
    FeatureMatrix fm;
    fm.feature_names = fx.feature_names();
    const auto n = static_cast<Eigen::Index>(ts.trials.size());
    fm.X.resize(n, fx.dimension());
    fm.y.resize(n);
    parallel_for(n, [&](Eigen::Index i) {
        const Trial& t = ts.trials[static_cast<std::size_t>(i)];
        fm.X.row(i) = fx.extract(t.data, ts.channels, ts.fs).transpose();
        fm.y(i) = t.label;
    });
    return fm;
}

FeatureMatrix extract_features_serial(const TrialSet& ts, const FeatureExtractor& fx) {
    FeatureMatrix fm;
    fm.feature_names = fx.feature_names();
    const auto n = static_cast<Eigen::Index>(ts.trials.size());
    fm.X.resize(n, fx.dimension());
    fm.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Trial& t = ts.trials[static_cast<std::size_t>(i)];
        fm.X.row(i) = fx.extract(t.data, ts.channels, ts.fs).transpose();
        fm.y(i) = t.label;
    }
    return fm;
}

Eigen::VectorXi predict_batch(const ClassifierModel& model, const Eigen::MatrixXd& X) {
    Eigen::VectorXi out(X.rows());
    parallel_for(X.rows(), [&](Eigen::Index i) { out(i) = predict(model, X.row(i).transpose()); });
    return out;
}

}  // namespace mibci::kernels

#include "mibci/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json_util.hpp"
#include "mibci/error.hpp"

namespace mibci {

namespace {

using nlohmann::json;

Eigen::MatrixXd concat_columns(const std::vector<Trial>& trials, const std::vector<int>& indices,
                               const std::vector<int>& cols) {
    if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "no trials to concatenate");
    const Eigen::Index window = trials[static_cast<std::size_t>(indices[0])].data.rows();
    Eigen::MatrixXd out(window * static_cast<Eigen::Index>(indices.size()),
                        static_cast<Eigen::Index>(cols.size()));
    Eigen::Index at = 0;
    for (int idx : indices) {
        const Eigen::MatrixXd& data = trials[static_cast<std::size_t>(idx)].data;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            out.block(at, static_cast<Eigen::Index>(c), window, 1) =
                data.col(cols[c]);
        }
        at += window;
    }
    return out;
}

Eigen::Matrix2i confusion_matrix(const Eigen::VectorXi& truth, const Eigen::VectorXi& pred) {
    Eigen::Matrix2i conf = Eigen::Matrix2i::Zero();
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        if (truth(i) < 0 || truth(i) > 1 || pred(i) < 0 || pred(i) > 1) {
            throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
        }
        conf(truth(i), pred(i)) += 1;
    }
    return conf;
}

double accuracy_of(const Eigen::VectorXi& truth, const Eigen::VectorXi& pred) {
    if (truth.size() == 0) return 0.0;
    int correct = 0;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        if (truth(i) == pred(i)) ++correct;
    }
    return double(correct) / double(truth.size());
}

int mode_label(const std::vector<int>& votes) {
    int ones = 0;
    for (int v : votes) ones += v;
    // Even-length ties resolve to label 0.
    return 2 * ones > static_cast<int>(votes.size()) ? 1 : 0;
}

void select_rows(const Eigen::VectorXi& y, const std::vector<int>& rows, Eigen::VectorXi& out) {
    out.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    }
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    }
    return out;
}

// Rejection-sampled Fisher-Yates, identical to the dataset splitter's.
std::vector<int> shuffled_indices(int n, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const std::uint64_t bound = static_cast<std::uint64_t>(i) + 1;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v;
        do {
            v = rng();
        } while (v >= limit);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(v % bound)]);
    }
    return idx;
}

json filter_to_json(const FilterConfig& f) {
    return json{{"order", f.order}, {"low_hz", f.band.low_hz}, {"high_hz", f.band.high_hz}};
}

FilterConfig filter_from_json(const json& j) {
    FilterConfig f;
    f.order = j.at("order").get<int>();
    f.band.low_hz = j.at("low_hz").get<double>();
    f.band.high_hz = j.at("high_hz").get<double>();
    return f;
}

json extractor_to_json(const ExtractorConfig& e, const std::optional<CspModel>& csp) {
    json j;
    j["kind"] = e.kind == kernels::ExtractorKind::LogSubbandPower ? "log_subband_power" : "csp";
    json bands = json::array();
    for (const auto& b : e.layout.bands) bands.push_back({b.low_hz, b.high_hz});
    j["bands"] = bands;
    j["band_names"] = e.layout.band_names;
    j["channels"] = e.layout.channels;
    j["welch_segment_s"] = e.layout.welch_segment_s;
    j["welch_overlap"] = e.layout.welch_overlap;
    j["csp_filters"] = e.csp_filters;
    if (csp) {
        j["csp_model"] = {{"filters", detail::to_json(csp->filters)},
                          {"eigvals", detail::to_json(csp->eigvals)},
                          {"channels", csp->channels}};
    } else {
        j["csp_model"] = nullptr;
    }
    return j;
}

void extractor_from_json(const json& j, ExtractorConfig& e, std::optional<CspModel>& csp) {
    const std::string kind = j.at("kind").get<std::string>();
    e.kind = kind == "csp" ? kernels::ExtractorKind::Csp : kernels::ExtractorKind::LogSubbandPower;
    e.layout.bands.clear();
    for (const auto& b : j.at("bands")) {
        e.layout.bands.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    }
    e.layout.band_names = j.at("band_names").get<std::vector<std::string>>();
    e.layout.channels = j.at("channels").get<std::vector<std::string>>();
    e.layout.welch_segment_s = j.at("welch_segment_s").get<double>();
    e.layout.welch_overlap = j.at("welch_overlap").get<double>();
    e.csp_filters = j.at("csp_filters").get<int>();
    if (!j.at("csp_model").is_null()) {
        CspModel m;
        m.filters = detail::matrix_from_json(j.at("csp_model").at("filters"));
        m.eigvals = detail::dvector_from_json(j.at("csp_model").at("eigvals"));
        m.channels = j.at("csp_model").at("channels").get<std::vector<std::string>>();
        csp = std::move(m);
    } else {
        csp.reset();
    }
}

json standardizer_to_json(const Standardizer& s) {
    return json{{"mean", detail::to_json(s.mean)}, {"std", detail::to_json(s.std)}};
}

Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    s.mean = detail::dvector_from_json(j.at("mean"));
    s.std = detail::dvector_from_json(j.at("std"));
    return s;
}

json cleaner_to_json(const std::optional<IcaCleaner>& c) {
    if (!c) return nullptr;
    json scores = json::array();
    for (std::size_t i = 0; i < c->scores.score.size(); ++i) {
        scores.push_back({{"score", c->scores.score[i]}, {"channel", c->scores.channel[i]}});
    }
    return json{{"whitening", detail::to_json(c->model.whitening)},
                {"unmixing", detail::to_json(c->model.unmixing)},
                {"mixing", detail::to_json(c->model.mixing)},
                {"means", detail::to_json(c->model.means)},
                {"n_components", c->model.n_components},
                {"converged", c->model.converged},
                {"iterations", c->model.iterations},
                {"drop", c->drop},
                {"eeg_columns", c->eeg_columns},
                {"scores", scores}};
}

std::optional<IcaCleaner> cleaner_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    IcaCleaner c;
    c.model.whitening = detail::matrix_from_json(j.at("whitening"));
    c.model.unmixing = detail::matrix_from_json(j.at("unmixing"));
    c.model.mixing = detail::matrix_from_json(j.at("mixing"));
    c.model.means = detail::dvector_from_json(j.at("means"));
    c.model.n_components = j.at("n_components").get<int>();
    c.model.converged = j.at("converged").get<bool>();
    c.model.iterations = j.at("iterations").get<int>();
    c.drop = j.at("drop").get<std::vector<int>>();
    c.eeg_columns = j.at("eeg_columns").get<std::vector<int>>();
    for (const auto& s : j.at("scores")) {
        c.scores.score.push_back(s.at("score").get<double>());
        c.scores.channel.push_back(s.at("channel").get<std::string>());
    }
    return c;
}

json meta_to_json(const TrainMeta& m) {
    return json{{"seed", m.seed},
                {"train_fraction", m.train_fraction},
                {"n_train", m.n_train},
                {"n_test", m.n_test}};
}

TrainMeta meta_from_json(const json& j) {
    TrainMeta m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train_fraction = j.at("train_fraction").get<double>();
    m.n_train = j.at("n_train").get<int>();
    m.n_test = j.at("n_test").get<int>();
    return m;
}

}  // namespace

Eigen::MatrixXd IcaCleaner::clean(const Eigen::MatrixXd& trial_data) const {
    Eigen::MatrixXd eeg(trial_data.rows(), static_cast<Eigen::Index>(eeg_columns.size()));
    for (std::size_t c = 0; c < eeg_columns.size(); ++c) {
        eeg.col(static_cast<Eigen::Index>(c)) = trial_data.col(eeg_columns[c]);
    }
    const Eigen::MatrixXd cleaned = remove_components(model, eeg, drop);
    Eigen::MatrixXd out = trial_data;
    for (std::size_t c = 0; c < eeg_columns.size(); ++c) {
        out.col(eeg_columns[c]) = cleaned.col(static_cast<Eigen::Index>(c));
    }
    return out;
}

Eigen::VectorXd MiBundle::features_for(const Trial& trial, const std::vector<ChannelInfo>& channels,
                                       double fs) const {
    const FilterCoefficients coeffs = design_butterworth_bandpass(filter.order, filter.band, fs);
    Eigen::MatrixXd data(trial.data.rows(), trial.data.cols());
    for (Eigen::Index c = 0; c < trial.data.cols(); ++c) {
        data.col(c) = filter_zero_phase(trial.data.col(c), coeffs);
    }
    if (cleaner) data = cleaner->clean(data);
    kernels::FeatureExtractor fx{extractor.kind, extractor.layout, csp};
    return apply_standardizer(standardizer, fx.extract(data, channels, fs));
}

int MiBundle::predict_trial(const Trial& trial, const std::vector<ChannelInfo>& channels,
                            double fs) const {
    return predict(model, features_for(trial, channels, fs));
}

Eigen::VectorXd GateBundle::features_for(const Trial& trial,
                                         const std::vector<ChannelInfo>& channels,
                                         double fs) const {
    const FilterCoefficients coeffs = design_butterworth_bandpass(filter.order, filter.band, fs);
    Eigen::MatrixXd data(trial.data.rows(), trial.data.cols());
    for (Eigen::Index c = 0; c < trial.data.cols(); ++c) {
        data.col(c) = filter_zero_phase(trial.data.col(c), coeffs);
    }
    kernels::FeatureExtractor fx{extractor.kind, extractor.layout, csp};
    return apply_standardizer(standardizer, fx.extract(data, channels, fs));
}

PreparedTask prepare_mi_task(const TrialSet& trials, const MiTrainConfig& cfg,
                             std::optional<SplitIndices> split_override) {
    if (trials.empty()) throw Error(ErrorCode::InvalidArgument, "empty trial set");

    const FilterCoefficients coeffs =
        design_butterworth_bandpass(cfg.filter.order, cfg.filter.band, trials.fs);

    PreparedTask task;
    task.processed = kernels::filter_trials(trials, coeffs);
    task.split = split_override
                     ? *split_override
                     : train_test_split_indices(static_cast<int>(trials.size()),
                                                cfg.train_fraction, cfg.seed);

    if (cfg.ica.enabled) {
        const std::vector<int> eeg_cols = trials.indices_of_kind(ChannelKind::Eeg);
        const std::vector<int> eog_cols = trials.indices_of_kind(ChannelKind::Eog);
        if (eeg_cols.empty() || eog_cols.empty()) {
            throw Error(ErrorCode::MissingChannel, "EOG cleaning needs EEG and EOG channels");
        }
        std::vector<std::string> eog_names;
        for (int c : eog_cols) eog_names.push_back(trials.channels[static_cast<std::size_t>(c)].name);

        // Fit on the training portion only; the fitted transform is then
        // applied to every trial.
        const Eigen::MatrixXd train_eeg =
            concat_columns(task.processed.trials, task.split.train, eeg_cols);
        const Eigen::MatrixXd train_eog =
            concat_columns(task.processed.trials, task.split.train, eog_cols);
        const IcaModel model =
            fast_ica(train_eeg, static_cast<int>(eeg_cols.size()), mix_seed(cfg.seed, "ica"),
                     cfg.ica.tol, cfg.ica.max_iter);
        const EogScores scores = score_eog_correlation(model, train_eeg, train_eog, eog_names);

        std::vector<int> order(scores.score.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return scores.score[static_cast<std::size_t>(a)] >
                   scores.score[static_cast<std::size_t>(b)];
        });
        std::vector<int> drop;
        for (int idx : order) {
            if (static_cast<int>(drop.size()) >= cfg.ica.max_drop) break;
            if (scores.score[static_cast<std::size_t>(idx)] >= cfg.ica.threshold) {
                drop.push_back(idx);
            }
        }
        if (!drop.empty()) {
            IcaCleaner cleaner{model, drop, eeg_cols, scores};
            for (auto& trial : task.processed.trials) {
                trial.data = cleaner.clean(trial.data);
            }
            task.cleaner = std::move(cleaner);
        }
    }

    if (cfg.extractor.kind == kernels::ExtractorKind::Csp) {
        TrialSet train_only;
        train_only.semantics = task.processed.semantics;
        train_only.channels = task.processed.channels;
        train_only.fs = task.processed.fs;
        for (int i : task.split.train) {
            train_only.trials.push_back(task.processed.trials[static_cast<std::size_t>(i)]);
        }
        task.csp = fit_csp(train_only, cfg.extractor.csp_filters, cfg.extractor.layout.channels);
    }

    kernels::FeatureExtractor fx{cfg.extractor.kind, cfg.extractor.layout, task.csp};
    const FeatureMatrix fm = kernels::extract_features(task.processed, fx);
    task.feature_names = fm.feature_names;

    const Eigen::MatrixXd train_raw = gather_rows(fm.X, task.split.train);
    task.standardizer = fit_standardizer(train_raw);
    task.train_X = apply_standardizer(task.standardizer, train_raw);
    task.test_X = apply_standardizer(task.standardizer, gather_rows(fm.X, task.split.test));
    select_rows(fm.y, task.split.train, task.train_y);
    select_rows(fm.y, task.split.test, task.test_y);
    for (int i : task.split.test) {
        task.test_subjects.push_back(
            task.processed.trials[static_cast<std::size_t>(i)].subject_id);
    }
    return task;
}

PreparedTask prepare_gate_task(const TrialSet& trials1, const TrialSet& trials2,
                               const GateTrainConfig& cfg,
                               std::optional<std::pair<SplitIndices, SplitIndices>> split_override) {
    if (trials1.empty() || trials2.empty()) {
        throw Error(ErrorCode::InvalidArgument, "both subjects need trials");
    }
    if (trials1.fs != trials2.fs) {
        throw Error(ErrorCode::ShapeMismatch, "subjects sampled at different rates");
    }
    if (trials1.channels.size() != trials2.channels.size()) {
        throw Error(ErrorCode::ShapeMismatch, "subjects have different channel layouts");
    }
    for (std::size_t i = 0; i < trials1.channels.size(); ++i) {
        if (trials1.channels[i].name != trials2.channels[i].name) {
            throw Error(ErrorCode::ShapeMismatch, "subjects have different channel layouts");
        }
    }

    // Relabel by subject and pool; identical preprocessing for both inputs.
    TrialSet pooled;
    pooled.semantics = LabelSemantics::Subject;
    pooled.channels = trials1.channels;
    pooled.fs = trials1.fs;
    for (const auto& t : trials1.trials) {
        Trial copy = t;
        copy.label = 0;
        copy.subject_id = 0;
        pooled.trials.push_back(std::move(copy));
    }
    for (const auto& t : trials2.trials) {
        Trial copy = t;
        copy.label = 1;
        copy.subject_id = 1;
        pooled.trials.push_back(std::move(copy));
    }

    SplitIndices split;
    if (split_override) {
        const int offset = static_cast<int>(trials1.size());
        split = split_override->first;
        for (int i : split_override->second.train) split.train.push_back(i + offset);
        for (int i : split_override->second.test) split.test.push_back(i + offset);
    } else {
        split = train_test_split_indices(static_cast<int>(pooled.size()), cfg.train_fraction,
                                         cfg.seed);
    }

    MiTrainConfig prep;
    prep.filter = cfg.filter;
    prep.ica.enabled = false;
    prep.extractor = cfg.extractor;
    prep.train_fraction = cfg.train_fraction;
    prep.seed = cfg.seed;
    return prepare_mi_task(pooled, prep, split);
}

EvaluationReport evaluate_on_prepared(const PreparedTask& task, const ClassifierModel& model,
                                      const std::string& task_name, int subject_id,
                                      int section_size, std::uint64_t seed) {
    EvaluationReport report;
    report.task = task_name;
    report.subject_id = subject_id;
    report.seed = seed;

    const Eigen::VectorXi train_pred = kernels::predict_batch(model, task.train_X);
    const Eigen::VectorXi test_pred = kernels::predict_batch(model, task.test_X);
    report.n_train = static_cast<int>(task.train_X.rows());
    report.n_test = static_cast<int>(task.test_X.rows());
    report.train_accuracy = accuracy_of(task.train_y, train_pred);
    report.test_accuracy = accuracy_of(task.test_y, test_pred);
    report.confusion = confusion_matrix(task.test_y, test_pred);

    if (section_size > 0) {
        report.per_trial_accuracy = report.test_accuracy;
        // Group each subject's test rows (in test order) into sections; the
        // section's prediction is the mode of its per-trial predictions.
        int section_index = 0;
        int correct_sections = 0;
        int total_sections = 0;
        for (int subject = 0; subject <= 1; ++subject) {
            std::vector<int> rows;
            for (std::size_t i = 0; i < task.test_subjects.size(); ++i) {
                if (task.test_subjects[i] == subject) rows.push_back(static_cast<int>(i));
            }
            for (std::size_t at = 0; at < rows.size(); at += static_cast<std::size_t>(section_size)) {
                SectionRecord rec;
                rec.index = section_index++;
                rec.true_label = subject;
                const std::size_t end =
                    std::min(rows.size(), at + static_cast<std::size_t>(section_size));
                for (std::size_t i = at; i < end; ++i) {
                    rec.votes.push_back(test_pred(rows[i]));
                }
                rec.predicted = mode_label(rec.votes);
                correct_sections += rec.predicted == subject ? 1 : 0;
                ++total_sections;
                report.sections.push_back(std::move(rec));
            }
        }
        report.sectioned_accuracy =
            total_sections > 0 ? double(correct_sections) / double(total_sections) : 0.0;
    }
    return report;
}

MiBundle assemble_mi_bundle(const PreparedTask& task, const MiTrainConfig& cfg,
                            ClassifierModel model, int subject_id) {
    MiBundle bundle;
    bundle.subject_id = subject_id;
    bundle.filter = cfg.filter;
    bundle.cleaner = task.cleaner;
    bundle.extractor = cfg.extractor;
    bundle.csp = task.csp;
    bundle.standardizer = task.standardizer;
    bundle.model = std::move(model);
    bundle.feature_names = task.feature_names;
    bundle.meta = {cfg.seed, cfg.train_fraction, static_cast<int>(task.split.train.size()),
                   static_cast<int>(task.split.test.size())};
    return bundle;
}

GateBundle assemble_gate_bundle(const PreparedTask& task, const GateTrainConfig& cfg,
                                ClassifierModel model) {
    GateBundle bundle;
    bundle.filter = cfg.filter;
    bundle.extractor = cfg.extractor;
    bundle.csp = task.csp;
    bundle.standardizer = task.standardizer;
    bundle.model = std::move(model);
    bundle.feature_names = task.feature_names;
    bundle.section_size = cfg.section_size;
    bundle.meta = {cfg.seed, cfg.train_fraction, static_cast<int>(task.split.train.size()),
                   static_cast<int>(task.split.test.size())};
    return bundle;
}

std::pair<MiBundle, EvaluationReport> train_mi(const TrialSet& trials, const MiTrainConfig& cfg,
                                               std::optional<SplitIndices> split_override) {
    const PreparedTask task = prepare_mi_task(trials, cfg, split_override);
    ClassifierModel model =
        fit_classifier(cfg.kind, task.train_X, task.train_y, cfg.hyper, mix_seed(cfg.seed, "fit"));
    const int subject = trials.trials.front().subject_id;
    EvaluationReport report = evaluate_on_prepared(task, model, "mi", subject, 0, cfg.seed);
    report.classifier = classifier_kind_to_string(cfg.kind);
    return {assemble_mi_bundle(task, cfg, std::move(model), subject), std::move(report)};
}

std::pair<GateBundle, EvaluationReport> train_gate(
    const TrialSet& trials1, const TrialSet& trials2, const GateTrainConfig& cfg,
    std::optional<std::pair<SplitIndices, SplitIndices>> split_override) {
    const PreparedTask task = prepare_gate_task(trials1, trials2, cfg, split_override);
    ClassifierModel model =
        fit_classifier(cfg.kind, task.train_X, task.train_y, cfg.hyper, mix_seed(cfg.seed, "fit"));
    EvaluationReport report =
        evaluate_on_prepared(task, model, "gate", -1, cfg.section_size, cfg.seed);
    report.classifier = classifier_kind_to_string(cfg.kind);
    return {assemble_gate_bundle(task, cfg, std::move(model)), std::move(report)};
}

int sectioned_predict(const GateBundle& gate, const Eigen::MatrixXd& section_rows) {
    if (section_rows.rows() == 0) {
        throw Error(ErrorCode::EmptySection, "section contains no trials");
    }
    if (section_rows.rows() > gate.section_size) {
        throw Error(ErrorCode::InvalidArgument, "section exceeds the configured size");
    }
    std::vector<int> votes;
    for (Eigen::Index i = 0; i < section_rows.rows(); ++i) {
        votes.push_back(predict(gate.model, section_rows.row(i).transpose()));
    }
    return mode_label(votes);
}

std::pair<int, std::vector<int>> dispatch_predict(const DispatchPipeline& p,
                                                  const std::vector<Trial>& run,
                                                  const std::vector<ChannelInfo>& channels,
                                                  double fs) {
    if (run.empty()) throw Error(ErrorCode::EmptySection, "dispatch run is empty");

    Eigen::MatrixXd gate_rows(static_cast<Eigen::Index>(run.size()),
                              static_cast<Eigen::Index>(p.gate.feature_names.size()));
    for (std::size_t i = 0; i < run.size(); ++i) {
        gate_rows.row(static_cast<Eigen::Index>(i)) =
            p.gate.features_for(run[i], channels, fs).transpose();
    }
    const int subject = sectioned_predict(p.gate, gate_rows);

    const auto it = p.mi.find(subject);
    if (it == p.mi.end()) {
        throw Error(ErrorCode::UnknownSubjectLabel,
                    "gate selected subject " + std::to_string(subject) + " with no MI bundle");
    }
    std::vector<int> labels;
    for (const auto& trial : run) {
        labels.push_back(it->second.predict_trial(trial, channels, fs));
    }
    return {subject, labels};
}

EvaluationReport evaluate_dispatch(const DispatchPipeline& p, const TrialSet& test1,
                                   const TrialSet& test2, std::uint64_t seed) {
    EvaluationReport report;
    report.task = "dispatch";
    report.seed = seed;
    report.classifier = "dispatch";
    report.confusion = Eigen::Matrix2i::Zero();

    int runs_total = 0, runs_correct = 0;
    int trials_total = 0, trials_correct = 0, oracle_correct = 0;
    int section_index = 0;

    const TrialSet* sets[2] = {&test1, &test2};
    for (int subject = 0; subject <= 1; ++subject) {
        const TrialSet& ts = *sets[subject];
        if (ts.empty()) continue;
        const auto oracle_it = p.mi.find(subject);
        if (oracle_it == p.mi.end()) {
            throw Error(ErrorCode::UnknownSubjectLabel,
                        "no MI bundle for subject " + std::to_string(subject));
        }

        std::mt19937_64 rng(mix_seed(seed, "runs" + std::to_string(subject)));
        const std::vector<int> order = shuffled_indices(static_cast<int>(ts.size()), rng);

        for (std::size_t at = 0; at < order.size();
             at += static_cast<std::size_t>(p.gate.section_size)) {
            const std::size_t end =
                std::min(order.size(), at + static_cast<std::size_t>(p.gate.section_size));
            std::vector<Trial> run;
            for (std::size_t i = at; i < end; ++i) {
                run.push_back(ts.trials[static_cast<std::size_t>(order[i])]);
            }
            auto [routed, labels] = dispatch_predict(p, run, ts.channels, ts.fs);

            SectionRecord rec;
            rec.index = section_index++;
            rec.true_label = subject;
            rec.predicted = routed;
            rec.votes = labels;
            report.sections.push_back(std::move(rec));

            ++runs_total;
            runs_correct += routed == subject ? 1 : 0;
            for (std::size_t i = 0; i < run.size(); ++i) {
                ++trials_total;
                trials_correct += labels[i] == run[i].label ? 1 : 0;
                report.confusion(run[i].label, labels[i]) += 1;
                const int oracle_label =
                    oracle_it->second.predict_trial(run[i], ts.channels, ts.fs);
                oracle_correct += oracle_label == run[i].label ? 1 : 0;
            }
        }
    }

    report.n_test = trials_total;
    report.gate_routing_accuracy = runs_total > 0 ? double(runs_correct) / double(runs_total) : 0.0;
    report.end_to_end_mi_accuracy =
        trials_total > 0 ? double(trials_correct) / double(trials_total) : 0.0;
    report.oracle_gate_mi_accuracy =
        trials_total > 0 ? double(oracle_correct) / double(trials_total) : 0.0;
    report.test_accuracy = report.end_to_end_mi_accuracy;
    return report;
}

std::string EvaluationReport::to_json() const {
    json j;
    j["task"] = task;
    j["subject"] = subject_id;
    j["classifier"] = classifier;
    j["seed"] = seed;
    j["config_fingerprint"] = config_fingerprint;
    j["counts"] = {{"train", n_train}, {"test", n_test}};
    j["train_accuracy"] = train_accuracy;
    j["test_accuracy"] = test_accuracy;
    j["confusion"] = {{confusion(0, 0), confusion(0, 1)}, {confusion(1, 0), confusion(1, 1)}};
    if (task == "gate") {
        j["sectioned_accuracy"] = sectioned_accuracy;
        j["per_trial_accuracy"] = per_trial_accuracy;
    }
    if (task == "dispatch") {
        j["gate_routing_accuracy"] = gate_routing_accuracy;
        j["end_to_end_mi_accuracy"] = end_to_end_mi_accuracy;
        j["oracle_gate_mi_accuracy"] = oracle_gate_mi_accuracy;
    }
    if (!sections.empty()) {
        json sections_json = json::array();
        for (const auto& s : sections) {
            sections_json.push_back({{"index", s.index},
                                     {"true", s.true_label},
                                     {"predicted", s.predicted},
                                     {"votes", s.votes}});
        }
        j["sections"] = sections_json;
    }
    return j.dump(2);
}

std::string mi_bundle_to_json(const MiBundle& b, const std::string& config_fingerprint) {
    json j;
    j["format_version"] = 1;
    j["type"] = "mi_bundle";
    j["subject"] = b.subject_id;
    j["config_fingerprint"] = config_fingerprint;
    j["filter"] = filter_to_json(b.filter);
    j["ica"] = cleaner_to_json(b.cleaner);
    j["extractor"] = extractor_to_json(b.extractor, b.csp);
    j["standardizer"] = standardizer_to_json(b.standardizer);
    j["classifier"] = json::parse(classifier_to_json(b.model, b.feature_names));
    j["feature_names"] = b.feature_names;
    j["meta"] = meta_to_json(b.meta);
    return j.dump(2);
}

MiBundle mi_bundle_from_json(const std::string& text, std::string* fingerprint_out) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ModelMismatch, "bundle file is not valid JSON");
    try {
        if (j.at("type").get<std::string>() != "mi_bundle") {
            throw Error(ErrorCode::ModelMismatch, "not an MI bundle");
        }
        MiBundle b;
        b.subject_id = j.at("subject").get<int>();
        if (fingerprint_out) *fingerprint_out = j.at("config_fingerprint").get<std::string>();
        b.filter = filter_from_json(j.at("filter"));
        b.cleaner = cleaner_from_json(j.at("ica"));
        extractor_from_json(j.at("extractor"), b.extractor, b.csp);
        b.standardizer = standardizer_from_json(j.at("standardizer"));
        b.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        b.model = classifier_from_json(j.at("classifier").dump(), b.feature_names);
        b.meta = meta_from_json(j.at("meta"));
        return b;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ModelMismatch, std::string("malformed bundle: ") + e.what());
    }
}

std::string gate_bundle_to_json(const GateBundle& b, const std::string& config_fingerprint) {
    json j;
    j["format_version"] = 1;
    j["type"] = "gate_bundle";
    j["config_fingerprint"] = config_fingerprint;
    j["filter"] = filter_to_json(b.filter);
    j["extractor"] = extractor_to_json(b.extractor, b.csp);
    j["standardizer"] = standardizer_to_json(b.standardizer);
    j["classifier"] = json::parse(classifier_to_json(b.model, b.feature_names));
    j["feature_names"] = b.feature_names;
    j["section_size"] = b.section_size;
    j["meta"] = meta_to_json(b.meta);
    return j.dump(2);
}

GateBundle gate_bundle_from_json(const std::string& text, std::string* fingerprint_out) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ModelMismatch, "bundle file is not valid JSON");
    try {
        if (j.at("type").get<std::string>() != "gate_bundle") {
            throw Error(ErrorCode::ModelMismatch, "not a gate bundle");
        }
        GateBundle b;
        if (fingerprint_out) *fingerprint_out = j.at("config_fingerprint").get<std::string>();
        b.filter = filter_from_json(j.at("filter"));
        extractor_from_json(j.at("extractor"), b.extractor, b.csp);
        b.standardizer = standardizer_from_json(j.at("standardizer"));
        b.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        b.model = classifier_from_json(j.at("classifier").dump(), b.feature_names);
        b.section_size = j.at("section_size").get<int>();
        b.meta = meta_from_json(j.at("meta"));
        return b;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ModelMismatch, std::string("malformed bundle: ") + e.what());
    }
}

}  // namespace mibci

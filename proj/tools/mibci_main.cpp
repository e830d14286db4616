// Command-line front end: synthesize data, train the per-subject MI
// classifiers and the cross-subject gate, simulate gated dispatch on held-out
// trials, and emit plot data.
//
// Exit codes: 0 success, 2 validation/config error, 3 numeric divergence,
// 4 model/data incompatibility.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "mibci/config.hpp"
#include "mibci/dataset.hpp"
#include "mibci/pipeline.hpp"

namespace {

using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIncompatible = 4;

int exit_code_for(const mibci::Error& e) {
    switch (e.code()) {
        case mibci::ErrorCode::NonFiniteLoss:
            return kExitDivergence;
        case mibci::ErrorCode::ModelMismatch:
        case mibci::ErrorCode::UnknownSubjectLabel:
            return kExitIncompatible;
        default:
            return kExitValidation;
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mibci::Error(mibci::ErrorCode::IoError, "cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw mibci::Error(mibci::ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

std::string display_name(const std::string& kind) {
    if (kind == "logreg") return "LogReg";
    if (kind == "lda") return "LDA";
    if (kind == "gnb") return "NB";
    if (kind == "knn") return "kNN";
    if (kind == "svm") return "SVM";
    if (kind == "ensemble") return "Ensemble";
    return kind;
}

mibci::MiTrainConfig mi_config_for(const mibci::RunConfig& cfg, int subject,
                                   mibci::ClassifierKind kind) {
    mibci::MiTrainConfig out;
    out.filter = cfg.filter;
    out.ica = cfg.ica[static_cast<std::size_t>(subject)];
    out.extractor = cfg.extractor;
    out.kind = kind;
    out.hyper = cfg.hyper;
    out.train_fraction = cfg.train_fraction;
    out.seed = mibci::mix_seed(cfg.seed, "subject" + std::to_string(subject));
    return out;
}

mibci::GateTrainConfig gate_config_for(const mibci::RunConfig& cfg, mibci::ClassifierKind kind) {
    mibci::GateTrainConfig out;
    out.filter = cfg.filter;
    out.extractor = cfg.extractor;
    out.kind = kind;
    out.hyper = cfg.hyper;
    out.train_fraction = cfg.train_fraction;
    out.seed = mibci::mix_seed(cfg.seed, "gate");
    out.section_size = cfg.section_size;
    return out;
}

mibci::RunConfig load_config_checked(const std::string& config_path,
                                     std::optional<std::uint64_t> seed_override) {
    if (config_path.empty()) {
        throw mibci::Error(mibci::ErrorCode::ConfigError, "--config is required");
    }
    mibci::RunConfig cfg = mibci::load_run_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    return cfg;
}

int run_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed,
              const std::string& name_override) {
    mibci::SynthSpec spec = mibci::parse_synth_spec(read_text_file(spec_path));
    if (!name_override.empty()) spec.name = name_override;
    const mibci::Recording rec = mibci::synthesize_recording(spec, seed);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path header = std::filesystem::path(out_dir) / (spec.name + ".json");
    mibci::save_recording(rec, header);
    std::printf("synth: wrote %s (%lld samples, %zu channels, %zu events, seed %llu)\n",
                header.string().c_str(), static_cast<long long>(rec.n_samples()),
                rec.channels.size(), rec.events.size(), static_cast<unsigned long long>(seed));
    return 0;
}

struct TrainOutput {
    json report;
    mibci::DispatchPipeline pipeline;
    std::string table_text;
};

TrainOutput run_train_pipeline(const mibci::RunConfig& cfg) {
    if (cfg.subjects.size() != 2) {
        throw mibci::Error(mibci::ErrorCode::ConfigError, "config must list two subjects under data");
    }
    const std::string fingerprint = cfg.fingerprint();

    TrainOutput out;
    out.report["config_fingerprint"] = fingerprint;
    out.report["seed"] = cfg.seed;

    std::vector<mibci::TrialSet> trials;
    std::vector<mibci::PreparedTask> tasks;
    std::vector<mibci::SplitIndices> splits;

    json mi_reports = json::array();
    std::vector<std::vector<double>> table_rows;  // [task][kind] accuracy

    for (int s = 0; s < 2; ++s) {
        trials.push_back(mibci::load_subject_trials(cfg, s));
        const mibci::MiTrainConfig prep_cfg =
            mi_config_for(cfg, s, mibci::classifier_kind_from_string(cfg.mi_selected[s]));
        tasks.push_back(mibci::prepare_mi_task(trials.back(), prep_cfg));
        splits.push_back(tasks.back().split);

        json per_kind;
        std::vector<double> row;
        for (const auto& kind_name : cfg.table_classifiers) {
            const auto kind = mibci::classifier_kind_from_string(kind_name);
            mibci::ClassifierModel model =
                mibci::fit_classifier(kind, tasks.back().train_X, tasks.back().train_y, cfg.hyper,
                                      mibci::mix_seed(prep_cfg.seed, "fit"));
            mibci::EvaluationReport rep =
                mibci::evaluate_on_prepared(tasks.back(), model, "mi", s, 0, prep_cfg.seed);
            rep.classifier = kind_name;
            rep.config_fingerprint = fingerprint;
            per_kind[kind_name] = json::parse(rep.to_json());
            row.push_back(rep.test_accuracy);
            if (kind_name == cfg.mi_selected[s]) {
                out.pipeline.mi.emplace(
                    s, mibci::assemble_mi_bundle(tasks.back(), prep_cfg, std::move(model), s));
            }
        }
        mi_reports.push_back(per_kind);
        table_rows.push_back(row);
    }
    out.report["mi"] = mi_reports;

    const mibci::GateTrainConfig gate_prep =
        gate_config_for(cfg, mibci::classifier_kind_from_string(cfg.gate_selected));
    const mibci::PreparedTask gate_task = mibci::prepare_gate_task(
        trials[0], trials[1], gate_prep, std::make_pair(splits[0], splits[1]));

    json gate_reports;
    std::vector<double> gate_row;
    for (const auto& kind_name : cfg.table_classifiers) {
        const auto kind = mibci::classifier_kind_from_string(kind_name);
        mibci::ClassifierModel model =
            mibci::fit_classifier(kind, gate_task.train_X, gate_task.train_y, cfg.hyper,
                                  mibci::mix_seed(gate_prep.seed, "fit"));
        mibci::EvaluationReport rep = mibci::evaluate_on_prepared(gate_task, model, "gate", -1,
                                                                  cfg.section_size, gate_prep.seed);
        rep.classifier = kind_name;
        rep.config_fingerprint = fingerprint;
        gate_reports[kind_name] = json::parse(rep.to_json());
        gate_row.push_back(rep.sectioned_accuracy);
        if (kind_name == cfg.gate_selected) {
            out.pipeline.gate = mibci::assemble_gate_bundle(gate_task, gate_prep, std::move(model));
        }
    }
    out.report["gate"] = gate_reports;
    table_rows.push_back(gate_row);
    out.report["selected"] = {{"mi", cfg.mi_selected}, {"gate", cfg.gate_selected}};

    // Accuracy table: MI rows per subject plus the sectioned cross-subject row.
    std::string table = "Task      ";
    for (const auto& kind_name : cfg.table_classifiers) {
        char cell[16];
        std::snprintf(cell, sizeof(cell), "| %-8s", display_name(kind_name).c_str());
        table += cell;
    }
    table += "\n";
    const std::vector<std::string> row_names = {"MI-sub 1", "MI-sub 2", "X-sub"};
    for (std::size_t r = 0; r < table_rows.size(); ++r) {
        char head[16];
        std::snprintf(head, sizeof(head), "%-10s", row_names[r].c_str());
        table += head;
        for (double acc : table_rows[r]) {
            char cell[16];
            std::snprintf(cell, sizeof(cell), "| %6.2f%% ", 100.0 * acc);
            table += cell;
        }
        table += "\n";
    }
    out.table_text = table;
    return out;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override, bool show_table) {
    const mibci::RunConfig cfg = load_config_checked(config_path, seed_override);
    TrainOutput result = run_train_pipeline(cfg);
    const std::string fingerprint = cfg.fingerprint();

    const std::filesystem::path out(out_dir);
    write_text_file(out / "models" / "gate.json",
                    mibci::gate_bundle_to_json(result.pipeline.gate, fingerprint));
    for (const auto& [subject, bundle] : result.pipeline.mi) {
        write_text_file(out / "models" / ("mi_subject" + std::to_string(subject) + ".json"),
                        mibci::mi_bundle_to_json(bundle, fingerprint));
    }
    write_text_file(out / "reports" / "train_report.json", result.report.dump(2) + "\n");
    if (show_table) {
        write_text_file(out / "reports" / "table.txt", result.table_text);
        std::fputs(result.table_text.c_str(), stdout);
    }
    std::printf("train: models and reports written to %s (fingerprint %s)\n", out_dir.c_str(),
                fingerprint.c_str());
    return 0;
}

int run_dispatch_sim(const std::string& config_path, const std::string& models_dir,
                     const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
    const mibci::RunConfig cfg = load_config_checked(config_path, seed_override);
    const std::string fingerprint = cfg.fingerprint();
    const std::filesystem::path models(models_dir);

    mibci::DispatchPipeline pipeline;
    std::string gate_fp;
    pipeline.gate = mibci::gate_bundle_from_json(read_text_file(models / "gate.json"), &gate_fp);
    if (gate_fp != fingerprint) {
        throw mibci::Error(mibci::ErrorCode::ModelMismatch,
                           "gate bundle was trained under a different configuration");
    }
    for (int s = 0; s < 2; ++s) {
        std::string fp;
        mibci::MiBundle bundle = mibci::mi_bundle_from_json(
            read_text_file(models / ("mi_subject" + std::to_string(s) + ".json")), &fp);
        if (fp != fingerprint) {
            throw mibci::Error(mibci::ErrorCode::ModelMismatch,
                               "MI bundle was trained under a different configuration");
        }
        pipeline.mi.emplace(s, std::move(bundle));
    }
    if (cfg.extractor.kind == mibci::kernels::ExtractorKind::LogSubbandPower &&
        pipeline.gate.feature_names != cfg.extractor.layout.feature_names()) {
        throw mibci::Error(mibci::ErrorCode::ModelMismatch,
                           "models use a different feature layout than the configuration");
    }

    // Rebuild the held-out partitions from the seeded splits used in training.
    std::vector<mibci::TrialSet> tests;
    for (int s = 0; s < 2; ++s) {
        const mibci::TrialSet all = mibci::load_subject_trials(cfg, s);
        const std::uint64_t split_seed = mibci::mix_seed(cfg.seed, "subject" + std::to_string(s));
        const mibci::SplitIndices split = mibci::train_test_split_indices(
            static_cast<int>(all.size()), cfg.train_fraction, split_seed);
        mibci::TrialSet test;
        test.semantics = all.semantics;
        test.channels = all.channels;
        test.fs = all.fs;
        for (int i : split.test) test.trials.push_back(all.trials[static_cast<std::size_t>(i)]);
        tests.push_back(std::move(test));
    }

    mibci::EvaluationReport report = mibci::evaluate_dispatch(
        pipeline, tests[0], tests[1], mibci::mix_seed(cfg.seed, "dispatch"));
    report.config_fingerprint = fingerprint;

    write_text_file(std::filesystem::path(out_dir) / "reports" / "dispatch_report.json",
                    report.to_json() + "\n");
    std::printf("dispatch-sim: gate routing %.2f%%, end-to-end MI %.2f%%, oracle-gate MI %.2f%%\n",
                100.0 * report.gate_routing_accuracy, 100.0 * report.end_to_end_mi_accuracy,
                100.0 * report.oracle_gate_mi_accuracy);
    return 0;
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

int run_plot_features(const mibci::RunConfig& cfg, int subject, const std::string& out_dir,
                      bool svg) {
    const mibci::TrialSet trials = mibci::load_subject_trials(cfg, subject);
    const mibci::FilterCoefficients coeffs =
        mibci::design_butterworth_bandpass(cfg.filter.order, cfg.filter.band, trials.fs);
    const mibci::TrialSet filtered = mibci::kernels::filter_trials(trials, coeffs);
    mibci::kernels::FeatureExtractor fx{cfg.extractor.kind, cfg.extractor.layout, std::nullopt};
    if (cfg.extractor.kind == mibci::kernels::ExtractorKind::Csp) {
        fx.csp = mibci::fit_csp(filtered, cfg.extractor.csp_filters, cfg.extractor.layout.channels);
    }
    const mibci::FeatureMatrix fm = mibci::kernels::extract_features(filtered, fx);
    const mibci::Standardizer st = mibci::fit_standardizer(fm.X);
    const Eigen::MatrixXd Z = mibci::apply_standardizer(st, fm.X);
    const mibci::PcaModel pca = mibci::fit_pca(Z, 2);
    const Eigen::MatrixXd P = mibci::pca_project(pca, Z);

    std::string csv = "pc1,pc2,label\n";
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        csv += csv_double(P(i, 0)) + "," + csv_double(P(i, 1)) + "," + std::to_string(fm.y(i)) + "\n";
    }
    const std::filesystem::path out(out_dir);
    const std::string base = "features_subject" + std::to_string(subject);
    write_text_file(out / (base + ".csv"), csv);

    if (svg) {
        // Self-contained scatter; red = label 1 (right hand), blue = label 0.
        const double size = 480.0, margin = 40.0;
        const double xmin = P.col(0).minCoeff(), xmax = P.col(0).maxCoeff();
        const double ymin = P.col(1).minCoeff(), ymax = P.col(1).maxCoeff();
        const double xspan = xmax > xmin ? xmax - xmin : 1.0;
        const double yspan = ymax > ymin ? ymax - ymin : 1.0;
        std::string body;
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            const double cx = margin + (P(i, 0) - xmin) / xspan * (size - 2 * margin);
            const double cy = size - margin - (P(i, 1) - ymin) / yspan * (size - 2 * margin);
            char circle[160];
            std::snprintf(circle, sizeof(circle),
                          "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" "
                          "fill-opacity=\"0.7\"/>\n",
                          cx, cy, fm.y(i) == 1 ? "red" : "blue");
            body += circle;
        }
        char frame[256];
        std::snprintf(frame, sizeof(frame),
                      "  <rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                      "stroke=\"black\"/>\n",
                      margin, margin, size - 2 * margin, size - 2 * margin);
        const std::string svg_text =
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
            "viewBox=\"0 0 480 480\">\n" +
            std::string(frame) + body + "</svg>\n";
        write_text_file(out / (base + ".svg"), svg_text);
    }
    std::printf("plot: wrote %s/%s.csv (%lld points)\n", out_dir.c_str(), base.c_str(),
                static_cast<long long>(P.rows()));
    return 0;
}

int run_plot_ica(const mibci::RunConfig& cfg, int subject, const std::string& out_dir,
                 double duration_s) {
    const mibci::TrialSet trials = mibci::load_subject_trials(cfg, subject);
    const mibci::FilterCoefficients coeffs =
        mibci::design_butterworth_bandpass(cfg.filter.order, cfg.filter.band, trials.fs);
    const mibci::TrialSet filtered = mibci::kernels::filter_trials(trials, coeffs);

    const std::vector<int> eeg_cols = filtered.indices_of_kind(mibci::ChannelKind::Eeg);
    const std::vector<int> eog_cols = filtered.indices_of_kind(mibci::ChannelKind::Eog);
    if (eeg_cols.empty() || eog_cols.empty()) {
        throw mibci::Error(mibci::ErrorCode::MissingChannel, "need EEG and EOG channels");
    }

    const Eigen::Index window = filtered.trials.front().data.rows();
    Eigen::Index rows = 0;
    const Eigen::Index max_rows =
        duration_s > 0.0 ? static_cast<Eigen::Index>(duration_s * filtered.fs)
                         : window * static_cast<Eigen::Index>(filtered.size());
    std::vector<const mibci::Trial*> used;
    for (const auto& t : filtered.trials) {
        if (rows >= max_rows) break;
        used.push_back(&t);
        rows += window;
    }
    Eigen::MatrixXd eeg(rows, static_cast<Eigen::Index>(eeg_cols.size()));
    Eigen::MatrixXd eog(rows, static_cast<Eigen::Index>(eog_cols.size()));
    Eigen::Index at = 0;
    for (const auto* t : used) {
        const Eigen::Index take = std::min(window, rows - at);
        for (std::size_t c = 0; c < eeg_cols.size(); ++c) {
            eeg.block(at, static_cast<Eigen::Index>(c), take, 1) =
                t->data.col(eeg_cols[c]).head(take);
        }
        for (std::size_t c = 0; c < eog_cols.size(); ++c) {
            eog.block(at, static_cast<Eigen::Index>(c), take, 1) =
                t->data.col(eog_cols[c]).head(take);
        }
        at += take;
    }

    const auto& ic = cfg.ica[static_cast<std::size_t>(subject)];
    const mibci::IcaModel model =
        mibci::fast_ica(eeg, static_cast<int>(eeg_cols.size()),
                        mibci::mix_seed(cfg.seed, "plot-ica"), ic.tol, ic.max_iter);
    const Eigen::MatrixXd S = model.sources(eeg);

    std::string csv = "t";
    for (int i = 0; i < model.n_components; ++i) csv += ",ic" + std::to_string(i);
    for (int c : eog_cols) {
        csv += "," + filtered.channels[static_cast<std::size_t>(c)].name;
    }
    csv += "\n";
    for (Eigen::Index r = 0; r < S.rows(); ++r) {
        csv += csv_double(double(r) / filtered.fs);
        for (Eigen::Index c = 0; c < S.cols(); ++c) csv += "," + csv_double(S(r, c));
        for (Eigen::Index c = 0; c < eog.cols(); ++c) csv += "," + csv_double(eog(r, c));
        csv += "\n";
    }
    const std::string base = "ica_subject" + std::to_string(subject);
    write_text_file(std::filesystem::path(out_dir) / (base + ".csv"), csv);
    std::printf("plot: wrote %s/%s.csv (%lld rows, %d components)\n", out_dir.c_str(), base.c_str(),
                static_cast<long long>(S.rows()), model.n_components);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEG motor-imagery pipeline with a cross-subject gate"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed_value = 0;
    bool show_table = false;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic recording from a spec");
    std::string spec_path, synth_name;
    std::uint64_t synth_seed = 0;
    synth->add_option("spec", spec_path, "synthesis spec (JSON)")->required();
    synth->add_option("--out", out_dir, "output directory");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--name", synth_name, "override the recording name");

    // convert
    auto* convert = app.add_subcommand("convert", "convert a native dataset container");

    // train
    auto* train = app.add_subcommand("train", "train MI classifiers and the cross-subject gate");
    train->add_option("--config", config_path, "run configuration (JSON)")->required();
    train->add_option("--out", out_dir, "output directory");
    train->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_override = seed_value; });
    train->add_flag("--table", show_table, "print the accuracy table");

    // dispatch-sim
    auto* dispatch = app.add_subcommand("dispatch-sim", "evaluate gated dispatch on held-out data");
    std::string models_dir;
    dispatch->add_option("--config", config_path, "run configuration (JSON)")->required();
    dispatch->add_option("--models", models_dir, "directory with trained bundles")->required();
    dispatch->add_option("--out", out_dir, "output directory");
    dispatch->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_override = seed_value; });

    // plot
    auto* plot = app.add_subcommand("plot", "emit CSV (and SVG) plot data");
    std::string plot_kind;
    int plot_subject = 0;
    bool plot_svg = false;
    double plot_duration = 30.0;
    plot->add_option("kind", plot_kind, "features | ica")->required();
    plot->add_option("--config", config_path, "run configuration (JSON)")->required();
    plot->add_option("--subject", plot_subject, "subject index (0 or 1)");
    plot->add_option("--out", out_dir, "output directory");
    plot->add_flag("--svg", plot_svg, "also write an SVG scatter (features only)");
    plot->add_option("--duration-s", plot_duration, "seconds of signal to emit (ica only)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(spec_path, out_dir, synth_seed, synth_name);
        if (convert->parsed()) {
            std::fputs(
                "convert: native container parsing is not built in.\n"
                "Convert each session to the canonical pair <name>.json + <name>.f32 described in\n"
                "README.md (JSON header with fs/channels/events, raw little-endian float32 samples\n"
                "in [sample][channel] order), then list the headers in the run configuration.\n",
                stderr);
            return kExitValidation;
        }
        if (train->parsed()) return run_train(config_path, out_dir, seed_override, show_table);
        if (dispatch->parsed()) {
            return run_dispatch_sim(config_path, models_dir, out_dir, seed_override);
        }
        if (plot->parsed()) {
            const mibci::RunConfig cfg = load_config_checked(config_path, seed_override);
            if (plot_subject < 0 || plot_subject > 1) {
                throw mibci::Error(mibci::ErrorCode::ConfigError, "--subject must be 0 or 1");
            }
            if (plot_kind == "features") {
                return run_plot_features(cfg, plot_subject, out_dir, plot_svg);
            }
            if (plot_kind == "ica") return run_plot_ica(cfg, plot_subject, out_dir, plot_duration);
            throw mibci::Error(mibci::ErrorCode::ConfigError,
                               "plot kind must be 'features' or 'ica'");
        }
    } catch (const mibci::Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", mibci::error_code_name(e.code()), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return 0;
}

// Times the OpenMP kernels against their serial references on a synthetic
// workload and verifies that both produce identical output.
//
//   ./mibci_bench [trials-per-class]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mibci/kernels.hpp"
#include "mibci/dataset.hpp"

using namespace mibci;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename F>
double time_of(F&& f) {
    const auto start = std::chrono::steady_clock::now();
    f();
    return seconds_since(start);
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-22s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   identical %s\n", name,
                serial_s, parallel_s, serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    const int per_class = argc > 1 ? std::atoi(argv[1]) : 150;

    SynthSpec spec;
    spec.name = "bench";
    spec.trials_per_class = per_class;
    spec.trial_s = 4.0;
    spec.burst_start_s = 0.5;
    spec.burst_end_s = 3.5;
    spec.classes = {{0, 10.0, 8.0, "C3"}, {1, 10.0, 8.0, "C4"}};
    spec.blink_rate_hz = 0.2;

    const Recording rec = synthesize_recording(spec, 1);
    const TrialSet trials = epoch_trials(rec, 0.5, 3.5, 0);
    const FilterCoefficients coeffs = design_butterworth_bandpass(4, {2.0, 60.0}, rec.fs);

#ifdef _OPENMP
    std::printf("threads: %d, trials: %zu x %lld samples x %lld channels\n", omp_get_max_threads(),
                trials.size(), static_cast<long long>(trials.trials.front().data.rows()),
                static_cast<long long>(trials.trials.front().data.cols()));
#else
    std::printf("OpenMP disabled; both columns run serially\n");
#endif

    TrialSet filtered_serial, filtered_parallel;
    const double t_fs = time_of([&] { filtered_serial = kernels::filter_trials_serial(trials, coeffs); });
    const double t_fp = time_of([&] { filtered_parallel = kernels::filter_trials(trials, coeffs); });
    bool same = true;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        same = same && filtered_serial.trials[i].data == filtered_parallel.trials[i].data;
    }
    report("filter_trials", t_fs, t_fp, same);

    kernels::FeatureExtractor fx;
    fx.layout = SubbandLayout::default_layout();
    FeatureMatrix fm_serial, fm_parallel;
    const double t_es = time_of([&] { fm_serial = kernels::extract_features_serial(filtered_serial, fx); });
    const double t_ep = time_of([&] { fm_parallel = kernels::extract_features(filtered_serial, fx); });
    report("extract_features", t_es, t_ep, fm_serial.X == fm_parallel.X);

    const ClassifierModel model =
        fit_classifier(ClassifierKind::Ensemble, fm_serial.X, fm_serial.y, {});
    Eigen::VectorXi p_serial, p_parallel;
    const double t_ps = time_of([&] { p_serial = predict_batch_serial(model, fm_serial.X); });
    const double t_pp = time_of([&] { p_parallel = kernels::predict_batch(model, fm_serial.X); });
    report("predict_batch", t_ps, t_pp, p_serial == p_parallel);

    return 0;
}

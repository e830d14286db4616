#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mibci/types.hpp"

namespace mibci {

// Canonical on-disk format: a JSON header `<name>.json` describing sampling
// rate, channel layout and cue events, next to a raw `<name>.f32` file of
// little-endian 32-bit floats in row-major [sample][channel] order.
Recording load_recording(const std::filesystem::path& header_path);
void save_recording(const Recording& rec, const std::filesystem::path& header_path);

// Cuts one window per event: samples [onset + round(start*fs), onset + round(end*fs)).
// Trial labels come from the events; ordering is preserved.
TrialSet epoch_trials(const Recording& rec, double window_start_s, double window_end_s,
                      int subject_id);

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

// Seeded uniform shuffle, then |train| = floor(fraction * n). Throws
// DegenerateSplit when either side would be empty.
SplitIndices train_test_split_indices(int n, double train_fraction, std::uint64_t seed);
std::pair<TrialSet, TrialSet> train_test_split(const TrialSet& ts, double train_fraction,
                                               std::uint64_t seed);

// One oscillation profile per class: trials of that class carry a sinusoid
// burst on the target channel during [burst_start_s, burst_end_s) after cue.
struct SynthClassSpec {
    int label = 0;
    double freq_hz = 10.0;
    double amplitude_uv = 8.0;
    std::string channel = "C3";
};

struct SynthSpec {
    std::string name = "synth";
    double fs = 250.0;
    std::vector<std::string> eeg_channels = {"C3", "Cz", "C4"};
    std::vector<std::string> eog_channels = {"EOG1", "EOG2", "EOG3"};
    std::vector<SynthClassSpec> classes;
    int trials_per_class = 100;
    double trial_s = 4.5;  // cue-to-cue spacing
    double burst_start_s = 0.5;
    double burst_end_s = 3.5;
    double noise_sigma_uv = 1.0;
    double blink_rate_hz = 0.0;  // expected blinks per second
    double blink_amplitude_uv = 150.0;
    double blink_duration_s = 0.25;
    double blink_eeg_attenuation = 0.2;
};

SynthSpec parse_synth_spec(const std::string& json_text);
std::string synth_spec_to_json(const SynthSpec& spec);

// Pure function of (spec, seed). Samples are quantized to float32 so the
// in-memory recording round-trips bit-exactly through save/load.
Recording synthesize_recording(const SynthSpec& spec, std::uint64_t seed);

}  // namespace mibci

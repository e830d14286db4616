#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mibci/error.hpp"

namespace mibci {

enum class ChannelKind { Eeg, Eog };

struct ChannelInfo {
    std::string name;  // e.g. "C3", "C4", "Cz", "EOG1"
    ChannelKind kind = ChannelKind::Eeg;
    int index = 0;  // column index into the sample matrix
};

struct Event {
    std::int64_t onset = 0;  // sample index of the cue
    int label = 0;
};

// A multichannel recording in microvolts, samples on rows, channels on
// columns. Immutable after construction by convention; every operation in the
// library takes recordings by const reference and returns new values.
struct Recording {
    double fs = 0.0;
    std::vector<ChannelInfo> channels;
    Eigen::MatrixXd samples;  // [n_samples x n_channels]
    std::vector<Event> events;
    std::string name;  // session tag, carried into epoched trials

    Eigen::Index n_samples() const { return samples.rows(); }
    Eigen::Index n_channels() const { return samples.cols(); }

    // Returns the column index of a channel, or throws MissingChannel.
    int channel_index(const std::string& channel_name) const;
    std::vector<int> indices_of_kind(ChannelKind kind) const;
};

enum class LabelSemantics {
    MotorImagery,  // 0 = left hand, 1 = right hand
    Subject,       // 0 = subject 1, 1 = subject 2
};

struct Trial {
    Eigen::MatrixXd data;  // [n_window_samples x n_channels]
    int label = 0;
    int subject_id = 0;
    std::string source_session;
};

// Epoched trials sharing one window length and channel layout.
struct TrialSet {
    std::vector<Trial> trials;
    LabelSemantics semantics = LabelSemantics::MotorImagery;
    std::vector<ChannelInfo> channels;  // layout shared by every trial
    double fs = 0.0;

    std::size_t size() const { return trials.size(); }
    bool empty() const { return trials.empty(); }
    int channel_index(const std::string& channel_name) const;
    std::vector<int> indices_of_kind(ChannelKind kind) const;
};

struct BandSpec {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

struct Psd {
    Eigen::VectorXd freqs_hz;  // ascending grid, [0, fs/2]
    Eigen::VectorXd power;     // uV^2/Hz, same length
};

// Pearson correlation; defined as 0 when either series has zero variance.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Deterministic seed derivation so that subsystems fed from one base seed do
// not consume identical streams.
std::uint64_t mix_seed(std::uint64_t base, const std::string& tag);

}  // namespace mibci

#include "mibci/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

namespace mibci {

namespace {

using nlohmann::json;

json parse_json_or_throw(const std::string& text, ErrorCode code, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(code, what + ": not valid JSON");
    return j;
}

std::string read_file(const std::filesystem::path& path, ErrorCode code) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(code, "cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Header fields are all required; anything missing or of the wrong type is a
// MalformedHeader.
template <typename T>
T header_field(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::MalformedHeader, std::string("header missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::MalformedHeader, std::string("header field '") + key +
                                                    "' has the wrong type");
    }
}

ChannelKind kind_from_string(const std::string& s) {
    if (s == "EEG") return ChannelKind::Eeg;
    if (s == "EOG") return ChannelKind::Eog;
    throw Error(ErrorCode::MalformedHeader, "unknown channel kind '" + s + "'");
}

// Rejection-sampled bound so shuffles do not depend on the standard library's
// distribution implementations.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

std::vector<int> shuffled_indices(int n, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(bounded_rand(rng, static_cast<std::uint64_t>(i) + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

}  // namespace

Recording load_recording(const std::filesystem::path& header_path) {
    const json j = parse_json_or_throw(read_file(header_path, ErrorCode::IoError),
                                       ErrorCode::MalformedHeader, header_path.string());
    if (header_field<int>(j, "format_version") != 1) {
        throw Error(ErrorCode::MalformedHeader, "unsupported format_version");
    }

    Recording rec;
    rec.fs = header_field<double>(j, "fs");
    if (!(rec.fs > 0.0)) throw Error(ErrorCode::MalformedHeader, "fs must be positive");
    rec.name = header_path.stem().string();

    const json channels = header_field<json>(j, "channels");
    if (!channels.is_array() || channels.empty()) {
        throw Error(ErrorCode::MalformedHeader, "channels must be a non-empty array");
    }
    int index = 0;
    for (const auto& cj : channels) {
        ChannelInfo ch;
        ch.name = header_field<std::string>(cj, "name");
        ch.kind = kind_from_string(header_field<std::string>(cj, "kind"));
        ch.index = index++;
        for (const auto& existing : rec.channels) {
            if (existing.name == ch.name) {
                throw Error(ErrorCode::MalformedHeader, "duplicate channel name " + ch.name);
            }
        }
        rec.channels.push_back(ch);
    }

    const auto n_samples = header_field<std::int64_t>(j, "n_samples");
    if (n_samples <= 0) throw Error(ErrorCode::MalformedHeader, "n_samples must be positive");

    for (const auto& ej : header_field<json>(j, "events")) {
        Event ev;
        ev.onset = header_field<std::int64_t>(ej, "onset");
        ev.label = header_field<int>(ej, "label");
        if (ev.onset < 0 || ev.onset >= n_samples) {
            throw Error(ErrorCode::MalformedHeader, "event onset outside the recording");
        }
        rec.events.push_back(ev);
    }

    const auto data_file = header_field<std::string>(j, "data_file");
    const std::filesystem::path data_path = header_path.parent_path() / data_file;
    const std::string raw = read_file(data_path, ErrorCode::IoError);

    const std::size_t n_ch = rec.channels.size();
    const std::size_t expected = static_cast<std::size_t>(n_samples) * n_ch * sizeof(float);
    if (raw.size() != expected) {
        throw Error(ErrorCode::SampleSizeMismatch,
                    data_path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                        std::to_string(raw.size()));
    }

    rec.samples.resize(n_samples, static_cast<Eigen::Index>(n_ch));
    const char* bytes = raw.data();
    for (std::int64_t s = 0; s < n_samples; ++s) {
        for (std::size_t c = 0; c < n_ch; ++c) {
            float v;
            std::memcpy(&v, bytes + (static_cast<std::size_t>(s) * n_ch + c) * sizeof(float),
                        sizeof(float));
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::NonFiniteSample,
                            "non-finite sample at row " + std::to_string(s) + ", channel " +
                                std::to_string(c));
            }
            rec.samples(s, static_cast<Eigen::Index>(c)) = static_cast<double>(v);
        }
    }
    return rec;
}

void save_recording(const Recording& rec, const std::filesystem::path& header_path) {
    if (!(rec.fs > 0.0) || rec.samples.size() == 0) {
        throw Error(ErrorCode::InvalidArgument, "save_recording: empty or invalid recording");
    }
    std::filesystem::path data_path = header_path;
    data_path.replace_extension(".f32");

    json j;
    j["format_version"] = 1;
    j["fs"] = rec.fs;
    json channels = json::array();
    for (const auto& ch : rec.channels) {
        channels.push_back({{"name", ch.name}, {"kind", ch.kind == ChannelKind::Eeg ? "EEG" : "EOG"}});
    }
    j["channels"] = channels;
    j["n_samples"] = rec.samples.rows();
    json events = json::array();
    for (const auto& ev : rec.events) {
        events.push_back({{"onset", ev.onset}, {"label", ev.label}});
    }
    j["events"] = events;
    j["data_file"] = data_path.filename().string();

    {
        std::ofstream out(header_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + header_path.string());
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + data_path.string());
        for (Eigen::Index s = 0; s < rec.samples.rows(); ++s) {
            for (Eigen::Index c = 0; c < rec.samples.cols(); ++c) {
                const float v = static_cast<float>(rec.samples(s, c));
                out.write(reinterpret_cast<const char*>(&v), sizeof(float));
            }
        }
    }
}

TrialSet epoch_trials(const Recording& rec, double window_start_s, double window_end_s,
                      int subject_id) {
    if (!(window_end_s > window_start_s)) {
        throw Error(ErrorCode::InvalidArgument, "epoch window must have positive length");
    }
    const std::int64_t off_start = std::llround(window_start_s * rec.fs);
    const std::int64_t off_end = std::llround(window_end_s * rec.fs);
    const Eigen::Index window = static_cast<Eigen::Index>(off_end - off_start);

    TrialSet ts;
    ts.semantics = LabelSemantics::MotorImagery;
    ts.channels = rec.channels;
    ts.fs = rec.fs;
    for (const auto& ev : rec.events) {
        const std::int64_t lo = ev.onset + off_start;
        const std::int64_t hi = ev.onset + off_end;
        if (lo < 0 || hi > rec.samples.rows()) {
            throw Error(ErrorCode::WindowOutOfRange,
                        "event at sample " + std::to_string(ev.onset) +
                            " has a window outside the recording");
        }
        Trial t;
        t.data = rec.samples.middleRows(static_cast<Eigen::Index>(lo), window);
        t.label = ev.label;
        t.subject_id = subject_id;
        t.source_session = rec.name;
        ts.trials.push_back(std::move(t));
    }
    return ts;
}

SplitIndices train_test_split_indices(int n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
    }
    const int n_train = static_cast<int>(std::floor(train_fraction * n));
    if (n_train == 0 || n_train == n) {
        throw Error(ErrorCode::DegenerateSplit,
                    "split of " + std::to_string(n) + " trials at fraction " +
                        std::to_string(train_fraction) + " leaves one side empty");
    }
    std::mt19937_64 rng(seed);
    const std::vector<int> order = shuffled_indices(n, rng);
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.test.assign(order.begin() + n_train, order.end());
    return out;
}

std::pair<TrialSet, TrialSet> train_test_split(const TrialSet& ts, double train_fraction,
                                               std::uint64_t seed) {
    const SplitIndices idx =
        train_test_split_indices(static_cast<int>(ts.size()), train_fraction, seed);
    TrialSet train, test;
    train.semantics = test.semantics = ts.semantics;
    train.channels = test.channels = ts.channels;
    train.fs = test.fs = ts.fs;
    for (int i : idx.train) train.trials.push_back(ts.trials[static_cast<std::size_t>(i)]);
    for (int i : idx.test) test.trials.push_back(ts.trials[static_cast<std::size_t>(i)]);
    return {std::move(train), std::move(test)};
}

SynthSpec parse_synth_spec(const std::string& json_text) {
    const json j = parse_json_or_throw(json_text, ErrorCode::InvalidSpec, "synth spec");

    static const std::vector<std::string> allowed = {
        "format_version", "name", "fs", "eeg_channels", "eog_channels", "classes",
        "trials_per_class", "trial_s", "burst_start_s", "burst_end_s", "noise_sigma_uv",
        "blink_rate_hz", "blink_amplitude_uv", "blink_duration_s", "blink_eeg_attenuation"};
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw Error(ErrorCode::InvalidSpec, "unknown synth spec key '" + item.key() + "'");
        }
    }

    SynthSpec spec;
    try {
        if (j.contains("name")) spec.name = j.at("name").get<std::string>();
        if (j.contains("fs")) spec.fs = j.at("fs").get<double>();
        if (j.contains("eeg_channels"))
            spec.eeg_channels = j.at("eeg_channels").get<std::vector<std::string>>();
        if (j.contains("eog_channels"))
            spec.eog_channels = j.at("eog_channels").get<std::vector<std::string>>();
        if (j.contains("classes")) {
            spec.classes.clear();
            for (const auto& cj : j.at("classes")) {
                static const std::vector<std::string> class_keys = {"label", "freq_hz",
                                                                    "amplitude_uv", "channel"};
                for (const auto& item : cj.items()) {
                    if (std::find(class_keys.begin(), class_keys.end(), item.key()) ==
                        class_keys.end()) {
                        throw Error(ErrorCode::InvalidSpec,
                                    "unknown class key '" + item.key() + "'");
                    }
                }
                SynthClassSpec cs;
                cs.label = cj.at("label").get<int>();
                cs.freq_hz = cj.at("freq_hz").get<double>();
                cs.amplitude_uv = cj.at("amplitude_uv").get<double>();
                cs.channel = cj.at("channel").get<std::string>();
                spec.classes.push_back(cs);
            }
        }
        if (j.contains("trials_per_class")) spec.trials_per_class = j.at("trials_per_class").get<int>();
        if (j.contains("trial_s")) spec.trial_s = j.at("trial_s").get<double>();
        if (j.contains("burst_start_s")) spec.burst_start_s = j.at("burst_start_s").get<double>();
        if (j.contains("burst_end_s")) spec.burst_end_s = j.at("burst_end_s").get<double>();
        if (j.contains("noise_sigma_uv")) spec.noise_sigma_uv = j.at("noise_sigma_uv").get<double>();
        if (j.contains("blink_rate_hz")) spec.blink_rate_hz = j.at("blink_rate_hz").get<double>();
        if (j.contains("blink_amplitude_uv"))
            spec.blink_amplitude_uv = j.at("blink_amplitude_uv").get<double>();
        if (j.contains("blink_duration_s"))
            spec.blink_duration_s = j.at("blink_duration_s").get<double>();
        if (j.contains("blink_eeg_attenuation"))
            spec.blink_eeg_attenuation = j.at("blink_eeg_attenuation").get<double>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("synth spec: ") + e.what());
    }
    return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
    json j;
    j["format_version"] = 1;
    j["name"] = spec.name;
    j["fs"] = spec.fs;
    j["eeg_channels"] = spec.eeg_channels;
    j["eog_channels"] = spec.eog_channels;
    json classes = json::array();
    for (const auto& cs : spec.classes) {
        classes.push_back({{"label", cs.label},
                           {"freq_hz", cs.freq_hz},
                           {"amplitude_uv", cs.amplitude_uv},
                           {"channel", cs.channel}});
    }
    j["classes"] = classes;
    j["trials_per_class"] = spec.trials_per_class;
    j["trial_s"] = spec.trial_s;
    j["burst_start_s"] = spec.burst_start_s;
    j["burst_end_s"] = spec.burst_end_s;
    j["noise_sigma_uv"] = spec.noise_sigma_uv;
    j["blink_rate_hz"] = spec.blink_rate_hz;
    j["blink_amplitude_uv"] = spec.blink_amplitude_uv;
    j["blink_duration_s"] = spec.blink_duration_s;
    j["blink_eeg_attenuation"] = spec.blink_eeg_attenuation;
    return j.dump(2);
}

Recording synthesize_recording(const SynthSpec& spec, std::uint64_t seed) {
    if (!(spec.fs > 0.0)) throw Error(ErrorCode::InvalidSpec, "fs must be positive");
    if (spec.trials_per_class <= 0) throw Error(ErrorCode::InvalidSpec, "trial count must be positive");
    if (spec.classes.empty()) throw Error(ErrorCode::InvalidSpec, "at least one class required");
    if (!(spec.trial_s > 0.0) || !(spec.burst_end_s > spec.burst_start_s) ||
        spec.burst_start_s < 0.0 || spec.burst_end_s > spec.trial_s) {
        throw Error(ErrorCode::InvalidSpec, "burst window must fit inside the trial");
    }
    if (spec.noise_sigma_uv < 0.0 || spec.blink_rate_hz < 0.0) {
        throw Error(ErrorCode::InvalidSpec, "noise and blink rate must be nonnegative");
    }
    for (const auto& cs : spec.classes) {
        if (!(cs.amplitude_uv > 0.0) || !(cs.freq_hz > 0.0)) {
            throw Error(ErrorCode::InvalidSpec, "class amplitude and frequency must be positive");
        }
        if (std::find(spec.eeg_channels.begin(), spec.eeg_channels.end(), cs.channel) ==
            spec.eeg_channels.end()) {
            throw Error(ErrorCode::InvalidSpec, "class target channel '" + cs.channel +
                                                    "' is not an EEG channel");
        }
    }

    Recording rec;
    rec.fs = spec.fs;
    rec.name = spec.name;
    int index = 0;
    for (const auto& name : spec.eeg_channels) {
        rec.channels.push_back({name, ChannelKind::Eeg, index++});
    }
    for (const auto& name : spec.eog_channels) {
        rec.channels.push_back({name, ChannelKind::Eog, index++});
    }

    const Eigen::Index trial_len = static_cast<Eigen::Index>(std::llround(spec.trial_s * spec.fs));
    const int n_trials = spec.trials_per_class * static_cast<int>(spec.classes.size());
    const Eigen::Index n_samples = trial_len * n_trials;
    const Eigen::Index n_ch = static_cast<Eigen::Index>(rec.channels.size());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Balanced label sequence, seeded shuffle.
    std::vector<int> labels;
    for (const auto& cs : spec.classes) {
        labels.insert(labels.end(), static_cast<std::size_t>(spec.trials_per_class), cs.label);
    }
    {
        const std::vector<int> order = shuffled_indices(n_trials, rng);
        std::vector<int> shuffled(labels.size());
        for (int i = 0; i < n_trials; ++i) {
            shuffled[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(order[i])];
        }
        labels = std::move(shuffled);
    }

    rec.samples.setZero(n_samples, n_ch);
    for (Eigen::Index s = 0; s < n_samples; ++s) {
        for (Eigen::Index c = 0; c < n_ch; ++c) {
            rec.samples(s, c) = spec.noise_sigma_uv * gauss(rng);
        }
    }

    const Eigen::Index burst_lo = static_cast<Eigen::Index>(std::llround(spec.burst_start_s * spec.fs));
    const Eigen::Index burst_hi = static_cast<Eigen::Index>(std::llround(spec.burst_end_s * spec.fs));
    for (int t = 0; t < n_trials; ++t) {
        const int label = labels[static_cast<std::size_t>(t)];
        const SynthClassSpec* cs = nullptr;
        for (const auto& candidate : spec.classes) {
            if (candidate.label == label) {
                cs = &candidate;
                break;
            }
        }
        const Eigen::Index base = static_cast<Eigen::Index>(t) * trial_len;
        rec.events.push_back({base, label});

        const int col = rec.channel_index(cs->channel);
        const double phase = 2.0 * std::numbers::pi * unif(rng);
        for (Eigen::Index i = burst_lo; i < burst_hi; ++i) {
            const double time_s = double(i) / spec.fs;
            rec.samples(base + i, col) +=
                cs->amplitude_uv * std::sin(2.0 * std::numbers::pi * cs->freq_hz * time_s + phase);
        }
    }

    // Blink artifacts: Hann pulses on every EOG channel, attenuated copies on
    // EEG channels, arrival times from a seeded Poisson process.
    if (spec.blink_rate_hz > 0.0) {
        const Eigen::Index blink_len =
            std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::llround(spec.blink_duration_s * spec.fs)));
        const std::vector<double> eog_weights = {1.0, 0.9, 0.8};
        double t_s = 0.0;
        const double duration_s = double(n_samples) / spec.fs;
        while (true) {
            t_s += -std::log(1.0 - unif(rng)) / spec.blink_rate_hz;
            if (t_s >= duration_s) break;
            const Eigen::Index start = static_cast<Eigen::Index>(std::llround(t_s * spec.fs));
            for (Eigen::Index i = 0; i < blink_len && start + i < n_samples; ++i) {
                const double env =
                    0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(blink_len)));
                const double pulse = spec.blink_amplitude_uv * env;
                for (std::size_t e = 0; e < spec.eog_channels.size(); ++e) {
                    const double w = e < eog_weights.size() ? eog_weights[e] : 1.0;
                    rec.samples(start + i, rec.channel_index(spec.eog_channels[e])) += pulse * w;
                }
                for (const auto& name : spec.eeg_channels) {
                    rec.samples(start + i, rec.channel_index(name)) +=
                        pulse * spec.blink_eeg_attenuation;
                }
            }
        }
    }

    // Quantize to float32 so the recording round-trips bit-exactly through the
    // on-disk format.
    for (Eigen::Index s = 0; s < n_samples; ++s) {
        for (Eigen::Index c = 0; c < n_ch; ++c) {
            rec.samples(s, c) = static_cast<double>(static_cast<float>(rec.samples(s, c)));
        }
    }
    return rec;
}

}  // namespace mibci

#include "mibci/types.hpp"

#include <cmath>

namespace mibci {

namespace {

int find_channel(const std::vector<ChannelInfo>& channels, const std::string& name) {
    for (const auto& ch : channels) {
        if (ch.name == name) return ch.index;
    }
    throw Error(ErrorCode::MissingChannel, "channel not found: " + name);
}

std::vector<int> find_kind(const std::vector<ChannelInfo>& channels, ChannelKind kind) {
    std::vector<int> out;
    for (const auto& ch : channels) {
        if (ch.kind == kind) out.push_back(ch.index);
    }
    return out;
}

}  // namespace

int Recording::channel_index(const std::string& channel_name) const {
    return find_channel(channels, channel_name);
}

std::vector<int> Recording::indices_of_kind(ChannelKind kind) const {
    return find_kind(channels, kind);
}

int TrialSet::channel_index(const std::string& channel_name) const {
    return find_channel(channels, channel_name);
}

std::vector<int> TrialSet::indices_of_kind(ChannelKind kind) const {
    return find_kind(channels, kind);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch, "pearson: series lengths differ");
    }
    const auto n = a.size();
    if (n < 2) return 0.0;
    const double ma = a.mean();
    const double mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma;
    const Eigen::VectorXd db = b.array() - mb;
    const double va = da.squaredNorm();
    const double vb = db.squaredNorm();
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return da.dot(db) / std::sqrt(va * vb);
}

std::uint64_t mix_seed(std::uint64_t base, const std::string& tag) {
    // FNV-1a over the tag, then a splitmix64 finalizer.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t z = base ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace mibci

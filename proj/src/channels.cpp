#include "epsim/channels.hpp"

#include <stdexcept>

namespace epsim {

ChannelPair ChannelGrid::channel_pair(int k) const {
    if (k < 1 || k > kPairCount)
        throw std::out_of_range("channel_pair: k must be in 1..14");
    return ChannelPair{k, ItuChannel{33 - k}, ItuChannel{35 + k}};
}

double ChannelGrid::detuning_hz(int k) const {
    const ChannelPair p = channel_pair(k);
    const std::int64_t slots = p.idler.frequency_grid_units() - pump().frequency_grid_units();
    return 1e11 * static_cast<double>(slots);
}

std::vector<ChannelPair> ChannelGrid::all_pairs() const {
    std::vector<ChannelPair> pairs;
    pairs.reserve(kPairCount);
    for (int k = kPairCount; k >= 1; --k) pairs.push_back(channel_pair(k));
    return pairs;
}

}  // namespace epsim

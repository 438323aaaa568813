#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mqd {

using Rng = std::mt19937_64;

/// Seeds an independent named substream from a master seed, so that consumers of
/// one stream never shift the draws of another.
Rng substream(std::uint64_t master_seed, std::string_view name);

/// The substreams used by a run.
struct RunStreams {
    Rng init;
    Rng selection;
    Rng variation;
    Rng model_init;
    Rng batch_sampling;

    explicit RunStreams(std::uint64_t seed);
};

} // namespace mqd

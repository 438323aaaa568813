#include <mqd/rng.hpp>

#include <iterator>

namespace mqd {

namespace {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, stable across platforms unlike std::hash
std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

Rng substream(std::uint64_t master_seed, std::string_view name)
{
    std::uint64_t state = master_seed ^ fnv1a(name);
    std::uint32_t words[8];
    for (int i = 0; i < 8; i += 2) {
        const std::uint64_t w = splitmix64(state);
        words[i] = static_cast<std::uint32_t>(w);
        words[i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(std::begin(words), std::end(words));
    return Rng(seq);
}

RunStreams::RunStreams(std::uint64_t seed)
    : init(substream(seed, "init")),
      selection(substream(seed, "selection")),
      variation(substream(seed, "variation")),
      model_init(substream(seed, "model-init")),
      batch_sampling(substream(seed, "batch-sampling"))
{
}

} // namespace mqd

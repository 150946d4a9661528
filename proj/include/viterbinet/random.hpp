#ifndef VITERBINET_RANDOM_HPP
#define VITERBINET_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace viterbinet {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of tags
/// (cell coordinates, block index, ...). Order of tags matters.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept
{
    std::uint64_t s = mix_seed(base);
    for (auto t : tags)
        s = mix_seed(s ^ mix_seed(t + 0x632be59bd9b4e019ULL));
    return s;
}

} // namespace viterbinet

#endif

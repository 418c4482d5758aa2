#ifndef ACDS_SEED_HPP
#define ACDS_SEED_HPP

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace acds {

/// One step of the splitmix64 generator: advances `state` and returns a mixed word.
inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Chains the parts through splitmix64: s <- mix(s ^ part) for each part in order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts)
{
    std::uint64_t s = master;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t part : parts) {
        s = out ^ part;
        out = splitmix64(s);
    }
    return out;
}

/// FNV-1a, for folding names into seeds.
inline std::uint64_t hash_name(std::string_view name)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace acds

#endif // ACDS_SEED_HPP

#include "shelving/rng.hpp"

namespace shelving
{

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index)
{
    return splitmix64(master_seed + 0x9E3779B97F4A7C15ull * (index + 1));
}

}  // namespace shelving

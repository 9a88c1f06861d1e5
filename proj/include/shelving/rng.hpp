#pragma once

#include <cstdint>
#include <random>

namespace shelving
{

/*!
 * Deterministic random stream for one trajectory.
 *
 * Backed by std::mt19937_64, whose output sequence is fixed by the
 * standard. Doubles are formed from the top 53 bits so the values do not
 * depend on the standard library's distribution implementations.
 */
class RandomStream
{
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    //! Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/*!
 * Seed for trajectory `index` of an ensemble:
 *   splitmix64(master_seed + 0x9E3779B97F4A7C15 * (index + 1)).
 * This rule is part of the output format and must not change.
 */
std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace shelving

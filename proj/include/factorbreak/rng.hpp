#pragma once

#include <cstdint>
#include <random>

namespace factorbreak {

using Engine = std::mt19937_64;

/// Independent engine for (seed, index, stream). Distinct indices give
/// unrelated substreams, so replications can run in any order.
[[nodiscard]] Engine substream(std::uint64_t seed, std::uint64_t index, std::uint32_t stream = 0);

}  // namespace factorbreak

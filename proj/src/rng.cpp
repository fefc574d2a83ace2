#include "factorbreak/rng.hpp"

namespace factorbreak {

Engine substream(std::uint64_t seed, std::uint64_t index, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream};
    return Engine(seq);
}

}  // namespace factorbreak

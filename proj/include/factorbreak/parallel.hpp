#pragma once

#include <cstddef>
#include <functional>

namespace factorbreak {

/// Number of workers to use when the caller passes 0.
[[nodiscard]] unsigned default_workers();

/// Run body(i) for i in [0, count) on up to `workers` threads. Each index is
/// visited exactly once; callers write results into slot i so the outcome
/// does not depend on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace factorbreak

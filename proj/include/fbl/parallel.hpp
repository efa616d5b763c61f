#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace fbl {

// Worker count: FBL_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, count) across workers. Body must only write to
// slot i of caller-owned storage so results do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Stateless 64-bit mixer; seeds independent streams from (key, index).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace fbl

#pragma once

#include <cstddef>
#include <functional>

namespace aad {

/// Runs fn(chunk_begin, chunk_end) over [0, n) split into fixed-size chunks.
/// Chunk boundaries depend only on n and chunk_size, never on the worker
/// count, so any per-chunk accumulation reduced in chunk order is bitwise
/// reproducible for every value of `workers`.
void parallel_chunks(std::size_t n, std::size_t chunk_size, int workers,
                     const std::function<void(std::size_t, std::size_t)>& fn);

/// Convenience wrapper: fn(i) for each i in [0, n), chunked as above.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace aad

#pragma once

#include <cstddef>
#include <functional>

namespace debm {

/// Process-wide worker count used by parallel_for. 0 means hardware concurrency.
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n). Each index must write only to its own slot;
/// callers reduce the slots in index order so results do not depend on the
/// thread count. Nested calls run serially on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace debm

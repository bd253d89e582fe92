#pragma once

#include <cstddef>
#include <functional>

namespace ficoco {

/// Worker cap for internal loops. Reads FICOCO_THREADS on first use
/// (0 or unset = hardware concurrency) unless overridden.
std::size_t thread_count();
void set_thread_count(std::size_t threads);  // 0 restores the environment/auto value

/// Runs body(i) for i in [0, n). Iterations must be independent; each index is
/// executed exactly once, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ficoco

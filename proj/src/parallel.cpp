#include "ficoco/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ficoco {

namespace {

std::atomic<std::size_t> g_override{0};

std::size_t from_environment() {
  std::size_t threads = 0;
  if (const char* env = std::getenv("FICOCO_THREADS")) {
    try {
      threads = static_cast<std::size_t>(std::stoul(env));
    } catch (...) {
      threads = 0;
    }
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return threads;
}

}  // namespace

std::size_t thread_count() {
  const auto forced = g_override.load();
  if (forced) return forced;
  static const std::size_t env_threads = from_environment();
  return env_threads;
}

void set_thread_count(std::size_t threads) { g_override.store(threads); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Contiguous chunks; a chunk per worker.
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
}

}  // namespace ficoco

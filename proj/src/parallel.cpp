#include "g2d/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace g2d {

std::size_t thread_cap() {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("G2D_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
    return 1;
  }
  return hw;
}

void parallel_chunks(std::size_t count, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  if (chunk == 0) chunk = 1;
  const std::size_t n_chunks = (count + chunk - 1) / chunk;
  const std::size_t workers = std::min(thread_cap(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      fn(c * chunk, std::min(count, (c + 1) * chunk), c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&]() {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) break;
        fn(c * chunk, std::min(count, (c + 1) * chunk), c);
      }
    });
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace g2d

#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace mcptest {

// Runs fn(begin, end) over static contiguous chunks of [0, count). Chunk
// boundaries depend only on count and threads, so callers that write into
// per-index slots get identical results for any thread count.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) throw std::invalid_argument("parallel_for: threads must be positive");
  if (count == 0) return;
  if (threads == 1 || count == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  unsigned workers = threads;
  if (static_cast<std::size_t>(workers) > count) workers = static_cast<unsigned>(count);
  std::size_t base = count / workers;
  std::size_t extra = count % workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t begin = 0;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t len = base + (w < extra ? 1 : 0);
    std::size_t end = begin + len;
    pool.emplace_back([&fn, begin, end, &error, &error_mutex] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mcptest

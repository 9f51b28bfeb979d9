#include "cfgan/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cfgan {

int thread_budget() {
  const char* env = std::getenv("CFG_LAB_THREADS");
  if (env == nullptr) return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (const std::exception&) {
    return 1;
  }
}

void for_each_chunk(Index n, Index chunk, const std::function<void(Index, Index)>& fn) {
  if (n <= 0) return;
  chunk = std::max<Index>(chunk, 1);
  const Index n_chunks = (n + chunk - 1) / chunk;
  const int workers = static_cast<int>(std::min<Index>(thread_budget(), n_chunks));
  if (workers <= 1) {
    for (Index c = 0; c < n_chunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Index c = next++; c < n_chunks; c = next++) {
        try {
          fn(c * chunk, std::min(n, (c + 1) * chunk));
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cfgan

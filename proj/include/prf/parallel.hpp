#pragma once

#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace prf {

/// Worker count: explicit request > PRF_THREADS env > hardware concurrency.
inline int resolve_threads(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PRF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Run body(i) for i in [0, count) on up to `threads` workers.  Results must
/// not depend on scheduling; callers key any randomness on i.
inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::min(std::max(1, threads), std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace prf

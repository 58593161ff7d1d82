#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace parasp {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs f(begin, end) over a partition of [0, count). Each range is disjoint,
// so results are identical for any thread count as long as f writes only to
// its own output slots in a fixed per-slot order.
template <class F>
void parallel_for(std::int64_t count, F&& f, unsigned threads = 0) {
  unsigned nt = resolve_threads(threads);
  if (count <= 0) return;
  if (nt <= 1 || count < 256) {
    f(std::int64_t{0}, count);
    return;
  }
  std::int64_t chunk = (count + nt - 1) / nt;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (unsigned k = 0; k < nt; ++k) {
    std::int64_t b = std::int64_t(k) * chunk;
    std::int64_t e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&f, b, e] { f(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace parasp

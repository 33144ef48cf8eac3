#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace gexp {

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Split [0, n) into one contiguous chunk per worker and run body(begin, end)
// on each.  The body is copied per worker, so callables with internal
// scratch state are safe as long as they reset per item.  Results must be
// written to disjoint, preallocated slots (typically results[i]) -- then the
// outcome is identical for any worker count.
template <class Body>
void parallel_chunks(long n, int workers, Body body) {
  if (n <= 0) return;
  workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, n)));
  if (workers == 1) {
    body(0L, n);
    return;
  }
  const long chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const long b = w * chunk;
    const long e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([body, b, e, w, &errs]() mutable {
      try {
        Body local = body;  // per-worker copy
        local(b, e);
      } catch (...) {
        errs[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace gexp

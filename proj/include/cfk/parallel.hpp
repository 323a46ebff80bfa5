#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cfk {

namespace detail {
inline std::atomic<int>& threadSetting() {
  static std::atomic<int> n{0};
  return n;
}
}  // namespace detail

/// 0 means one worker per hardware thread.
inline void setThreadCount(int n) { detail::threadSetting() = std::max(0, n); }

inline int threadCount() {
  const int n = detail::threadSetting();
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs body(i) for i in [0, count) on contiguous chunks. Callers write into
/// index-addressed storage, so results never depend on scheduling. The first
/// exception thrown by a worker is rethrown.
template <class Body>
void parallelFor(std::size_t count, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threadCount()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Pairwise sum over a fixed ordering.
template <class T>
T pairwiseSum(const T* data, std::size_t count) {
  if (count == 0) return T{};
  if (count <= 8) {
    T s = data[0];
    for (std::size_t i = 1; i < count; ++i) s += data[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwiseSum(data, half) + pairwiseSum(data + half, count - half);
}

template <class T>
T pairwiseSum(const std::vector<T>& v) {
  return pairwiseSum(v.data(), v.size());
}

}  // namespace cfk

#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace figforge {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any fn is rethrown after all threads have joined.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (n == 0) return;
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

// Blocking multi-producer multi-consumer queue with a fixed capacity.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

  /// Blocks while full. Returns false if the queue was closed.
  bool push(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    not_empty_.notify_one();
    return true;
  }

  /// Blocks while empty. Returns nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

// Counting gate with a runtime limit that also records the peak number of
// concurrent holders.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(std::size_t limit) : limit_(std::max<std::size_t>(1, limit)) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
    peak_ = std::max(peak_, active_);
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    cv_.notify_one();
  }

  std::size_t limit() const { return limit_; }
  std::size_t peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

  class Hold {
   public:
    explicit Hold(ConcurrencyGate& g) : gate_(g) { gate_.acquire(); }
    ~Hold() { gate_.release(); }
    Hold(const Hold&) = delete;
    Hold& operator=(const Hold&) = delete;

   private:
    ConcurrencyGate& gate_;
  };

 private:
  std::size_t limit_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
};

/// Runs produce(i) for i in [begin, end) on `workers` threads and hands each
/// result to commit(i, value) on the calling thread in index order. Workers
/// stay at most `window` indices ahead of the commit point, so memory is
/// bounded. An exception from either side stops the stream and is rethrown
/// once the workers have joined.
template <typename T, typename Produce, typename Commit>
void ordered_stream(std::size_t begin, std::size_t end, std::size_t workers, std::size_t window, Produce&& produce,
                    Commit&& commit) {
  if (begin >= end) return;
  workers = std::max<std::size_t>(1, workers);
  window = std::max(window, workers);
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, T> ready;
  std::size_t next = begin;
  std::atomic<std::size_t> claim{begin};
  bool stop = false;
  std::exception_ptr error;

  auto fail = [&](std::exception_ptr e) {
    std::lock_guard lock(mu);
    if (!error) error = e;
    stop = true;
    cv.notify_all();
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = claim.fetch_add(1); i < end; i = claim.fetch_add(1)) {
          {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return stop || i < next + window; });
            if (stop) return;
          }
          try {
            T value = produce(i);
            std::lock_guard lock(mu);
            ready.emplace(i, std::move(value));
            cv.notify_all();
          } catch (...) {
            fail(std::current_exception());
            return;
          }
        }
      });
    }

    for (std::size_t i = begin; i < end; ++i) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return stop || ready.count(i) > 0; });
      auto it = ready.find(i);
      if (it == ready.end()) break;
      T value = std::move(it->second);
      ready.erase(it);
      next = i + 1;
      cv.notify_all();
      lock.unlock();
      try {
        commit(i, std::move(value));
      } catch (...) {
        fail(std::current_exception());
        break;
      }
    }
    {
      std::lock_guard lock(mu);
      stop = true;
      cv.notify_all();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace figforge

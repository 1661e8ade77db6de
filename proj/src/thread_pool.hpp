#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace proxgrid {

// Persistent worker pool for the bulk-synchronous phases. parallel_for hands
// out indices through a shared counter, so item-to-thread assignment is
// dynamic; results must not depend on which thread runs an item (the engine
// writes disjoint rows per item).
class ThreadPool {
 public:
  explicit ThreadPool(int threads) : requested_(threads) {
    const int n = std::max(0, threads - 1);
    for (int i = 0; i < n; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock lock(mutex_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return requested_; }

  void parallel_for(int count, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    if (workers_.empty() || count == 1) {
      for (int i = 0; i < count; ++i) fn(i);
      return;
    }
    {
      std::unique_lock lock(mutex_);
      fn_ = &fn;
      count_ = count;
      next_.store(0, std::memory_order_relaxed);
      active_ = static_cast<int>(workers_.size());
      ++generation_;
    }
    cv_.notify_all();
    run_items(fn);
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return active_ == 0; });
    fn_ = nullptr;
  }

 private:
  void run_items(const std::function<void(int)>& fn) {
    while (true) {
      const int i = next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= count_) break;
      fn(i);
    }
  }

  void worker_loop() {
    uint64_t seen = 0;
    while (true) {
      const std::function<void(int)>* fn = nullptr;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        fn = fn_;
      }
      if (fn == nullptr) continue;
      run_items(*fn);
      {
        std::unique_lock lock(mutex_);
        if (--active_ == 0) done_cv_.notify_all();
      }
    }
  }

  int requested_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int)>* fn_ = nullptr;
  std::atomic<int> next_{0};
  int count_ = 0;
  int active_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace proxgrid

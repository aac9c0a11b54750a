#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "evbridge/common/unique_function.hpp"

namespace evbridge::vdev {

/// Small fixed thread pool owned by the device runtime. Host-task callbacks
/// run here, never on the task runtime's workers.
class HostTaskPool {
 public:
  explicit HostTaskPool(std::size_t threads) {
    for (std::size_t i = 0; i < std::max<std::size_t>(threads, 1); ++i) {
      threads_.emplace_back([this] { loop(); });
    }
  }
  HostTaskPool(const HostTaskPool&) = delete;
  HostTaskPool& operator=(const HostTaskPool&) = delete;
  ~HostTaskPool() { stop(); }

  /// Returns false once stopped.
  bool post(Job job) {
    {
      std::lock_guard lk(m_);
      if (stopping_) return false;
      q_.push_back(std::move(job));
    }
    cv_.notify_one();
    return true;
  }

  /// Runs `job` on a pool thread and waits for it. Inline when already on a
  /// pool thread or after stop.
  void run_sync(Job job) {
    if (on_pool_thread()) {
      job();
      return;
    }
    std::mutex done_m;
    std::condition_variable done_cv;
    bool done = false;
    bool posted = post([&, job = std::move(job)]() mutable {
      job();
      std::lock_guard lk(done_m);
      done = true;
      done_cv.notify_one();
    });
    if (!posted) return;
    std::unique_lock lk(done_m);
    done_cv.wait(lk, [&] { return done; });
  }

  /// Drains queued jobs, then joins.
  void stop() {
    {
      std::lock_guard lk(m_);
      if (stopping_) return;
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) {
      if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
    }
  }

  bool on_pool_thread() const {
    auto id = std::this_thread::get_id();
    return std::any_of(threads_.begin(), threads_.end(),
                       [&](const std::thread& t) { return t.get_id() == id; });
  }

  std::vector<std::thread::id> thread_ids() const {
    std::vector<std::thread::id> ids;
    for (const auto& t : threads_) ids.push_back(t.get_id());
    return ids;
  }

  std::size_t executed() const { return executed_.load(); }
  std::size_t max_concurrent() const { return max_concurrent_.load(); }

 private:
  void loop() {
    for (;;) {
      Job job;
      {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return stopping_ || !q_.empty(); });
        if (q_.empty()) return;
        job = std::move(q_.front());
        q_.pop_front();
      }
      auto now = active_.fetch_add(1) + 1;
      auto hw = max_concurrent_.load();
      while (now > hw && !max_concurrent_.compare_exchange_weak(hw, now)) {
      }
      job();
      active_.fetch_sub(1);
      executed_.fetch_add(1);
    }
  }

  std::mutex m_;
  std::condition_variable cv_;
  std::deque<Job> q_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> max_concurrent_{0};
  std::atomic<std::size_t> executed_{0};
};

}  // namespace evbridge::vdev

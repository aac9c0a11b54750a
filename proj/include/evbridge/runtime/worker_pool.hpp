#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/common/unique_function.hpp"
#include "evbridge/runtime/future.hpp"
#include "evbridge/runtime/poll_registry.hpp"
#include "evbridge/runtime/scheduler.hpp"
#include "evbridge/runtime/task.hpp"

namespace evbridge {

struct PoolOptions {
  std::size_t workers = 4;
  /// No threads: the owner drives execution with run_until_idle(). Tasks run
  /// in FIFO order on the driving thread, which makes runs reproducible.
  bool manual = false;
  /// Polled between tasks and while idle.
  PollHook* poll_hook = nullptr;
  std::chrono::microseconds min_backoff{1};
  std::chrono::microseconds max_backoff{100};
  std::uint64_t seed = 0x5eed;
};

struct PoolStats {
  std::uint64_t tasks_executed = 0;
  std::uint64_t steals = 0;
  std::uint64_t polls = 0;
  std::uint64_t poll_fired = 0;
  std::chrono::nanoseconds busy{0};  // summed over workers
};

/// Work-stealing worker pool. Each worker owns a deque; off-pool threads
/// submit through a shared injector; idle workers steal from a random
/// victim. Every worker calls the poll hook after each task and while idle,
/// backing off exponentially (capped) when there is nothing to do.
class WorkerPool final : public Scheduler {
 public:
  explicit WorkerPool(PoolOptions opts = {}) : opts_(opts) {
    if (!opts_.manual && opts_.workers == 0) throw Error(Errc::Usage, "worker count must be >= 1");
    std::size_t n = opts_.manual ? 1 : opts_.workers;
    workers_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) workers_.push_back(std::make_unique<Worker>());
    if (!opts_.manual) {
      for (std::size_t i = 0; i < n; ++i) {
        workers_[i]->thread = std::thread([this, i] { worker_loop(i); });
      }
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() override { shutdown(); }

  std::size_t size() const { return opts_.manual ? 1 : workers_.size(); }
  bool manual() const { return opts_.manual; }

  bool try_post(Job& job) override {
    queued_.fetch_add(1, std::memory_order_seq_cst);
    bool own = Scheduler::current() == this;
    if (!accepting_.load(std::memory_order_seq_cst) && !own) {
      queued_.fetch_sub(1, std::memory_order_seq_cst);
      return false;
    }
    if (own && !opts_.manual && tl_index_ < workers_.size()) {
      auto& w = *workers_[tl_index_];
      std::lock_guard lk(w.m);
      w.q.push_back(std::move(job));
    } else {
      std::lock_guard lk(injector_m_);
      injector_.push_back(std::move(job));
    }
    wake_one();
    return true;
  }

  void post(Job job) {
    if (!try_post(job)) throw Error(Errc::Shutdown, "worker pool is shut down");
  }

  /// Runs `f()` on a worker. Throws Error(Shutdown) after shutdown().
  template <class F>
  auto submit(F&& f) -> Future<std::invoke_result_t<std::decay_t<F>&>> {
    using R = std::invoke_result_t<std::decay_t<F>&>;
    Promise<R> p;
    auto fut = p.get_future();
    post([p = std::move(p), fn = std::forward<F>(f)]() mutable {
      try {
        if constexpr (std::is_void_v<R>) {
          fn();
          p.set_value();
        } else {
          p.set_value(fn());
        }
      } catch (...) {
        p.set_error(std::current_exception());
      }
    });
    return fut;
  }

  /// Starts a suspendable task.
  template <class T>
  Future<T> spawn(Task<T> task) {
    auto fut = task.future();
    auto h = task.release();
    Job job([h] { h.resume(); });
    if (!try_post(job)) {
      h.destroy();
      throw Error(Errc::Shutdown, "worker pool is shut down");
    }
    return fut;
  }

  /// Manual mode: run queued tasks (polling between them) until nothing is
  /// runnable and a poll fires nothing. Returns the number of tasks run.
  std::size_t run_until_idle() {
    if (!opts_.manual) throw Error(Errc::StateError, "run_until_idle requires a manual pool");
    auto* prev = Scheduler::current();
    Scheduler::set_current(this);
    std::size_t ran = 0;
    for (;;) {
      Job job;
      {
        std::lock_guard lk(injector_m_);
        if (!injector_.empty()) {
          job = std::move(injector_.front());
          injector_.pop_front();
          queued_.fetch_sub(1, std::memory_order_relaxed);
        }
      }
      if (job) {
        execute(*workers_[0], job);
        ++ran;
        poll_once();
        continue;
      }
      if (poll_once() == 0) {
        std::lock_guard lk(injector_m_);
        if (injector_.empty()) break;
      }
    }
    Scheduler::set_current(prev);
    return ran;
  }

  /// Stops accepting external work, drains everything queued (tasks run
  /// during the drain may still post), joins the workers, then faults any
  /// callbacks still registered with the poll hook with Error(Shutdown).
  void shutdown() {
    if (shut_down_.exchange(true)) return;
    accepting_.store(false, std::memory_order_seq_cst);
    if (opts_.manual) {
      run_until_idle();
    } else {
      stop_.store(true, std::memory_order_seq_cst);
      {
        std::lock_guard lk(sleep_m_);
      }
      sleep_cv_.notify_all();
      for (auto& w : workers_) {
        if (w->thread.joinable()) w->thread.join();
      }
    }
    if (opts_.poll_hook) {
      opts_.poll_hook->abandon(
          std::make_exception_ptr(Error(Errc::Shutdown, "runtime shut down before completion")));
    }
  }

  bool accepting() const { return accepting_.load(); }

  /// True when `id` is one of this pool's worker threads.
  bool owns_thread(std::thread::id id) const {
    return std::any_of(workers_.begin(), workers_.end(),
                       [&](const auto& w) { return w->thread.get_id() == id; });
  }

  std::vector<std::thread::id> thread_ids() const {
    std::vector<std::thread::id> ids;
    for (const auto& w : workers_) ids.push_back(w->thread.get_id());
    return ids;
  }

  PoolStats stats() const {
    PoolStats s;
    for (const auto& w : workers_) {
      s.tasks_executed += w->executed.load(std::memory_order_relaxed);
      s.busy += std::chrono::nanoseconds(w->busy_ns.load(std::memory_order_relaxed));
    }
    s.steals = steals_.load();
    s.polls = polls_.load();
    s.poll_fired = poll_fired_.load();
    return s;
  }

  /// Index of the calling worker in this pool, or -1.
  int current_worker_index() const {
    return Scheduler::current() == this && tl_index_ < workers_.size() ? static_cast<int>(tl_index_)
                                                                       : -1;
  }

 private:
  struct Worker {
    std::mutex m;
    std::deque<Job> q;
    std::thread thread;
    std::atomic<std::int64_t> busy_ns{0};
    std::atomic<std::uint64_t> executed{0};
  };

  void wake_one() {
    if (sleepers_.load(std::memory_order_seq_cst) > 0) {
      {
        std::lock_guard lk(sleep_m_);
      }
      sleep_cv_.notify_one();
    }
  }

  std::size_t poll_once() {
    if (!opts_.poll_hook) return 0;
    polls_.fetch_add(1, std::memory_order_relaxed);
    running_.fetch_add(1, std::memory_order_seq_cst);
    std::size_t fired = opts_.poll_hook->poll();
    running_.fetch_sub(1, std::memory_order_seq_cst);
    if (fired) poll_fired_.fetch_add(fired, std::memory_order_relaxed);
    return fired;
  }

  void execute(Worker& w, Job& job) {
    auto t0 = std::chrono::steady_clock::now();
    job();
    job = Job{};
    auto dt = std::chrono::steady_clock::now() - t0;
    w.busy_ns.fetch_add(std::chrono::duration_cast<std::chrono::nanoseconds>(dt).count(),
                        std::memory_order_relaxed);
    w.executed.fetch_add(1, std::memory_order_relaxed);
  }

  bool pop_local(Worker& w, Job& out) {
    std::lock_guard lk(w.m);
    if (w.q.empty()) return false;
    out = std::move(w.q.front());
    w.q.pop_front();
    return true;
  }

  bool pop_injector(Job& out) {
    std::lock_guard lk(injector_m_);
    if (injector_.empty()) return false;
    out = std::move(injector_.front());
    injector_.pop_front();
    return true;
  }

  bool steal(std::size_t self, std::minstd_rand& rng, Job& out) {
    std::size_t n = workers_.size();
    if (n < 2) return false;
    std::size_t start = rng() % n;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t v = (start + k) % n;
      if (v == self) continue;
      auto& victim = *workers_[v];
      std::lock_guard lk(victim.m);
      if (victim.q.empty()) continue;
      out = std::move(victim.q.back());
      victim.q.pop_back();
      steals_.fetch_add(1, std::memory_order_relaxed);
      return true;
    }
    return false;
  }

  bool find_work(std::size_t self, std::minstd_rand& rng, Job& out) {
    if (!pop_local(*workers_[self], out) && !pop_injector(out) && !steal(self, rng, out)) {
      return false;
    }
    // Counted as running before leaving the queued set so the drain
    // condition never sees both at zero while a task is in flight.
    running_.fetch_add(1, std::memory_order_seq_cst);
    queued_.fetch_sub(1, std::memory_order_seq_cst);
    return true;
  }

  void worker_loop(std::size_t index) {
    Scheduler::set_current(this);
    tl_index_ = index;
    std::minstd_rand rng(static_cast<std::uint32_t>(opts_.seed + 7919 * index + 1));
    auto& self = *workers_[index];
    auto backoff = opts_.min_backoff;

    for (;;) {
      Job job;
      if (find_work(index, rng, job)) {
        execute(self, job);
        running_.fetch_sub(1, std::memory_order_seq_cst);
        poll_once();
        backoff = opts_.min_backoff;
        continue;
      }
      if (poll_once() > 0) {
        backoff = opts_.min_backoff;
        continue;
      }
      if (stop_.load(std::memory_order_seq_cst) && queued_.load(std::memory_order_seq_cst) == 0 &&
          running_.load(std::memory_order_seq_cst) == 0) {
        break;
      }
      {
        std::unique_lock lk(sleep_m_);
        sleepers_.fetch_add(1, std::memory_order_seq_cst);
        sleep_cv_.wait_for(lk, backoff,
                           [&] { return queued_.load(std::memory_order_seq_cst) > 0; });
        sleepers_.fetch_sub(1, std::memory_order_seq_cst);
      }
      backoff = std::min(backoff * 2, opts_.max_backoff);
    }
    Scheduler::set_current(nullptr);
  }

  PoolOptions opts_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::mutex injector_m_;
  std::deque<Job> injector_;

  std::mutex sleep_m_;
  std::condition_variable sleep_cv_;
  std::atomic<int> sleepers_{0};

  std::atomic<std::int64_t> queued_{0};
  std::atomic<std::int64_t> running_{0};
  std::atomic<bool> accepting_{true};
  std::atomic<bool> stop_{false};
  std::atomic<bool> shut_down_{false};

  std::atomic<std::uint64_t> steals_{0};
  std::atomic<std::uint64_t> polls_{0};
  std::atomic<std::uint64_t> poll_fired_{0};

  static inline thread_local std::size_t tl_index_ = static_cast<std::size_t>(-1);
};

}  // namespace evbridge

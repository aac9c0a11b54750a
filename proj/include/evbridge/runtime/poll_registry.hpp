#pragma once

#include <atomic>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <utility>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/common/unique_function.hpp"
#include "evbridge/runtime/concurrent_inbox.hpp"

namespace evbridge {

/// Hook the worker pool drives between tasks and while idle.
class PollHook {
 public:
  virtual ~PollHook() = default;
  /// Returns the number of callbacks fired. Never blocks.
  virtual std::size_t poll() = 0;
  /// Fires every outstanding callback with `reason`; later additions fire
  /// with it immediately.
  virtual void abandon(std::exception_ptr reason) = 0;
};

/// An event the registry can poll: a non-blocking completion query plus a
/// failure channel for events that can never complete (device gone).
template <class E>
concept PollableEvent = requires(const E& e) {
  { e.is_complete() } -> std::convertible_to<bool>;
  { e.failure() } -> std::same_as<std::exception_ptr>;
};

/// (event, callback) pair. The callback gets nullptr on completion or the
/// failure reason otherwise, and fires at most once.
template <PollableEvent Event>
struct EventCallback {
  Event event;
  UniqueFunction<void(std::exception_ptr)> callback;
};

struct PollRegistryStats {
  std::uint64_t polls = 0;             // poll bodies entered
  std::uint64_t contended = 0;         // poll() calls that found the guard taken
  std::uint64_t fired = 0;             // callbacks run
  std::uint64_t callback_faults = 0;   // callbacks that threw
  std::uint64_t entry_high_water = 0;  // max threads inside the poll body at once
  std::size_t pending = 0;             // entries parked for a later visit
};

/// Scheduler-side event polling. Producers add callbacks through a
/// lock-free inbox; one thread at a time runs the poll body, which drains
/// the inbox, fires callbacks of completed events and parks the rest in a
/// vector that is re-checked on every later visit. A thread that finds
/// the body occupied returns 0 immediately instead of waiting.
template <PollableEvent Event>
class BasicPollRegistry final : public PollHook {
 public:
  using Entry = EventCallback<Event>;

  BasicPollRegistry() = default;
  BasicPollRegistry(const BasicPollRegistry&) = delete;
  BasicPollRegistry& operator=(const BasicPollRegistry&) = delete;

  /// Runs at the start of every poll body (used to flush lazily submitted
  /// device work).
  void set_pre_poll(std::function<void()> fn) { pre_poll_ = std::move(fn); }

  void add(Entry entry) {
    inbox_.push(std::move(entry));
    if (closed_.load(std::memory_order_seq_cst)) fail_outstanding();
  }

  void add(Event ev, UniqueFunction<void(std::exception_ptr)> cb) {
    add(Entry{std::move(ev), std::move(cb)});
  }

  std::size_t poll() override {
    if (guard_.test_and_set(std::memory_order_acquire)) {
      contended_.fetch_add(1, std::memory_order_relaxed);
      return 0;
    }
    auto inside = entries_.fetch_add(1, std::memory_order_relaxed) + 1;
    auto hw = high_water_.load(std::memory_order_relaxed);
    while (inside > hw && !high_water_.compare_exchange_weak(hw, inside)) {
    }
    polls_.fetch_add(1, std::memory_order_relaxed);

    if (pre_poll_) pre_poll_();

    std::size_t fired = 0;
    for (auto& entry : inbox_.drain()) {
      if (!try_fire(entry, fired)) pending_.push_back(std::move(entry));
    }
    std::size_t keep = 0;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      if (!try_fire(pending_[i], fired)) {
        if (keep != i) pending_[keep] = std::move(pending_[i]);
        ++keep;
      }
    }
    pending_.resize(keep);
    pending_count_.store(keep, std::memory_order_relaxed);

    entries_.fetch_sub(1, std::memory_order_relaxed);
    guard_.clear(std::memory_order_release);
    return fired;
  }

  void abandon(std::exception_ptr reason) override {
    {
      std::lock_guard lk(reason_m_);
      reason_ = std::move(reason);
    }
    closed_.store(true, std::memory_order_seq_cst);
    fail_outstanding();
  }

  bool closed() const { return closed_.load(); }

  PollRegistryStats stats() const {
    PollRegistryStats s;
    s.polls = polls_.load();
    s.contended = contended_.load();
    s.fired = fired_.load();
    s.callback_faults = faults_.load();
    s.entry_high_water = high_water_.load();
    s.pending = pending_count_.load();
    return s;
  }

 private:
  bool try_fire(Entry& entry, std::size_t& fired) {
    std::exception_ptr err;
    if (!entry.event.is_complete()) {
      err = entry.event.failure();
      if (!err) return false;
    }
    invoke(entry, err);
    ++fired;
    return true;
  }

  void invoke(Entry& entry, std::exception_ptr err) {
    fired_.fetch_add(1, std::memory_order_relaxed);
    try {
      entry.callback(std::move(err));
    } catch (...) {
      faults_.fetch_add(1, std::memory_order_relaxed);
    }
  }

  void fail_outstanding() {
    while (guard_.test_and_set(std::memory_order_acquire)) {
    }
    std::exception_ptr reason;
    {
      std::lock_guard lk(reason_m_);
      reason = reason_;
    }
    for (auto& entry : pending_) invoke(entry, reason);
    pending_.clear();
    for (auto& entry : inbox_.drain()) invoke(entry, reason);
    pending_count_.store(0);
    guard_.clear(std::memory_order_release);
  }

  ConcurrentInbox<Entry> inbox_;
  std::vector<Entry> pending_;
  std::atomic_flag guard_ = ATOMIC_FLAG_INIT;
  std::atomic<bool> closed_{false};
  std::mutex reason_m_;
  std::exception_ptr reason_;
  std::function<void()> pre_poll_;

  std::atomic<std::uint64_t> entries_{0};
  std::atomic<std::uint64_t> high_water_{0};
  std::atomic<std::uint64_t> polls_{0};
  std::atomic<std::uint64_t> contended_{0};
  std::atomic<std::uint64_t> fired_{0};
  std::atomic<std::uint64_t> faults_{0};
  std::atomic<std::size_t> pending_count_{0};
};

}  // namespace evbridge

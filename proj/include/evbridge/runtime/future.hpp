#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/common/unique_function.hpp"
#include "evbridge/runtime/scheduler.hpp"

namespace evbridge {

enum class FutureStatus : std::uint8_t { Pending, Ready, Faulted };

template <class T>
class Future;
template <class T>
class Promise;

namespace detail {

template <class T>
struct ValueSlot {
  std::optional<T> value;
};
template <>
struct ValueSlot<void> {};

/// One-shot completion cell. Status moves Pending -> Ready or
/// Pending -> Faulted exactly once; every continuation runs exactly once,
/// either at completion or immediately on registration if already complete.
template <class T>
class SharedState {
 public:
  FutureStatus status() const noexcept { return status_.load(std::memory_order_acquire); }
  bool is_ready() const noexcept { return status() != FutureStatus::Pending; }

  template <class... A>
  bool try_set_value(A&&... a) {
    std::unique_lock lk(m_);
    if (status_.load(std::memory_order_relaxed) != FutureStatus::Pending) return false;
    if constexpr (!std::is_void_v<T>) slot_.value.emplace(std::forward<A>(a)...);
    return publish(lk, FutureStatus::Ready);
  }

  bool try_set_error(std::exception_ptr e) {
    std::unique_lock lk(m_);
    if (status_.load(std::memory_order_relaxed) != FutureStatus::Pending) return false;
    error_ = std::move(e);
    return publish(lk, FutureStatus::Faulted);
  }

  void add_continuation(Job job) {
    {
      std::lock_guard lk(m_);
      if (status_.load(std::memory_order_relaxed) == FutureStatus::Pending) {
        continuations_.push_back(std::move(job));
        return;
      }
    }
    job();
  }

  void wait() const {
    auto s = status();
    while (s == FutureStatus::Pending) {
      status_.wait(s, std::memory_order_acquire);
      s = status();
    }
  }

  // Valid only once status() == Ready.
  decltype(auto) value() const {
    if constexpr (!std::is_void_v<T>) return (*slot_.value);
  }

  std::exception_ptr error() const { return error_; }

 private:
  bool publish(std::unique_lock<std::mutex>& lk, FutureStatus s) {
    status_.store(s, std::memory_order_release);
    auto conts = std::move(continuations_);
    continuations_.clear();
    lk.unlock();
    status_.notify_all();
    for (auto& c : conts) c();
    return true;
  }

  mutable std::mutex m_;
  std::atomic<FutureStatus> status_{FutureStatus::Pending};
  ValueSlot<T> slot_;
  std::exception_ptr error_;
  std::vector<Job> continuations_;
};

template <class F, class T>
struct ContinuationResult {
  using type = std::invoke_result_t<F, const T&>;
};
template <class F>
struct ContinuationResult<F, void> {
  using type = std::invoke_result_t<F>;
};

}  // namespace detail

/// Write side of a future. Completing twice is a programmer error and
/// panics. Dropping an unsatisfied promise faults its future with
/// BrokenPromise.
template <class T = void>
class Promise {
 public:
  Promise() : state_(std::make_shared<detail::SharedState<T>>()) {}
  Promise(Promise&&) noexcept = default;
  Promise& operator=(Promise&& other) noexcept {
    if (this != &other) {
      abandon();
      state_ = std::move(other.state_);
    }
    return *this;
  }
  Promise(const Promise&) = delete;
  Promise& operator=(const Promise&) = delete;
  ~Promise() { abandon(); }

  Future<T> get_future() const { return Future<T>(state_); }

  template <class... A>
  void set_value(A&&... a) {
    if (!state_ || !state_->try_set_value(std::forward<A>(a)...)) {
      panic("promise completed twice");
    }
  }

  void set_error(std::exception_ptr e) {
    if (!state_ || !state_->try_set_error(std::move(e))) panic("promise completed twice");
  }

  /// Non-panicking variants for racing completers (first one wins).
  template <class... A>
  bool try_set_value(A&&... a) {
    return state_ && state_->try_set_value(std::forward<A>(a)...);
  }
  bool try_set_error(std::exception_ptr e) { return state_ && state_->try_set_error(std::move(e)); }

 private:
  void abandon() {
    if (state_ && !state_->is_ready()) {
      state_->try_set_error(
          std::make_exception_ptr(Error(Errc::BrokenPromise, "promise dropped unsatisfied")));
    }
  }

  std::shared_ptr<detail::SharedState<T>> state_;
};

/// Shared, copyable read side of a one-shot completion cell.
template <class T = void>
class Future {
 public:
  using value_type = T;

  Future() = default;
  explicit Future(std::shared_ptr<detail::SharedState<T>> s) : state_(std::move(s)) {}

  bool valid() const noexcept { return state_ != nullptr; }
  FutureStatus status() const { return state_->status(); }
  bool is_ready() const { return state_->is_ready(); }
  bool has_error() const { return status() == FutureStatus::Faulted; }

  /// Blocks the calling thread. Do not call from a worker of a manual pool.
  void wait() const { state_->wait(); }

  decltype(auto) get() const {
    state_->wait();
    if (state_->status() == FutureStatus::Faulted) std::rethrow_exception(state_->error());
    return state_->value();
  }

  std::exception_ptr error() const {
    return status() == FutureStatus::Faulted ? state_->error() : nullptr;
  }

  /// Runs `f` with the value (or no argument for void) once ready. The
  /// continuation is posted to `sched`; a faulted source skips `f` and
  /// propagates the error.
  template <class F>
  auto then(Scheduler& sched, F&& f) const {
    return then_on(&sched, std::forward<F>(f));
  }

  /// Same, using the calling worker's scheduler. Off-worker callers get an
  /// inline continuation (it runs on whichever thread completes the source).
  template <class F>
  auto then(F&& f) const {
    return then_on(Scheduler::current(), std::forward<F>(f));
  }

  /// Raw completion hook, runs inline in the completing thread.
  void on_complete(Job job) const { state_->add_continuation(std::move(job)); }

 private:
  template <class F>
  auto then_on(Scheduler* sched, F&& f) const {
    using R = typename detail::ContinuationResult<std::decay_t<F>, T>::type;

    struct Cont {
      std::shared_ptr<detail::SharedState<T>> src;
      Promise<R> out;
      std::decay_t<F> fn;

      void run() {
        if (src->status() == FutureStatus::Faulted) {
          out.set_error(src->error());
          return;
        }
        try {
          if constexpr (std::is_void_v<T>) {
            if constexpr (std::is_void_v<R>) {
              fn();
              out.set_value();
            } else {
              out.set_value(fn());
            }
          } else {
            if constexpr (std::is_void_v<R>) {
              fn(src->value());
              out.set_value();
            } else {
              out.set_value(fn(src->value()));
            }
          }
        } catch (...) {
          out.set_error(std::current_exception());
        }
      }
    };

    auto cont = std::make_shared<Cont>(Cont{state_, Promise<R>{}, std::forward<F>(f)});
    Future<R> result = cont->out.get_future();
    state_->add_continuation([cont, sched]() mutable {
      if (!sched) {
        cont->run();
        return;
      }
      Job job([cont] { cont->run(); });
      if (!sched->try_post(job)) {
        cont->out.try_set_error(
            std::make_exception_ptr(Error(Errc::Shutdown, "continuation rejected by scheduler")));
      }
    });
    return result;
  }

  template <class U>
  friend struct FutureAccess;

  std::shared_ptr<detail::SharedState<T>> state_;
};

template <class T>
struct FutureAccess {
  static const std::shared_ptr<detail::SharedState<T>>& state(const Future<T>& f) {
    return f.state_;
  }
};

template <class T>
Future<std::decay_t<T>> make_ready_future(T&& v) {
  Promise<std::decay_t<T>> p;
  p.set_value(std::forward<T>(v));
  return p.get_future();
}

inline Future<void> make_ready_future() {
  Promise<void> p;
  p.set_value();
  return p.get_future();
}

template <class T = void>
Future<T> make_faulted_future(std::exception_ptr e) {
  Promise<T> p;
  p.set_error(std::move(e));
  return p.get_future();
}

/// Ready once every input is complete. Faulted (with the first observed
/// error) if any input faulted.
template <class T>
Future<void> when_all(const std::vector<Future<T>>& inputs) {
  if (inputs.empty()) return make_ready_future();

  struct Join {
    std::atomic<std::size_t> remaining;
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    Promise<void> out;
  };
  auto join = std::make_shared<Join>();
  join->remaining.store(inputs.size());
  Future<void> result = join->out.get_future();
  for (const auto& in : inputs) {
    in.on_complete([join, in] {
      if (auto e = in.error(); e && !join->failed.exchange(true)) join->first_error = e;
      if (join->remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        if (join->failed.load()) {
          join->out.set_error(join->first_error);
        } else {
          join->out.set_value();
        }
      }
    });
  }
  return result;
}

}  // namespace evbridge

#pragma once

#include <coroutine>
#include <exception>
#include <utility>

#include "evbridge/runtime/future.hpp"
#include "evbridge/runtime/scheduler.hpp"

namespace evbridge {

template <class T>
class Task;

namespace detail {

template <class T>
struct TaskPromiseBase {
  Promise<T> result;

  std::suspend_always initial_suspend() noexcept { return {}; }
  std::suspend_never final_suspend() noexcept { return {}; }
  void unhandled_exception() noexcept { result.try_set_error(std::current_exception()); }
};

template <class T>
struct TaskPromise : TaskPromiseBase<T> {
  Task<T> get_return_object();
  template <class U>
  void return_value(U&& v) {
    this->result.set_value(std::forward<U>(v));
  }
};

template <>
struct TaskPromise<void> : TaskPromiseBase<void> {
  Task<void> get_return_object();
  void return_void() { this->result.set_value(); }
};

}  // namespace detail

/// Suspendable task. A coroutine returning Task<T> starts suspended; hand it
/// to WorkerPool::spawn. `co_await future` parks the coroutine without
/// holding a worker: resumption is posted back to the scheduler that was
/// running it.
template <class T = void>
class Task {
 public:
  using promise_type = detail::TaskPromise<T>;
  using handle_type = std::coroutine_handle<promise_type>;

  explicit Task(handle_type h) : h_(h) {}
  Task(Task&& other) noexcept : h_(std::exchange(other.h_, {})) {}
  Task& operator=(Task&& other) noexcept {
    if (this != &other) {
      if (h_) h_.destroy();
      h_ = std::exchange(other.h_, {});
    }
    return *this;
  }
  ~Task() {
    if (h_) h_.destroy();
  }

  Future<T> future() const { return h_.promise().result.get_future(); }

  /// Gives up ownership of the (not yet started) coroutine frame.
  handle_type release() noexcept { return std::exchange(h_, {}); }

 private:
  handle_type h_;
};

namespace detail {

template <class T>
Task<T> TaskPromise<T>::get_return_object() {
  return Task<T>(Task<T>::handle_type::from_promise(*this));
}

inline Task<void> TaskPromise<void>::get_return_object() {
  return Task<void>(Task<void>::handle_type::from_promise(*this));
}

}  // namespace detail

namespace detail {

template <class T>
struct FutureAwaiter {
  Future<T> fut;

  bool await_ready() const { return fut.is_ready(); }

  void await_suspend(std::coroutine_handle<> h) {
    // Nothing in this frame may be touched after on_complete: the
    // continuation can resume the coroutine on another thread at once.
    Scheduler* sched = Scheduler::current();
    Future<T> f = fut;
    f.on_complete([h, sched]() mutable {
      if (!sched) {
        h.resume();
        return;
      }
      Job job([h] { h.resume(); });
      if (!sched->try_post(job)) h.destroy();
    });
  }

  decltype(auto) await_resume() const { return fut.get(); }
};

}  // namespace detail

template <class T>
detail::FutureAwaiter<T> operator co_await(Future<T> f) {
  return detail::FutureAwaiter<T>{std::move(f)};
}

}  // namespace evbridge

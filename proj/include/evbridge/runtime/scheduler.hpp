#pragma once

#include "evbridge/common/unique_function.hpp"

namespace evbridge {

/// Anything that can run jobs. Continuations and resumed coroutines are
/// posted to the scheduler that was current on the registering thread.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  /// Queues `job`. Returns false (and leaves `job` untouched) when the
  /// scheduler no longer accepts work.
  virtual bool try_post(Job& job) = 0;

  /// The scheduler whose worker is running on this thread, or nullptr.
  static Scheduler* current() noexcept { return current_; }

 protected:
  static void set_current(Scheduler* s) noexcept { current_ = s; }

 private:
  static inline thread_local Scheduler* current_ = nullptr;
};

}  // namespace evbridge

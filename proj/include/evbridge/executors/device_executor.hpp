#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/integration/integration.hpp"
#include "evbridge/runtime/future.hpp"
#include "evbridge/vdevice/device.hpp"

namespace evbridge::exec {

/// Wraps one in-order queue. Two-way execution returns a bridged future,
/// one-way execution is fire-and-forget (ordering still comes from the
/// queue).
class DeviceExecutor {
 public:
  DeviceExecutor(Integration& integration, std::size_t id)
      : integration_(integration), queue_(integration.device().create_queue()), id_(id) {}

  std::size_t id() const { return id_; }
  const vdev::DeviceQueue& queue() const { return queue_; }
  Integration& integration() const { return integration_; }

  /// True while the queue holds incomplete ops.
  bool busy() const { return queue_.has_incomplete(); }

  Future<void> async_execute(vdev::DeviceOp op) {
    vdev::DeviceEvent e;
    try {
      e = queue_.submit(std::move(op));
    } catch (...) {
      return make_faulted_future(std::current_exception());
    }
    return integration_.get_future(e);
  }

  void post(vdev::DeviceOp op) {
    try {
      queue_.submit(std::move(op));
    } catch (const Error& err) {
      dropped_.fetch_add(1, std::memory_order_relaxed);
      std::fprintf(stderr, "executor %zu: dropped one-way op: %s\n", id_, err.what());
    }
  }

  /// Future for everything submitted so far (dummy task on the queue).
  Future<void> get_future() { return integration_.get_future(queue_); }

  std::uint64_t dropped() const { return dropped_.load(); }

 private:
  Integration& integration_;
  vdev::DeviceQueue queue_;
  std::size_t id_;
  std::atomic<std::uint64_t> dropped_{0};
};

inline Future<void> executor_two_way(DeviceExecutor& x, vdev::DeviceOp op) {
  return x.async_execute(std::move(op));
}
inline void executor_one_way(DeviceExecutor& x, vdev::DeviceOp op) { x.post(std::move(op)); }

/// Fixed set of executors handed out round-robin.
class ExecutorPool {
 public:
  ExecutorPool(Integration& integration, std::size_t count) {
    if (count == 0) throw Error(Errc::Usage, "executor pool needs at least one executor");
    for (std::size_t i = 0; i < count; ++i) {
      executors_.push_back(std::make_unique<DeviceExecutor>(integration, i));
    }
  }

  std::size_t size() const { return executors_.size(); }
  DeviceExecutor& at(std::size_t i) { return *executors_.at(i); }

  DeviceExecutor& acquire() {
    return *executors_[next_.fetch_add(1, std::memory_order_relaxed) % executors_.size()];
  }

 private:
  std::vector<std::unique_ptr<DeviceExecutor>> executors_;
  std::atomic<std::uint64_t> next_{0};
};

}  // namespace evbridge::exec

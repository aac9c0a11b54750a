#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <string_view>

#include "evbridge/common/error.hpp"
#include "evbridge/runtime/future.hpp"
#include "evbridge/runtime/poll_registry.hpp"
#include "evbridge/runtime/worker_pool.hpp"
#include "evbridge/vdevice/device.hpp"

namespace evbridge {

using PollRegistry = BasicPollRegistry<vdev::DeviceEvent>;

/// How device events become runtime futures.
enum class IntegrationMode : std::uint8_t {
  Polling,   // callbacks parked in the scheduler's poll registry
  HostTask,  // device-runtime host task sets the future
  Fence,     // block on the event, hand back a ready future
};

constexpr std::string_view to_string(IntegrationMode m) {
  switch (m) {
    case IntegrationMode::Polling: return "polling";
    case IntegrationMode::HostTask: return "hosttask";
    case IntegrationMode::Fence: return "fence";
  }
  return "?";
}

inline std::optional<IntegrationMode> parse_integration_mode(std::string_view s) {
  if (s == "polling") return IntegrationMode::Polling;
  if (s == "hosttask") return IntegrationMode::HostTask;
  if (s == "fence") return IntegrationMode::Fence;
  return std::nullopt;
}

struct IntegrationStats {
  std::uint64_t polling_calls = 0;
  std::uint64_t hosttask_calls = 0;
  std::uint64_t fence_calls = 0;
  std::uint64_t queue_calls = 0;

  std::uint64_t total() const { return polling_calls + hosttask_calls + fence_calls; }
};

/// Bridges device events into the task runtime. The mode is fixed at
/// construction; get_future() dispatches through it, while the
/// mode-specific entry points stay callable directly.
///
/// The integration keeps one queue of the device open for its own lifetime
/// so the device runtime outlives every bridged event, and (for lazily
/// submitting devices) flushes through that queue at the start of every
/// poll.
class Integration {
 public:
  Integration(WorkerPool& pool, PollRegistry& registry, vdev::VirtualDevice& device,
              IntegrationMode mode)
      : pool_(pool), registry_(registry), device_(device), mode_(mode),
        keepalive_(device.create_queue()) {
    registry_.set_pre_poll([q = keepalive_] {
      if (q.core()->config().lazy_submit) q.flush();
    });
  }

  Integration(const Integration&) = delete;
  Integration& operator=(const Integration&) = delete;

  IntegrationMode mode() const { return mode_; }
  WorkerPool& pool() { return pool_; }
  vdev::VirtualDevice& device() { return device_; }

  Future<void> get_future(const vdev::DeviceEvent& e) {
    switch (mode_) {
      case IntegrationMode::Polling: return get_future_polling(e);
      case IntegrationMode::HostTask: return get_future_hosttask(e);
      case IntegrationMode::Fence: return get_future_fence(e);
    }
    return get_future_fence(e);
  }

  /// Non-blocking. Ready after the event completes and a later poll sees it.
  Future<void> get_future_polling(const vdev::DeviceEvent& e) {
    polling_calls_.fetch_add(1, std::memory_order_relaxed);
    Promise<void> p;
    auto fut = p.get_future();
    registry_.add(e, [p = std::move(p)](std::exception_ptr err) mutable {
      if (err) {
        p.set_error(std::move(err));
      } else {
        p.set_value();
      }
    });
    return fut;
  }

  /// Non-blocking apart from the host-task submission cost. Ready when a
  /// device-runtime thread runs the host task.
  Future<void> get_future_hosttask(const vdev::DeviceEvent& e) {
    hosttask_calls_.fetch_add(1, std::memory_order_relaxed);
    Promise<void> p;
    auto fut = p.get_future();
    device_.register_host_task(e, [p = std::move(p)](std::exception_ptr err) mutable {
      if (err) {
        p.set_error(std::move(err));
      } else {
        p.set_value();
      }
    });
    return fut;
  }

  /// Blocks the caller on the event, then returns a ready future.
  Future<void> get_future_fence(const vdev::DeviceEvent& e) {
    fence_calls_.fetch_add(1, std::memory_order_relaxed);
    try {
      vdev::event_wait(e);
    } catch (...) {
      return make_faulted_future(std::current_exception());
    }
    return make_ready_future();
  }

  /// Future for everything submitted to `q` so far: a dummy task is
  /// appended and its event bridged. Only valid for in-order queues.
  Future<void> get_future(const vdev::DeviceQueue& q) {
    if (!q.in_order()) {
      throw Error(Errc::OrderingError, "queue future requires an in-order queue");
    }
    queue_calls_.fetch_add(1, std::memory_order_relaxed);
    vdev::DeviceEvent e;
    try {
      e = q.submit(vdev::DeviceOp::dummy());
    } catch (...) {
      return make_faulted_future(std::current_exception());
    }
    return get_future(e);
  }

  IntegrationStats stats() const {
    IntegrationStats s;
    s.polling_calls = polling_calls_.load();
    s.hosttask_calls = hosttask_calls_.load();
    s.fence_calls = fence_calls_.load();
    s.queue_calls = queue_calls_.load();
    return s;
  }

 private:
  WorkerPool& pool_;
  PollRegistry& registry_;
  vdev::VirtualDevice& device_;
  IntegrationMode mode_;
  vdev::DeviceQueue keepalive_;
  std::atomic<std::uint64_t> polling_calls_{0};
  std::atomic<std::uint64_t> hosttask_calls_{0};
  std::atomic<std::uint64_t> fence_calls_{0};
  std::atomic<std::uint64_t> queue_calls_{0};
};

}  // namespace evbridge

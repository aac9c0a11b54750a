#pragma once

#include <chrono>
#include <memory>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/executors/aggregation_executor.hpp"
#include "evbridge/executors/buffer_pool.hpp"
#include "evbridge/executors/device_executor.hpp"
#include "evbridge/integration/integration.hpp"
#include "evbridge/miniapp/scenario.hpp"
#include "evbridge/runtime/worker_pool.hpp"
#include "evbridge/vdevice/device.hpp"

namespace evbridge::mini {

struct SessionConfig {
  std::size_t workers = 8;
  std::size_t executors = 32;
  std::size_t max_agg = 8;
  IntegrationMode mode = IntegrationMode::Polling;
  /// Submit a barrier after every fused kernel (before its read-back).
  bool inject_barriers = false;
  vdev::DeviceConfig device;
  std::uint64_t seed = 1;
};

/// Everything one run needs: device, scheduler, bridge and executors.
/// With a virtual clock the pool has no threads and drive() interleaves
/// task execution with clock advancement on the calling thread.
class Session {
 public:
  explicit Session(const SessionConfig& cfg)
      : cfg_(cfg),
        device_(cfg.device),
        pool_(pool_options(cfg, registry_)),
        integration_(pool_, registry_, device_, cfg.mode),
        executors_(integration_, cfg.executors) {
    if (cfg.max_agg == 0) throw Error(Errc::Usage, "max_agg must be >= 1");
    exec::AggregationOptions ao;
    ao.max_slots = cfg.max_agg;
    ao.inject_barrier = cfg.inject_barriers;
    for (std::size_t e = 0; e < executors_.size(); ++e) {
      auto a = std::make_unique<exec::AggregationExecutor>(executors_.at(e), buffers_, pool_, ao);
      for (std::size_t k = 0; k < kKinds; ++k) {
        a->register_kind(static_cast<exec::KernelKind>(k), [k](std::span<double> slice) {
          kernel_body(k, slice.first(kCells));
          for (double& s : slice.subspan(kCells)) s += 1.0;
        });
      }
      aggs_.push_back(std::move(a));
    }
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ~Session() {
    // Drain the runtime while executors and device are still alive; late
    // callbacks then fail with Shutdown / DeviceGone instead of dangling.
    pool_.shutdown();
    device_.shutdown();
  }

  const SessionConfig& config() const { return cfg_; }
  bool virtual_clock() const { return cfg_.device.clock == vdev::ClockMode::Virtual; }

  WorkerPool& pool() { return pool_; }
  PollRegistry& registry() { return registry_; }
  vdev::VirtualDevice& device() { return device_; }
  Integration& integration() { return integration_; }
  exec::BufferPool& buffers() { return buffers_; }
  exec::ExecutorPool& executors() { return executors_; }
  std::size_t aggregators() const { return aggs_.size(); }
  exec::AggregationExecutor& aggregator(std::size_t i) { return *aggs_.at(i); }

  /// Current time on the session's clock: device time when virtual, wall
  /// time otherwise.
  SimTime now() const {
    if (virtual_clock()) return device_.now();
    return std::chrono::duration_cast<SimDuration>(std::chrono::steady_clock::now() - epoch_);
  }

  /// Blocks until `f` is ready. Virtual clock: runs tasks until nothing is
  /// runnable, then advances the device to its next event, and repeats.
  template <class T>
  void drive(const Future<T>& f) {
    if (!virtual_clock()) {
      f.wait();
      return;
    }
    for (;;) {
      pool_.run_until_idle();
      if (f.is_ready()) return;
      if (!device_.advance_to_next_event()) {
        pool_.run_until_idle();
        if (f.is_ready()) return;
        throw Error(Errc::StateError, "stalled: no runnable task and no pending device work");
      }
    }
  }

 private:
  static PoolOptions pool_options(const SessionConfig& cfg, PollRegistry& reg) {
    PoolOptions o;
    o.workers = cfg.workers;
    o.manual = cfg.device.clock == vdev::ClockMode::Virtual;
    o.poll_hook = &reg;
    o.seed = cfg.seed;
    return o;
  }

  SessionConfig cfg_;
  PollRegistry registry_;
  vdev::VirtualDevice device_;
  WorkerPool pool_;
  Integration integration_;
  exec::BufferPool buffers_;
  exec::ExecutorPool executors_;
  std::vector<std::unique_ptr<exec::AggregationExecutor>> aggs_;
  std::chrono::steady_clock::time_point epoch_ = std::chrono::steady_clock::now();
};

}  // namespace evbridge::mini

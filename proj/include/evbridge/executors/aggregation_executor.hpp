#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/executors/buffer_pool.hpp"
#include "evbridge/executors/device_executor.hpp"
#include "evbridge/runtime/future.hpp"
#include "evbridge/runtime/scheduler.hpp"

namespace evbridge::exec {

using KernelKind = std::uint32_t;

/// Per-member kernel body; applied to each member's slice of the fused
/// device buffer when the fused kernel runs.
using SliceKernel = std::function<void(std::span<double>)>;

enum class LaunchReason : std::uint8_t { Full, Idle };

constexpr std::string_view to_string(LaunchReason r) {
  return r == LaunchReason::Full ? "full" : "idle";
}

struct AggregationOptions {
  std::size_t max_slots = 1;
  /// Submit a barrier between the fused kernel and its read-back.
  bool inject_barrier = false;
};

struct BatchRecord {
  KernelKind kind = 0;
  std::size_t size = 0;
  LaunchReason reason = LaunchReason::Full;
};

struct AggregationStats {
  std::uint64_t requests = 0;
  std::uint64_t launches = 0;
  std::uint64_t full_launches = 0;
  std::uint64_t idle_launches = 0;
  std::uint64_t idleness_futures = 0;
  std::uint64_t idle_noops = 0;  // idleness fired after the batch already went out Full
  std::vector<std::uint64_t> histogram;  // histogram[k] = batches of size k
};

/// Fuses compatible kernel requests (same kind) into one launch on the
/// underlying executor. A batch opens with its first request, which also
/// asks the integration for a queue future; the batch goes out when it
/// reaches max_slots (Full) or when that future says the queue drained
/// (Idle), whichever comes first. Members' payloads are gathered into one
/// staging buffer, copied in, processed by one fused kernel, copied back
/// and scattered to the members before their futures complete.
class AggregationExecutor {
 public:
  AggregationExecutor(DeviceExecutor& underlying, BufferPool& buffers, Scheduler& sched,
                      AggregationOptions opts)
      : underlying_(underlying), buffers_(buffers), sched_(sched), opts_(opts) {
    if (opts_.max_slots == 0) throw Error(Errc::Usage, "max_slots must be >= 1");
    stats_.histogram.assign(opts_.max_slots + 1, 0);
  }

  AggregationExecutor(const AggregationExecutor&) = delete;
  AggregationExecutor& operator=(const AggregationExecutor&) = delete;

  /// Not thread-safe against concurrent schedule(); register kinds first.
  void register_kind(KernelKind kind, SliceKernel fn) {
    auto ks = std::make_unique<KindState>();
    ks->fn = std::move(fn);
    kinds_[kind] = std::move(ks);
  }

  DeviceExecutor& underlying() { return underlying_; }
  std::size_t max_slots() const { return opts_.max_slots; }

  /// Queues one request; `payload` is read at launch and written back
  /// before the returned future completes.
  Future<void> schedule(KernelKind kind, std::size_t work_items, std::span<double> payload) {
    auto it = kinds_.find(kind);
    if (it == kinds_.end()) {
      throw Error(Errc::KindError, "kernel kind " + std::to_string(kind) + " not registered");
    }
    if (work_items == 0) throw Error(Errc::Usage, "work_items must be > 0");
    KindState& ks = *it->second;

    Member m{payload, work_items, Promise<void>{}};
    Future<void> fut = m.done.get_future();
    std::shared_ptr<Batch> batch;
    std::shared_ptr<Batch> full;
    bool opened = false;
    {
      std::lock_guard lk(ks.m);
      if (!ks.open) {
        ks.open = std::make_shared<Batch>();
        ks.open->kind = kind;
        opened = true;
      }
      batch = ks.open;
      batch->members.push_back(std::move(m));
      if (batch->members.size() >= opts_.max_slots) {
        full = std::move(ks.open);
        ks.open.reset();
      }
    }
    requests_.fetch_add(1, std::memory_order_relaxed);

    if (opened && !full) {
      // First slot: watch for the underlying queue going idle.
      idleness_futures_.fetch_add(1, std::memory_order_relaxed);
      Future<void> idle = underlying_.get_future();
      {
        std::lock_guard lk(ks.m);
        batch->idleness = idle;
      }
      idle.on_complete([this, &ks, batch] {
        Job job([this, &ks, batch] { on_idle(ks, batch); });
        if (!sched_.try_post(job)) on_idle(ks, batch);
      });
    }
    if (full) launch(full, LaunchReason::Full);
    return fut;
  }

  /// Idleness future of the open batch of `kind`.
  Future<void> first_slot_future(KernelKind kind) const {
    auto it = kinds_.find(kind);
    if (it == kinds_.end()) {
      throw Error(Errc::KindError, "kernel kind " + std::to_string(kind) + " not registered");
    }
    std::lock_guard lk(it->second->m);
    if (!it->second->open || !it->second->open->idleness.valid()) {
      throw Error(Errc::StateError, "no open batch for kind " + std::to_string(kind));
    }
    return it->second->open->idleness;
  }

  AggregationStats stats() const {
    std::lock_guard lk(stats_m_);
    auto s = stats_;
    s.requests = requests_.load();
    s.idleness_futures = idleness_futures_.load();
    s.idle_noops = idle_noops_.load();
    return s;
  }

  std::vector<BatchRecord> batch_log() const {
    std::lock_guard lk(stats_m_);
    return log_;
  }

 private:
  struct Member {
    std::span<double> payload;
    std::size_t work_items;
    Promise<void> done;
  };

  struct Batch {
    KernelKind kind = 0;
    std::vector<Member> members;
    Future<void> idleness;
  };

  struct KindState {
    mutable std::mutex m;
    SliceKernel fn;
    std::shared_ptr<Batch> open;
  };

  void on_idle(KindState& ks, const std::shared_ptr<Batch>& batch) {
    bool go = false;
    {
      std::lock_guard lk(ks.m);
      if (ks.open == batch) {
        ks.open.reset();
        go = true;
      }
    }
    if (go) {
      launch(batch, LaunchReason::Idle);
    } else {
      idle_noops_.fetch_add(1, std::memory_order_relaxed);
    }
  }

  void launch(const std::shared_ptr<Batch>& batch, LaunchReason reason) {
    const auto& fn = kinds_.at(batch->kind)->fn;
    std::size_t n = batch->members.size();
    {
      std::lock_guard lk(stats_m_);
      stats_.launches++;
      (reason == LaunchReason::Full ? stats_.full_launches : stats_.idle_launches)++;
      stats_.histogram[n]++;
      log_.push_back({batch->kind, n, reason});
    }

    std::vector<std::size_t> offsets(n + 1, 0);
    std::uint64_t items = 0;
    for (std::size_t i = 0; i < n; ++i) {
      offsets[i + 1] = offsets[i] + batch->members[i].payload.size();
      items += batch->members[i].work_items;
    }
    std::size_t bytes = offsets[n] * sizeof(double);

    vdev::DeviceBuffer staging;
    vdev::DeviceBuffer device;
    try {
      staging = buffers_.alloc(bytes);
      device = buffers_.alloc(bytes);
    } catch (...) {
      finish(batch, staging, device, offsets, std::current_exception());
      return;
    }

    auto host = staging.doubles();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = batch->members[i].payload;
      std::copy(p.begin(), p.end(), host.begin() + static_cast<std::ptrdiff_t>(offsets[i]));
    }

    underlying_.post(vdev::DeviceOp::copy_h2d(bytes, [staging, device, len = offsets[n]] {
      std::memcpy(device.doubles().data(), staging.doubles().data(), len * sizeof(double));
    }));
    underlying_.post(vdev::DeviceOp::kernel(items, [device, offsets, fn] {
      auto d = device.doubles();
      for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        fn(d.subspan(offsets[i], offsets[i + 1] - offsets[i]));
      }
    }));
    if (opts_.inject_barrier) underlying_.post(vdev::DeviceOp::barrier());
    Future<void> done =
        underlying_.async_execute(vdev::DeviceOp::copy_d2h(bytes, [staging, device, len = offsets[n]] {
          std::memcpy(staging.doubles().data(), device.doubles().data(), len * sizeof(double));
        }));

    done.on_complete([this, batch, staging, device, offsets, done] {
      Job job([this, batch, staging, device, offsets, done] {
        finish(batch, staging, device, offsets, done.error());
      });
      if (!sched_.try_post(job)) {
        finish(batch, staging, device, offsets,
               std::make_exception_ptr(Error(Errc::Shutdown, "runtime shut down")));
      }
    });
  }

  void finish(const std::shared_ptr<Batch>& batch, const vdev::DeviceBuffer& staging,
              const vdev::DeviceBuffer& device, const std::vector<std::size_t>& offsets,
              std::exception_ptr err) {
    if (!err && staging) {
      auto host = staging.doubles();
      for (std::size_t i = 0; i < batch->members.size(); ++i) {
        auto& p = batch->members[i].payload;
        std::copy(host.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                  host.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]), p.begin());
      }
    }
    if (staging) buffers_.release(staging);
    if (device) buffers_.release(device);
    for (auto& m : batch->members) {
      if (err) {
        m.done.set_error(err);
      } else {
        m.done.set_value();
      }
    }
  }

  DeviceExecutor& underlying_;
  BufferPool& buffers_;
  Scheduler& sched_;
  AggregationOptions opts_;
  std::map<KernelKind, std::unique_ptr<KindState>> kinds_;

  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> idleness_futures_{0};
  std::atomic<std::uint64_t> idle_noops_{0};
  mutable std::mutex stats_m_;
  AggregationStats stats_;
  std::vector<BatchRecord> log_;
};

inline Future<void> agg_schedule(AggregationExecutor& a, KernelKind kind, std::size_t work_items,
                                 std::span<double> payload) {
  return a.schedule(kind, work_items, payload);
}

inline Future<void> agg_first_slot_future(const AggregationExecutor& a, KernelKind kind) {
  return a.first_slot_future(kind);
}

}  // namespace evbridge::exec

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
#include <queue>
#include <set>
#include <thread>
#include <utility>
#include <vector>

#if defined(__linux__)
#include <sys/prctl.h>
#endif

#include "evbridge/common/error.hpp"
#include "evbridge/common/time.hpp"
#include "evbridge/common/unique_function.hpp"
#include "evbridge/vdevice/hosttask_pool.hpp"
#include "evbridge/vdevice/latency_model.hpp"

namespace evbridge::vdev {

enum class ClockMode : std::uint8_t { RealTime, Virtual };
enum class EventStatus : std::uint8_t { Submitted = 0, Running = 1, Complete = 2 };

using HostCallback = UniqueFunction<void(std::exception_ptr)>;

struct DeviceConfig {
  std::size_t compute_slots = 16;
  ClockMode clock = ClockMode::RealTime;
  LatencyModel latency;
  SimDuration event_alloc_cost = micros(1);
  /// Events come from an internal pool: no per-submit allocation cost.
  bool internal_event_pool = false;
  std::size_t hosttask_threads = 2;
  bool barrier_elision = false;
  /// Ops are held until the next flush (status query, wait or explicit).
  bool lazy_submit = false;
  bool record_timeline = false;
};

struct DeviceOp {
  OpKind kind = OpKind::Kernel;
  std::uint64_t work_items = 0;
  std::uint64_t bytes = 0;
  /// Runs once, on the device timeline, when the op starts.
  Job compute;

  static DeviceOp kernel(std::uint64_t items, Job fn = {}) {
    return {OpKind::Kernel, items, 0, std::move(fn)};
  }
  static DeviceOp copy_h2d(std::uint64_t bytes, Job fn = {}) {
    return {OpKind::CopyH2D, 0, bytes, std::move(fn)};
  }
  static DeviceOp copy_d2h(std::uint64_t bytes, Job fn = {}) {
    return {OpKind::CopyD2H, 0, bytes, std::move(fn)};
  }
  static DeviceOp barrier() { return {OpKind::Barrier, 0, 0, {}}; }
  static DeviceOp dummy() { return {OpKind::DummyTask, 0, 0, {}}; }
};

struct OpRecord {
  std::uint64_t seq = 0;
  std::uint64_t event_id = 0;
  std::uint32_t queue = 0;
  OpKind kind = OpKind::Kernel;
  SimTime submit{};
  SimTime start{};
  SimTime complete{};
};

struct DeviceCounters {
  std::uint64_t kernels = 0;
  std::uint64_t copies_h2d = 0;
  std::uint64_t copies_d2h = 0;
  std::uint64_t barriers = 0;
  std::uint64_t barriers_elided = 0;
  std::uint64_t dummies = 0;
  std::uint64_t submits = 0;
  std::uint64_t event_waits = 0;
  std::uint64_t host_tasks = 0;

  std::uint64_t transfers() const { return copies_h2d + copies_d2h; }
};

class DeviceCore;

namespace detail {

inline constexpr std::uint8_t kStatusMask = 3;
inline constexpr std::uint8_t kAbandonedBit = 4;

struct EventState {
  std::uint64_t id = 0;
  std::atomic<std::uint8_t> raw{0};
  // Written under the device lock, published by `raw`.
  SimTime submit{};
  SimTime start{};
  SimTime complete{};
  std::vector<HostCallback> host_callbacks;  // guarded by the device lock
  std::weak_ptr<DeviceCore> core;
  std::atomic<bool> held{false};
};

}  // namespace detail

/// Completion token of one submitted op. Queries never block.
class DeviceEvent {
 public:
  DeviceEvent() = default;
  explicit DeviceEvent(std::shared_ptr<detail::EventState> s) : s_(std::move(s)) {}

  std::uint64_t id() const { return s_->id; }
  EventStatus status() const;
  bool is_complete() const { return status() == EventStatus::Complete; }
  bool is_abandoned() const { return s_->raw.load(std::memory_order_acquire) & detail::kAbandonedBit; }
  /// DeviceGone once the device was destroyed with this event outstanding.
  std::exception_ptr failure() const {
    if (!is_abandoned()) return nullptr;
    return std::make_exception_ptr(Error(Errc::DeviceGone, "device destroyed before completion"));
  }
  /// Blocks the calling thread until complete. Throws DeviceGone.
  void wait() const;

  SimTime submit_time() const { return s_->submit; }
  SimTime start_time() const { return s_->start; }
  SimTime completion_time() const { return s_->complete; }

  explicit operator bool() const { return s_ != nullptr; }
  const std::shared_ptr<detail::EventState>& state() const { return s_; }

 private:
  std::shared_ptr<detail::EventState> s_;
};

/// Device timeline. Ops enter per-queue FIFOs; a queue's head becomes ready
/// when its predecessor completes (or at submit time), takes a compute slot
/// if it needs one, and completes after its modeled duration. Events at one
/// timestamp are ordered completions first, then readiness by submission
/// sequence; slot waiters are served by (ready time, sequence).
///
/// RealTime: one simulator thread sleeps until the next timeline event.
/// Virtual: whoever advances the clock processes the timeline, and host
/// callbacks run synchronously (one at a time) on the host-task threads so
/// runs are reproducible.
class DeviceCore : public std::enable_shared_from_this<DeviceCore> {
 public:
  explicit DeviceCore(DeviceConfig cfg)
      : cfg_(cfg),
        free_slots_(static_cast<std::int64_t>(std::max<std::size_t>(cfg.compute_slots, 1))),
        barrier_elision_(cfg.barrier_elision),
        hosttasks_(cfg.hosttask_threads),
        epoch_(std::chrono::steady_clock::now()) {}

  DeviceCore(const DeviceCore&) = delete;
  DeviceCore& operator=(const DeviceCore&) = delete;

  ~DeviceCore() { shutdown(); }

  void start() {
    if (cfg_.clock == ClockMode::RealTime) sim_thread_ = std::thread([this] { sim_loop(); });
  }

  const DeviceConfig& config() const { return cfg_; }

  std::uint32_t create_queue(bool in_order) {
    std::lock_guard lk(m_);
    if (gone_) throw Error(Errc::DeviceGone, "create_queue on destroyed device");
    queues_.push_back(QueueState{});
    queues_.back().in_order = in_order;
    return static_cast<std::uint32_t>(queues_.size() - 1);
  }

  DeviceEvent submit(std::uint32_t queue, DeviceOp op) {
    if (op.kind == OpKind::Barrier && barrier_elision_.load()) {
      std::lock_guard lk(m_);
      if (gone_) throw Error(Errc::DeviceGone, "submit to destroyed device");
      auto& q = queues_.at(queue);
      if (q.in_order) {
        counters_.barriers_elided++;
        if (q.last_event) return DeviceEvent(q.last_event);
        auto ev = new_event_locked();
        ev->submit = ev->start = ev->complete = host_now_locked();
        ev->raw.store(static_cast<std::uint8_t>(EventStatus::Complete));
        return DeviceEvent(ev);
      }
    }

    charge_host_cost();

    bool wake = false;
    std::shared_ptr<detail::EventState> ev;
    {
      std::lock_guard lk(m_);
      if (gone_) throw Error(Errc::DeviceGone, "submit to destroyed device");
      auto& q = queues_.at(queue);
      ev = new_event_locked();
      ev->submit = host_now_locked();
      count_submit_locked(op.kind);
      auto state = std::make_unique<OpState>();
      state->ev = ev;
      state->queue = queue;
      state->seq = next_seq_++;
      state->op = std::move(op);
      q.last_event = ev;
      if (cfg_.lazy_submit) {
        ev->held.store(true);
        held_.push_back(std::move(state));
      } else {
        wake = enqueue_locked(std::move(state));
      }
    }
    if (wake) sim_cv_.notify_one();
    return DeviceEvent(ev);
  }

  /// Releases lazily held ops onto the timeline at the current time.
  void flush() {
    bool wake = false;
    {
      std::lock_guard lk(m_);
      wake = flush_locked();
    }
    if (wake) sim_cv_.notify_one();
  }

  void wait(const std::shared_ptr<detail::EventState>& ev) {
    event_waits_.fetch_add(1, std::memory_order_relaxed);
    if (ev->held.load()) flush();
    if (cfg_.clock == ClockMode::Virtual) {
      std::unique_lock lk(m_);
      while (!(ev->raw.load() & (detail::kAbandonedBit | 2))) {
        if (!step_locked(lk, kNever)) {
          throw Error(Errc::StateError, "event can never complete: device timeline is empty");
        }
      }
    } else {
      auto raw = ev->raw.load(std::memory_order_acquire);
      while (!(raw & (detail::kAbandonedBit | 2))) {
        ev->raw.wait(raw, std::memory_order_acquire);
        raw = ev->raw.load(std::memory_order_acquire);
      }
    }
    if (ev->raw.load() & detail::kAbandonedBit) {
      throw Error(Errc::DeviceGone, "device destroyed before completion");
    }
  }

  /// `cb` runs once on a host-task thread after the event completes, or with
  /// DeviceGone if the device goes away first. Registering is itself a
  /// runtime submission and costs submit + event allocation on the caller.
  void register_host_task(const DeviceEvent& e, HostCallback cb) {
    charge_host_cost();
    host_tasks_.fetch_add(1, std::memory_order_relaxed);
    const auto& ev = e.state();
    std::unique_lock lk(m_);
    if (gone_ || (ev->raw.load() & detail::kAbandonedBit)) {
      lk.unlock();
      cb(std::make_exception_ptr(Error(Errc::DeviceGone, "device destroyed")));
      return;
    }
    bool wake = ev->held.load() && flush_locked();
    if ((ev->raw.load() & detail::kStatusMask) == static_cast<std::uint8_t>(EventStatus::Complete)) {
      lk.unlock();
      std::vector<std::pair<HostCallback, std::exception_ptr>> one;
      one.emplace_back(std::move(cb), nullptr);
      dispatch(one);
    } else {
      ev->host_callbacks.push_back(std::move(cb));
      lk.unlock();
    }
    if (wake) sim_cv_.notify_one();
  }

  void advance(SimDuration dt) {
    if (cfg_.clock != ClockMode::Virtual) {
      throw Error(Errc::ModeError, "advance_virtual_clock requires a virtual-clock device");
    }
    std::unique_lock lk(m_);
    SimTime limit = now_ + dt;
    while (step_locked(lk, limit)) {
    }
    now_ = std::max(now_, limit);
  }

  /// Virtual mode: jumps to the next timeline timestamp and processes it.
  /// Returns false when the timeline is empty.
  bool advance_to_next_event() {
    if (cfg_.clock != ClockMode::Virtual) {
      throw Error(Errc::ModeError, "advance_to_next_event requires a virtual-clock device");
    }
    std::unique_lock lk(m_);
    return step_locked(lk, kNever);
  }

  SimTime now() {
    std::lock_guard lk(m_);
    return host_now_locked();
  }

  bool has_pending_work() {
    std::lock_guard lk(m_);
    return !events_.empty() || !held_.empty() || !waiters_.empty();
  }

  void set_barrier_elision(bool on) { barrier_elision_.store(on); }
  bool barrier_elision() const { return barrier_elision_.load(); }

  bool queue_in_order(std::uint32_t q) {
    std::lock_guard lk(m_);
    return queues_.at(q).in_order;
  }

  bool queue_has_incomplete(std::uint32_t q) {
    std::lock_guard lk(m_);
    if (!queues_.at(q).ops.empty()) return true;
    return std::any_of(held_.begin(), held_.end(), [&](const auto& s) { return s->queue == q; });
  }

  DeviceCounters counters() {
    std::lock_guard lk(m_);
    DeviceCounters c = counters_;
    c.event_waits = event_waits_.load();
    c.host_tasks = host_tasks_.load();
    return c;
  }

  std::vector<OpRecord> timeline() {
    std::lock_guard lk(m_);
    return timeline_;
  }

  HostTaskPool& hosttasks() { return hosttasks_; }

  bool gone() {
    std::lock_guard lk(m_);
    return gone_;
  }

  /// Stops the simulator, marks every outstanding event abandoned (waking
  /// waiters, failing host tasks with DeviceGone) and joins the host-task
  /// threads.
  void shutdown() {
    {
      std::lock_guard lk(m_);
      if (gone_) return;
      gone_ = true;
      stop_ = true;
    }
    sim_cv_.notify_all();
    if (sim_thread_.joinable()) sim_thread_.join();

    std::vector<std::pair<HostCallback, std::exception_ptr>> failed;
    {
      std::lock_guard lk(m_);
      auto reason = std::make_exception_ptr(Error(Errc::DeviceGone, "device destroyed"));
      auto abandon = [&](OpState& s) {
        s.ev->raw.fetch_or(detail::kAbandonedBit);
        s.ev->raw.notify_all();
        for (auto& cb : s.ev->host_callbacks) failed.emplace_back(std::move(cb), reason);
        s.ev->host_callbacks.clear();
      };
      for (auto& q : queues_) {
        for (auto& s : q.ops) abandon(*s);
        q.ops.clear();
      }
      for (auto& s : held_) abandon(*s);
      held_.clear();
      events_ = {};
      waiters_.clear();
    }
    dispatch(failed);
    hosttasks_.stop();
  }

 private:
  struct OpState {
    DeviceOp op;
    std::shared_ptr<detail::EventState> ev;
    std::uint32_t queue = 0;
    std::uint64_t seq = 0;
    SimTime ready{};
    bool holds_slot = false;
  };

  struct QueueState {
    bool in_order = true;
    std::deque<std::unique_ptr<OpState>> ops;  // front is the op in flight
    std::shared_ptr<detail::EventState> last_event;
  };

  enum class Phase : std::uint8_t { Complete = 0, Ready = 1 };

  struct SimEvent {
    SimTime time;
    Phase phase;
    std::uint64_t seq;
    std::uint32_t queue;
    bool operator>(const SimEvent& o) const {
      if (time != o.time) return time > o.time;
      if (phase != o.phase) return phase > o.phase;
      return seq > o.seq;
    }
  };

  struct Waiter {
    SimTime ready;
    std::uint64_t seq;
    std::uint32_t queue;
    bool operator<(const Waiter& o) const {
      return ready != o.ready ? ready < o.ready : seq < o.seq;
    }
  };

  using Dispatch = std::vector<std::pair<HostCallback, std::exception_ptr>>;

  void charge_host_cost() {
    if (cfg_.clock != ClockMode::RealTime) return;
    auto cost = cfg_.latency.submit_cost;
    if (!cfg_.internal_event_pool) cost += cfg_.event_alloc_cost;
    spin_for(cost);
  }

  SimTime wall_now() const {
    return std::chrono::duration_cast<SimDuration>(std::chrono::steady_clock::now() - epoch_);
  }

  SimTime host_now_locked() const {
    return cfg_.clock == ClockMode::Virtual ? now_ : wall_now();
  }

  std::shared_ptr<detail::EventState> new_event_locked() {
    auto ev = std::make_shared<detail::EventState>();
    ev->id = next_event_id_++;
    ev->core = weak_from_this();
    return ev;
  }

  void count_submit_locked(OpKind kind) {
    counters_.submits++;
    switch (kind) {
      case OpKind::Kernel: counters_.kernels++; break;
      case OpKind::CopyH2D: counters_.copies_h2d++; break;
      case OpKind::CopyD2H: counters_.copies_d2h++; break;
      case OpKind::Barrier: counters_.barriers++; break;
      case OpKind::DummyTask: counters_.dummies++; break;
    }
  }

  // Returns true when the simulator thread should re-evaluate its sleep.
  bool push_event_locked(SimEvent e) {
    events_.push(e);
    return cfg_.clock == ClockMode::RealTime && e.time < sim_wake_at_;
  }

  bool enqueue_locked(std::unique_ptr<OpState> s) {
    auto& q = queues_[s->queue];
    bool first = q.ops.empty();
    SimEvent e{s->ev->submit, Phase::Ready, s->seq, s->queue};
    q.ops.push_back(std::move(s));
    return first && push_event_locked(e);
  }

  bool flush_locked() {
    bool wake = false;
    auto now = host_now_locked();
    for (auto& s : held_) {
      s->ev->submit = now;
      s->ev->held.store(false);
      wake = enqueue_locked(std::move(s)) || wake;
    }
    held_.clear();
    return wake;
  }

  void start_locked(OpState& s, SimTime t) {
    s.ev->start = t;
    s.ev->raw.store(static_cast<std::uint8_t>(EventStatus::Running), std::memory_order_release);
    if (s.op.compute) s.op.compute();
    auto done = t + cfg_.latency.duration_of(s.op.kind, s.op.work_items, s.op.bytes);
    push_event_locked({done, Phase::Complete, s.seq, s.queue});
  }

  void on_ready_locked(const SimEvent& e) {
    auto& s = *queues_[e.queue].ops.front();
    s.ready = e.time;
    if (!needs_compute_slot(s.op.kind)) {
      start_locked(s, e.time);
    } else if (free_slots_ > 0) {
      --free_slots_;
      s.holds_slot = true;
      start_locked(s, e.time);
    } else {
      waiters_.insert({e.time, s.seq, s.queue});
    }
  }

  void on_complete_locked(const SimEvent& e, Dispatch& out) {
    auto& q = queues_[e.queue];
    std::unique_ptr<OpState> s = std::move(q.ops.front());
    q.ops.pop_front();
    s->ev->complete = e.time;
    if (cfg_.record_timeline) {
      timeline_.push_back({s->seq, s->ev->id, s->queue, s->op.kind, s->ev->submit, s->ev->start,
                           e.time});
    }
    for (auto& cb : s->ev->host_callbacks) out.emplace_back(std::move(cb), nullptr);
    s->ev->host_callbacks.clear();
    s->ev->raw.store(static_cast<std::uint8_t>(EventStatus::Complete), std::memory_order_release);
    s->ev->raw.notify_all();

    if (s->holds_slot) {
      ++free_slots_;
      if (!waiters_.empty()) {
        Waiter w = *waiters_.begin();
        waiters_.erase(waiters_.begin());
        --free_slots_;
        auto& next = *queues_[w.queue].ops.front();
        next.holds_slot = true;
        start_locked(next, e.time);
      }
    }
    if (!q.ops.empty()) {
      auto& next = *q.ops.front();
      push_event_locked({std::max(e.time, next.ev->submit), Phase::Ready, next.seq, e.queue});
    }
  }

  // Processes every timeline event at the earliest pending timestamp if it
  // is <= limit, then dispatches the host callbacks it released (with the
  // lock dropped). Returns false when nothing was due.
  bool step_locked(std::unique_lock<std::mutex>& lk, SimTime limit) {
    if (events_.empty() || events_.top().time > limit) return false;
    SimTime t = events_.top().time;
    Dispatch out;
    while (!events_.empty() && events_.top().time == t) {
      SimEvent e = events_.top();
      events_.pop();
      if (e.phase == Phase::Complete) {
        on_complete_locked(e, out);
      } else {
        on_ready_locked(e);
      }
    }
    if (cfg_.clock == ClockMode::Virtual) now_ = std::max(now_, t);
    if (!out.empty()) {
      lk.unlock();
      dispatch(out);
      lk.lock();
    }
    return true;
  }

  void dispatch(Dispatch& items) {
    for (auto& [cb, err] : items) {
      auto job = [cb = std::move(cb), err = err]() mutable { cb(err); };
      if (cfg_.clock == ClockMode::Virtual) {
        hosttasks_.run_sync(std::move(job));
      } else {
        Job j(std::move(job));
        if (!hosttasks_.post(std::move(j))) {
          // Pool already stopped; nothing left to run it on.
        }
      }
    }
    items.clear();
  }

  void sim_loop() {
#if defined(__linux__)
    prctl(PR_SET_TIMERSLACK, 1UL, 0, 0, 0);
#endif
    std::unique_lock lk(m_);
    while (!stop_) {
      if (events_.empty()) {
        sim_wake_at_ = kNever;
        sim_cv_.wait(lk);
        continue;
      }
      SimTime next = events_.top().time;
      SimTime now = wall_now();
      if (now < next) {
        sim_wake_at_ = next;
        sim_cv_.wait_until(lk, epoch_ + std::chrono::ceil<std::chrono::steady_clock::duration>(next));
        continue;
      }
      sim_wake_at_ = SimTime::min();
      while (step_locked(lk, now) && !stop_) {
      }
    }
  }

  DeviceConfig cfg_;
  std::mutex m_;
  std::deque<QueueState> queues_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> events_;
  std::set<Waiter> waiters_;
  std::vector<std::unique_ptr<OpState>> held_;
  std::int64_t free_slots_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_event_id_ = 1;
  SimTime now_{};
  DeviceCounters counters_;
  std::atomic<std::uint64_t> event_waits_{0};
  std::atomic<std::uint64_t> host_tasks_{0};
  std::vector<OpRecord> timeline_;
  std::atomic<bool> barrier_elision_;
  bool gone_ = false;
  bool stop_ = false;

  HostTaskPool hosttasks_;
  std::chrono::steady_clock::time_point epoch_;
  std::condition_variable sim_cv_;
  SimTime sim_wake_at_ = kNever;
  std::thread sim_thread_;
};

inline EventStatus DeviceEvent::status() const {
  if (s_->held.load(std::memory_order_acquire)) {
    if (auto core = s_->core.lock()) core->flush();
  }
  return static_cast<EventStatus>(s_->raw.load(std::memory_order_acquire) & detail::kStatusMask);
}

inline void DeviceEvent::wait() const {
  auto core = s_->core.lock();
  if (!core) {
    if (is_complete()) return;
    throw Error(Errc::DeviceGone, "device destroyed before completion");
  }
  core->wait(s_);
}

struct QueueProperties {
  bool in_order = true;
};

/// Handle to one command queue. The device core stays allocated while any
/// queue handle exists, but work is refused once the device is shut down.
class DeviceQueue {
 public:
  DeviceQueue() = default;
  DeviceQueue(std::shared_ptr<DeviceCore> core, std::uint32_t id) : core_(std::move(core)), id_(id) {}

  DeviceEvent submit(DeviceOp op) const { return core_->submit(id_, std::move(op)); }
  std::uint32_t id() const { return id_; }
  bool in_order() const { return core_->queue_in_order(id_); }
  bool has_incomplete() const { return core_->queue_has_incomplete(id_); }
  void flush() const { core_->flush(); }
  const std::shared_ptr<DeviceCore>& core() const { return core_; }
  explicit operator bool() const { return core_ != nullptr; }

 private:
  std::shared_ptr<DeviceCore> core_;
  std::uint32_t id_ = 0;
};

/// Owning handle of a simulated accelerator. Destroying it shuts the device
/// down; outstanding events are abandoned.
class VirtualDevice {
 public:
  explicit VirtualDevice(DeviceConfig cfg = {}) : core_(std::make_shared<DeviceCore>(cfg)) {
    core_->start();
  }
  VirtualDevice(const VirtualDevice&) = delete;
  VirtualDevice& operator=(const VirtualDevice&) = delete;
  ~VirtualDevice() { core_->shutdown(); }

  DeviceQueue create_queue(QueueProperties props = {}) {
    return DeviceQueue(core_, core_->create_queue(props.in_order));
  }

  void advance_virtual_clock(SimDuration dt) { core_->advance(dt); }
  bool advance_to_next_event() { return core_->advance_to_next_event(); }
  SimTime now() const { return core_->now(); }
  bool has_pending_work() const { return core_->has_pending_work(); }

  void register_host_task(const DeviceEvent& e, HostCallback cb) {
    core_->register_host_task(e, std::move(cb));
  }

  void set_barrier_elision(bool on) { core_->set_barrier_elision(on); }
  bool barrier_elision() const { return core_->barrier_elision(); }

  ClockMode clock_mode() const { return core_->config().clock; }
  const DeviceConfig& config() const { return core_->config(); }
  DeviceCounters counters() const { return core_->counters(); }
  std::vector<OpRecord> timeline() const { return core_->timeline(); }
  std::vector<std::thread::id> hosttask_thread_ids() const {
    return core_->hosttasks().thread_ids();
  }
  const HostTaskPool& hosttasks() const { return core_->hosttasks(); }

  void shutdown() { core_->shutdown(); }
  const std::shared_ptr<DeviceCore>& core() const { return core_; }

 private:
  std::shared_ptr<DeviceCore> core_;
};

inline DeviceEvent queue_submit(const DeviceQueue& q, DeviceOp op) { return q.submit(std::move(op)); }
inline EventStatus event_status(const DeviceEvent& e) { return e.status(); }
inline void event_wait(const DeviceEvent& e) { e.wait(); }
inline void register_host_task(VirtualDevice& d, const DeviceEvent& e, HostCallback cb) {
  d.register_host_task(e, std::move(cb));
}
inline void advance_virtual_clock(VirtualDevice& d, SimDuration dt) { d.advance_virtual_clock(dt); }
inline void set_barrier_elision(VirtualDevice& d, bool on) { d.set_barrier_elision(on); }

}  // namespace evbridge::vdev

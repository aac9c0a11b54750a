#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "evbridge/executors/aggregation_executor.hpp"
#include "evbridge/executors/buffer_pool.hpp"
#include "evbridge/executors/device_executor.hpp"

using namespace evbridge;
using namespace evbridge::exec;
using namespace evbridge::vdev;

namespace {

struct Rig {
  explicit Rig(IntegrationMode mode = IntegrationMode::Polling, std::size_t executors = 1) {
    DeviceConfig cfg;
    cfg.clock = ClockMode::Virtual;
    cfg.record_timeline = true;
    dev = std::make_unique<VirtualDevice>(cfg);
    PoolOptions o;
    o.manual = true;
    o.poll_hook = &reg;
    pool = std::make_unique<WorkerPool>(o);
    bridge = std::make_unique<Integration>(*pool, reg, *dev, mode);
    execs = std::make_unique<ExecutorPool>(*bridge, executors);
  }
  ~Rig() {
    pool->shutdown();
    dev->shutdown();
  }
  template <class T>
  void drive(const Future<T>& f) {
    for (;;) {
      pool->run_until_idle();
      if (f.is_ready()) return;
      ASSERT_TRUE(dev->advance_to_next_event()) << "stalled";
    }
  }
  void drain() {
    do {
      pool->run_until_idle();
    } while (dev->advance_to_next_event());
    pool->run_until_idle();
  }
  PollRegistry reg;
  std::unique_ptr<VirtualDevice> dev;
  std::unique_ptr<WorkerPool> pool;
  std::unique_ptr<Integration> bridge;
  std::unique_ptr<ExecutorPool> execs;
};

}  // namespace

TEST(DeviceExecutor, TwoWayThenPostProcess) {
  Rig r;
  auto& x = r.execs->at(0);
  int value = 0;
  auto f = x.async_execute(DeviceOp::kernel(1, [&] { value = 5; })).then(*r.pool, [&] {
    return value * 2;
  });
  r.drive(f);
  EXPECT_EQ(f.get(), 10);
}

TEST(DeviceExecutor, TwoWayReadyAtClosedForm) {
  Rig r;
  auto f = executor_two_way(r.execs->at(0), DeviceOp::kernel(512));
  r.drive(f);
  LatencyModel m;
  EXPECT_EQ(r.dev->now(), m.kernel_fixed + m.kernel_per_item * 512);
}

TEST(DeviceExecutor, OneWayOrderedBeforeTwoWay) {
  Rig r;
  auto& x = r.execs->at(0);
  std::vector<int> order;
  executor_one_way(x, DeviceOp::copy_h2d(64, [&] { order.push_back(1); }));
  auto f = x.async_execute(DeviceOp::kernel(1, [&] { order.push_back(2); }));
  r.drive(f);
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
}

TEST(DeviceExecutor, HundredOneWayThenQueueFuture) {
  Rig r;
  auto& x = r.execs->at(0);
  int done = 0;
  for (int i = 0; i < 100; ++i) executor_one_way(x, DeviceOp::copy_d2h(8, [&] { ++done; }));
  EXPECT_EQ(r.bridge->stats().total(), 0u);  // no bridging for one-way
  EXPECT_TRUE(x.busy());
  auto f = x.get_future();
  r.drive(f);
  EXPECT_EQ(done, 100);
  EXPECT_FALSE(x.busy());
}

TEST(DeviceExecutor, DeviceGoneFaultsTwoWayAndDropsOneWay) {
  Rig r;
  auto& x = r.execs->at(0);
  r.dev->shutdown();
  auto f = x.async_execute(DeviceOp::kernel(1));
  EXPECT_TRUE(f.has_error());
  x.post(DeviceOp::kernel(1));
  EXPECT_EQ(x.dropped(), 1u);
}

TEST(ExecutorPool, RoundRobin) {
  Rig r(IntegrationMode::Polling, 4);
  std::vector<std::size_t> got;
  for (int i = 0; i < 8; ++i) got.push_back(r.execs->acquire().id());
  EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 2, 3, 0, 1, 2, 3}));
  Rig one(IntegrationMode::Polling, 1);
  EXPECT_EQ(&one.execs->acquire(), &one.execs->acquire());
}

TEST(ExecutorPool, OneTwentyEightExecutorsFourStreamsEach) {
  Rig r(IntegrationMode::Polling, 128);
  std::vector<int> count(128, 0);
  for (int s = 0; s < 512; ++s) ++count[r.execs->acquire().id()];
  EXPECT_TRUE(std::all_of(count.begin(), count.end(), [](int c) { return c == 4; }));
}

TEST(BufferPool, ReuseSameSize) {
  BufferPool p;
  auto a = buf_alloc(p, 4096);
  auto id = a.id();
  buf_release(p, a);
  EXPECT_TRUE(p.is_free(a));
  auto b = buf_alloc(p, 4096);
  EXPECT_EQ(b.id(), id);
  EXPECT_TRUE(p.is_live(b));
  EXPECT_FALSE(p.is_free(b));
  auto c = buf_alloc(p, 4097);
  EXPECT_NE(c.id(), id);
  EXPECT_EQ(p.stats().reused, 1u);
  EXPECT_EQ(p.stats().created, 2u);
}

TEST(BufferPool, DoubleReleaseAndZeroSize) {
  BufferPool p;
  auto a = p.alloc(16);
  p.release(a);
  try {
    p.release(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PoolError);
  }
  EXPECT_THROW(p.alloc(0), Error);
}

TEST(BufferPool, LiveAndFreeNeverOverlap) {
  BufferPool p;
  std::mt19937 rng(3);
  std::vector<DeviceBuffer> live;
  for (int i = 0; i < 2000; ++i) {
    if (live.empty() || rng() % 2) {
      live.push_back(p.alloc(8 * (1 + rng() % 4)));
    } else {
      std::size_t k = rng() % live.size();
      p.release(live[k]);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
    }
    for (const auto& b : live) ASSERT_FALSE(p.is_free(b));
  }
  auto s = p.stats();
  EXPECT_EQ(s.live, live.size());
  EXPECT_EQ(s.live + s.free, s.created);
}

namespace {

struct AggRig : Rig {
  explicit AggRig(std::size_t max, IntegrationMode mode = IntegrationMode::Polling) : Rig(mode) {
    AggregationOptions o;
    o.max_slots = max;
    agg = std::make_unique<AggregationExecutor>(execs->at(0), buffers, *pool, o);
    agg->register_kind(0, [](std::span<double> s) {
      for (double& v : s) v = v * 2.0 + 1.0;
    });
    agg->register_kind(1, [](std::span<double> s) {
      for (double& v : s) v = v - 3.0;
    });
  }
  ~AggRig() { agg.reset(); }
  BufferPool buffers;
  std::unique_ptr<AggregationExecutor> agg;
};

}  // namespace

TEST(Aggregation, MaxOneIsPlainTwoWay) {
  AggRig r(1);
  std::vector<double> a(4, 1.0);
  auto f = agg_schedule(*r.agg, 0, 4, a);
  r.drive(f);
  EXPECT_EQ(a, std::vector<double>(4, 3.0));
  auto s = r.agg->stats();
  EXPECT_EQ(s.launches, 1u);
  EXPECT_EQ(s.full_launches, 1u);
  EXPECT_EQ(s.idleness_futures, 0u);
  auto c = r.dev->counters();
  EXPECT_EQ(c.kernels, 1u);
  EXPECT_EQ(c.transfers(), 2u);
  EXPECT_EQ(c.dummies, 0u);
}

TEST(Aggregation, LoneRequestLaunchesOnIdle) {
  AggRig r(2);
  std::vector<double> a(4, 0.0);
  auto f = r.agg->schedule(0, 4, a);
  EXPECT_NO_THROW(agg_first_slot_future(*r.agg, 0));
  r.drive(f);
  EXPECT_EQ(a, std::vector<double>(4, 1.0));
  auto log = r.agg->batch_log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].size, 1u);
  EXPECT_EQ(log[0].reason, LaunchReason::Idle);
}

TEST(Aggregation, FirstSlotFutureNeedsOpenBatch) {
  AggRig r(4);
  try {
    r.agg->first_slot_future(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StateError);
  }
  std::vector<double> a(2);
  r.agg->schedule(0, 2, a);
  auto idle = r.agg->first_slot_future(0);
  r.agg->schedule(0, 2, a);
  EXPECT_EQ(r.agg->stats().idleness_futures, 1u);  // once per batch
  r.drain();
  EXPECT_TRUE(idle.is_ready());
}

TEST(Aggregation, UnknownKindRejected) {
  AggRig r(4);
  std::vector<double> a(2);
  try {
    r.agg->schedule(7, 2, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::KindError);
  }
}

TEST(Aggregation, FullBeatsIdle) {
  AggRig r(3);
  std::vector<std::vector<double>> bufs(3, std::vector<double>(2, 0.0));
  std::vector<Future<void>> fs;
  for (auto& b : bufs) fs.push_back(r.agg->schedule(0, 2, b));
  r.drain();
  auto log = r.agg->batch_log();
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].reason, LaunchReason::Full);
  EXPECT_EQ(log[0].size, 3u);
  EXPECT_EQ(r.agg->stats().idle_noops, 1u);  // the idleness callback found nothing to do
  for (auto& f : fs) EXPECT_TRUE(f.is_ready());
}

TEST(Aggregation, SeventeenWhileBusyPartitionIntoEights) {
  AggRig r(8);
  // Keep the executor busy so only Full launches happen until it drains.
  executor_one_way(r.execs->at(0), DeviceOp::kernel(100000));
  std::vector<std::vector<double>> bufs(17, std::vector<double>(2, 1.0));
  std::vector<Future<void>> fs;
  for (auto& b : bufs) fs.push_back(r.agg->schedule(0, 2, b));
  r.drain();
  auto log = r.agg->batch_log();
  std::size_t sum = 0;
  for (auto& b : log) {
    EXPECT_LE(b.size, 8u);
    EXPECT_GE(b.size, 1u);
    sum += b.size;
  }
  EXPECT_EQ(sum, 17u);
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].size, 8u);
  EXPECT_EQ(log[1].size, 8u);
  EXPECT_EQ(log[2].size, 1u);
  EXPECT_EQ(log[2].reason, LaunchReason::Idle);
  for (auto& f : fs) EXPECT_TRUE(f.is_ready());
}

TEST(Aggregation, KindsNeverShareBatch) {
  AggRig r(4);
  std::vector<std::vector<double>> bufs(6, std::vector<double>(2, 10.0));
  for (int i = 0; i < 6; ++i) r.agg->schedule(i % 2, 2, bufs[i]);
  r.drain();
  for (auto& b : r.agg->batch_log()) EXPECT_LE(b.size, 3u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(bufs[i][0], i % 2 == 0 ? 21.0 : 7.0);
  }
}

TEST(Aggregation, FusedEqualsSeparate) {
  std::vector<std::vector<double>> fused(3), single(3);
  for (int i = 0; i < 3; ++i) {
    fused[i].resize(16);
    std::iota(fused[i].begin(), fused[i].end(), 0.25 * i);
    single[i] = fused[i];
  }
  {
    AggRig r(3);
    for (auto& v : fused) r.agg->schedule(0, 16, v);
    r.drain();
    EXPECT_EQ(r.agg->stats().launches, 1u);
  }
  {
    AggRig r(1);
    for (auto& v : single) r.agg->schedule(0, 16, v);
    r.drain();
    EXPECT_EQ(r.agg->stats().launches, 3u);
  }
  EXPECT_EQ(fused, single);
}

TEST(Aggregation, FusedKernelIsCheaperThanSeparate) {
  auto kernel_time = [](std::size_t max) {
    AggRig r(max);
    std::vector<std::vector<double>> bufs(4, std::vector<double>(8));
    for (auto& b : bufs) r.agg->schedule(0, 100, b);
    r.drain();
    SimDuration total{};
    for (const auto& rec : r.dev->timeline()) {
      if (rec.kind == OpKind::Kernel) total += rec.complete - rec.start;
    }
    return total;
  };
  LatencyModel m;
  EXPECT_EQ(kernel_time(4), m.kernel_fixed + m.kernel_per_item * 400);
  EXPECT_EQ(kernel_time(1), 4 * (m.kernel_fixed + m.kernel_per_item * 100));
  EXPECT_LT(kernel_time(4), kernel_time(1));
}

TEST(Aggregation, DeviceLossFaultsMembers) {
  AggRig r(1);
  std::vector<double> a(2);
  r.dev->shutdown();
  auto f = r.agg->schedule(0, 2, a);
  r.pool->run_until_idle();
  EXPECT_TRUE(f.has_error());
  EXPECT_EQ(r.buffers.stats().live, 0u);
}

TEST(Aggregation, RandomizedConservation) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t max = 1 + rng() % 9;
    std::size_t n = 1 + rng() % 40;
    AggRig r(max, static_cast<IntegrationMode>(rng() % 3));
    std::vector<std::vector<double>> bufs(n, std::vector<double>(2, 0.0));
    std::vector<Future<void>> fs;
    for (std::size_t i = 0; i < n; ++i) {
      fs.push_back(r.agg->schedule(rng() % 2, 1 + rng() % 50, bufs[i]));
      if (rng() % 4 == 0) r.dev->advance_to_next_event();
      if (rng() % 3 == 0) r.pool->run_until_idle();
    }
    r.drain();
    std::size_t sum = 0;
    for (auto& b : r.agg->batch_log()) {
      ASSERT_LE(b.size, max);
      sum += b.size;
    }
    ASSERT_EQ(sum, n);
    for (auto& f : fs) ASSERT_TRUE(f.is_ready() && !f.has_error());
  }
}

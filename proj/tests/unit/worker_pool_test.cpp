#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "evbridge/runtime.hpp"
#include "unit/fake_event.hpp"

using namespace evbridge;

TEST(WorkerPool, ThousandNoOpsAllComplete) {
  WorkerPool pool({.workers = 4});
  std::vector<Future<void>> fs;
  for (int i = 0; i < 1000; ++i) fs.push_back(pool.submit([] {}));
  when_all(fs).wait();
  for (auto& f : fs) EXPECT_TRUE(f.is_ready());
  EXPECT_GE(pool.stats().tasks_executed, 1000u);
}

TEST(WorkerPool, SubmitReturnsValue) {
  WorkerPool pool({.workers = 2});
  EXPECT_EQ(pool.submit([] { return 7; }).get(), 7);
}

TEST(WorkerPool, SubmitAfterShutdownIsRejected) {
  WorkerPool pool({.workers = 2});
  pool.shutdown();
  try {
    pool.submit([] {});
    FAIL() << "expected Shutdown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Shutdown);
  }
}

TEST(WorkerPool, ShutdownDrainsQueuedWork) {
  std::atomic<int> ran{0};
  {
    WorkerPool pool({.workers = 2});
    for (int i = 0; i < 200; ++i) pool.post([&] { ran.fetch_add(1); });
  }
  EXPECT_EQ(ran.load(), 200);
}

namespace {

Task<void> waits_on(Future<void> f, std::vector<int>* trace, std::mutex* m) {
  {
    std::lock_guard lk(*m);
    trace->push_back(0);
  }
  co_await f;
  std::lock_guard lk(*m);
  trace->push_back(2);
}

}  // namespace

TEST(WorkerPool, SuspendedTaskFreesItsWorker) {
  // One worker: the awaited future is only completed by a task queued after
  // the suspending one, so it must run while the first is parked.
  WorkerPool pool({.workers = 1});
  Promise<void> gate;
  std::vector<int> trace;
  std::mutex m;
  auto done = pool.spawn(waits_on(gate.get_future(), &trace, &m));
  pool.post([&, g = std::move(gate)]() mutable {
    {
      std::lock_guard lk(m);
      trace.push_back(1);
    }
    g.set_value();
  });
  done.wait();
  EXPECT_EQ(trace, (std::vector<int>{0, 1, 2}));
}

TEST(WorkerPool, ManualPoolRunsFifoOnCaller) {
  PoolOptions o;
  o.manual = true;
  WorkerPool pool(o);
  std::vector<int> order;
  for (int i = 0; i < 5; ++i) pool.post([&order, i] { order.push_back(i); });
  EXPECT_TRUE(order.empty());
  EXPECT_EQ(pool.run_until_idle(), 5u);
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(WorkerPool, RunUntilIdleNeedsManualPool) {
  WorkerPool pool({.workers = 1});
  EXPECT_THROW(pool.run_until_idle(), Error);
}

TEST(WorkerPool, ContinuationsRunOnWorkers) {
  WorkerPool pool({.workers = 3});
  Promise<void> p;
  std::atomic<bool> on_worker{false};
  auto f = p.get_future().then(pool, [&] {
    on_worker = pool.owns_thread(std::this_thread::get_id());
  });
  p.set_value();
  f.wait();
  EXPECT_TRUE(on_worker.load());
}

TEST(WorkerPool, IdlePoolStillPolls) {
  BasicPollRegistry<FakeEvent> reg;
  PoolOptions o;
  o.workers = 2;
  o.poll_hook = &reg;
  WorkerPool pool(o);
  FakeEvent ev;
  std::atomic<bool> fired{false};
  reg.add(ev, [&](std::exception_ptr) { fired = true; });
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  EXPECT_FALSE(fired.load());
  ev.complete();
  auto until = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (!fired.load() && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(std::chrono::microseconds(50));
  }
  EXPECT_TRUE(fired.load());
}

TEST(WorkerPool, BusyPoolDoesNotStarveCallbacks) {
  BasicPollRegistry<FakeEvent> reg;
  PoolOptions o;
  o.workers = 2;
  o.poll_hook = &reg;
  WorkerPool pool(o);
  std::vector<FakeEvent> evs(100);
  std::atomic<int> fired{0};
  for (auto& e : evs) reg.add(e, [&](std::exception_ptr) { fired.fetch_add(1); });
  std::atomic<int> ran{0};
  for (int i = 0; i < 10000; ++i) {
    pool.post([&, i] {
      ran.fetch_add(1);
      if (i % 100 == 0) evs[i / 100].complete();
    });
  }
  auto until = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while ((fired.load() < 100 || ran.load() < 10000) && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(std::chrono::microseconds(100));
  }
  EXPECT_EQ(ran.load(), 10000);
  EXPECT_EQ(fired.load(), 100);
}

TEST(WorkerPool, ShutdownFaultsPendingCallbacks) {
  BasicPollRegistry<FakeEvent> reg;
  Future<void> f;
  {
    PoolOptions o;
    o.workers = 1;
    o.poll_hook = &reg;
    WorkerPool pool(o);
    Promise<void> p;
    f = p.get_future();
    FakeEvent never;
    reg.add(never, [p = std::move(p)](std::exception_ptr e) mutable {
      if (e) p.set_error(e);
      else p.set_value();
    });
  }
  ASSERT_TRUE(f.has_error());
  try {
    f.get();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Shutdown);
  }
}

TEST(WorkerPool, WorkIsStolenAcrossWorkers) {
  WorkerPool pool({.workers = 4});
  std::mutex m;
  std::set<std::thread::id> seen;
  // Fan out from one worker so the other workers can only get work by stealing.
  pool.submit([&] {
        std::vector<Future<void>> inner;
        for (int i = 0; i < 400; ++i) {
          inner.push_back(pool.submit([&] {
            auto t0 = std::chrono::steady_clock::now();
            while (std::chrono::steady_clock::now() - t0 < std::chrono::microseconds(20)) {
            }
            std::lock_guard lk(m);
            seen.insert(std::this_thread::get_id());
          }));
        }
        return inner;
      })
      .get();
  auto until = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (pool.stats().tasks_executed < 401 && std::chrono::steady_clock::now() < until) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  EXPECT_EQ(pool.stats().tasks_executed, 401u);
  if (std::thread::hardware_concurrency() > 1) EXPECT_GT(pool.stats().steals, 0u);
}

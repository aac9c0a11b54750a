// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "evbridge/bench/bench.hpp"
#include "evbridge/executors/aggregation_executor.hpp"
#include "evbridge/miniapp/miniapp.hpp"
#include "support/reference_miniapp.hpp"
#include "support/reference_sim.hpp"

using namespace evbridge;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

bench::RunConfig desk(IntegrationMode mode, std::size_t e, std::size_t m, std::size_t w) {
  bench::RunConfig c;  // desk defaults: 64 sub-grids, 15 steps, real clock
  c.mode = mode;
  c.executors = e;
  c.max_agg = m;
  c.workers = w;
  c.repeats = 3;
  return c;
}

// 1. per-step launch and transfer counts at the full scenario size
Verdict count_exactness() {
  auto t0 = Clock::now();
  auto sc = mini::build_scenario({512, 2});
  mini::SessionConfig cfg;
  cfg.executors = 32;
  cfg.max_agg = 1;
  cfg.device.clock = vdev::ClockMode::Virtual;
  mini::Session ses(cfg);
  auto run = mini::MiniApp(ses, sc).run(2);
  bool ok = true;
  for (const auto& s : run.steps) ok = ok && s.kernels == 7680 && s.transfers == 15360;
  double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, fmt("kernels/step=%llu transfers/step=%llu (want 7680/15360), %.2fs",
                  static_cast<unsigned long long>(run.steps[0].kernels),
                  static_cast<unsigned long long>(run.steps[0].transfers), secs)};
}

// 2. bitwise checksum across the full mode/E/M/W/elision matrix
Verdict checksum_invariance() {
  const std::size_t subgrids = 16, steps = 2;
  const std::uint64_t want = refapp::run(subgrids, steps);
  std::size_t runs = 0, bad = 0;
  for (auto clock : {vdev::ClockMode::Virtual, vdev::ClockMode::RealTime}) {
    for (auto mode : {IntegrationMode::Polling, IntegrationMode::HostTask, IntegrationMode::Fence}) {
      for (std::size_t e : {1, 8, 32}) {
        for (std::size_t m : {1, 8, 32}) {
          for (std::size_t w : {1, 4, 8}) {
            for (bool elide : {true, false}) {
              bench::RunConfig c;
              c.clock = clock;
              c.mode = mode;
              c.executors = e;
              c.max_agg = m;
              c.workers = w;
              c.barrier_elision = elide;
              c.inject_barriers = true;
              c.subgrids = subgrids;
              c.steps = steps;
              c.repeats = 1;
              auto r = bench::run_cell(c);
              ++runs;
              if (!r.ok || r.checksum != want) {
                ++bad;
                std::fprintf(stderr, "  mismatch: %s E=%zu M=%zu W=%zu elision=%d %s\n",
                             std::string(to_string(mode)).c_str(), e, m, w, elide,
                             r.ok ? "" : r.error.c_str());
              }
            }
          }
        }
      }
    }
  }
  return {bad == 0, fmt("%zu runs (virtual + real clock), %zu differ from reference %s", runs,
                        bad, mini::checksum_hex(want).c_str())};
}

// 3. polling vs fence
Verdict polling_beats_fence() {
  auto t0 = Clock::now();
  auto poll = bench::run_cell(desk(IntegrationMode::Polling, 1, 8, 4));
  auto fence = bench::run_cell(desk(IntegrationMode::Fence, 1, 8, 4));
  double secs = seconds_since(t0);
  if (!poll.ok || !fence.ok) return {false, "run failed: " + poll.error + fence.error};
  double speedup = fence.mean_step_ms / poll.mean_step_ms;
  return {speedup >= 1.05 && secs < 120.0,
          fmt("polling %.3f ms vs fence %.3f ms (median of 3), speedup %.3f (want >= 1.05), %.1fs",
              poll.mean_step_ms, fence.mean_step_ms, speedup, secs)};
}

// 4. host tasks vs polling under heavy aggregation
Verdict hosttask_not_faster() {
  auto t0 = Clock::now();
  auto poll = bench::run_cell(desk(IntegrationMode::Polling, 1, 32, 8));
  auto host = bench::run_cell(desk(IntegrationMode::HostTask, 1, 32, 8));
  double secs = seconds_since(t0);
  if (!poll.ok || !host.ok) return {false, "run failed: " + poll.error + host.error};
  return {host.mean_step_ms >= poll.mean_step_ms && secs < 120.0,
          fmt("hosttask %.3f ms vs polling %.3f ms (median of 3), %.1fs", host.mean_step_ms,
              poll.mean_step_ms, secs)};
}

// 5. barrier elision
Verdict elision_helps() {
  auto t0 = Clock::now();
  auto on = desk(IntegrationMode::Polling, 4, 1, 4);
  on.inject_barriers = true;
  on.latency.barrier_cost = micros(10);
  on.barrier_elision = true;
  auto off = on;
  off.barrier_elision = false;
  auto ron = bench::run_cell(on);
  auto roff = bench::run_cell(off);
  double secs = seconds_since(t0);
  if (!ron.ok || !roff.ok) return {false, "run failed: " + ron.error + roff.error};
  bool ok = ron.mean_step_ms < roff.mean_step_ms && ron.checksum == roff.checksum && secs < 120.0;
  return {ok, fmt("on %.3f ms vs off %.3f ms, checksums %s/%s, %.1fs", ron.mean_step_ms,
                  roff.mean_step_ms, mini::checksum_hex(ron.checksum).c_str(),
                  mini::checksum_hex(roff.checksum).c_str(), secs)};
}

// 6. single-entrant poll body and no event_wait outside fence mode
Verdict poll_exclusion() {
  PollRegistry reg;
  vdev::DeviceConfig dc;
  dc.latency.kernel_fixed = micros(5);
  dc.latency.submit_cost = SimDuration::zero();
  dc.event_alloc_cost = SimDuration::zero();
  vdev::VirtualDevice dev(dc);
  std::vector<vdev::DeviceQueue> qs;
  for (int i = 0; i < 16; ++i) qs.push_back(dev.create_queue());
  std::atomic<int> fired{0};
  std::atomic<bool> go{false};
  constexpr int kPerThread = 300;
  std::vector<std::thread> ts;
  for (int t = 0; t < 16; ++t) {
    ts.emplace_back([&, t] {
      while (!go.load()) {
      }
      for (int i = 0; i < kPerThread; ++i) {
        reg.add(qs[t].submit(vdev::DeviceOp::kernel(1)), [&](std::exception_ptr) { fired++; });
        reg.poll();
      }
      auto until = Clock::now() + std::chrono::seconds(20);
      while (fired.load() < 16 * kPerThread && Clock::now() < until) reg.poll();
    });
  }
  go = true;
  for (auto& t : ts) t.join();
  auto st = reg.stats();

  std::uint64_t waits = 0;
  for (auto clock : {vdev::ClockMode::Virtual, vdev::ClockMode::RealTime}) {
    for (auto mode : {IntegrationMode::Polling, IntegrationMode::HostTask}) {
      bench::RunConfig c;
      c.clock = clock;
      c.mode = mode;
      c.subgrids = 16;
      c.steps = 2;
      c.executors = 4;
      c.max_agg = 4;
      c.repeats = 1;
      auto r = bench::run_cell(c);
      waits += r.ok ? r.event_waits : 1;
    }
  }
  bool ok = st.entry_high_water == 1 && fired.load() == 16 * kPerThread && waits == 0;
  return {ok, fmt("high-water=%llu contended=%llu fired=%d/%d, event_wait calls in polling/hosttask=%llu",
                  static_cast<unsigned long long>(st.entry_high_water),
                  static_cast<unsigned long long>(st.contended), fired.load(), 16 * kPerThread,
                  static_cast<unsigned long long>(waits))};
}

// 7. aggregation conservation and termination, 1000 randomized trials
Verdict aggregation_property() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  std::size_t failures = 0, odd = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t max = 1 + rng() % 16;
    const std::size_t n = 1 + rng() % 64;
    if (n % max) ++odd;
    auto mode = static_cast<IntegrationMode>(rng() % 3);

    PollRegistry reg;
    vdev::DeviceConfig dc;
    dc.clock = vdev::ClockMode::Virtual;
    vdev::VirtualDevice dev(dc);
    PoolOptions po;
    po.manual = true;
    po.poll_hook = &reg;
    WorkerPool pool(po);
    Integration bridge(pool, reg, dev, mode);
    exec::DeviceExecutor x(bridge, 0);
    exec::BufferPool buffers;
    exec::AggregationOptions ao;
    ao.max_slots = max;
    exec::AggregationExecutor agg(x, buffers, pool, ao);
    agg.register_kind(0, [](std::span<double> s) { for (double& v : s) v += 1.0; });
    agg.register_kind(1, [](std::span<double> s) { for (double& v : s) v *= 2.0; });

    std::vector<std::vector<double>> data(n, std::vector<double>(4, 1.0));
    std::vector<Future<void>> fs;
    for (std::size_t i = 0; i < n; ++i) {
      fs.push_back(agg.schedule(rng() % 2, 1 + rng() % 512, data[i]));
      if (rng() % 3 == 0) dev.advance_to_next_event();
      if (rng() % 2 == 0) pool.run_until_idle();
    }
    // Run to completion; a permanently open batch shows up as a stall.
    auto all = when_all(fs);
    std::size_t guard = 0;
    while (!all.is_ready() && guard++ < 100000) {
      pool.run_until_idle();
      if (all.is_ready()) break;
      if (!dev.advance_to_next_event()) {
        pool.run_until_idle();
        break;
      }
    }
    std::size_t sum = 0;
    bool bounded = true;
    for (const auto& b : agg.batch_log()) {
      sum += b.size;
      bounded = bounded && b.size >= 1 && b.size <= max;
    }
    bool ok = all.is_ready() && !all.has_error() && bounded && sum == n &&
              agg.stats().requests == n;
    if (!ok) ++failures;
    pool.shutdown();
  }
  double secs = seconds_since(t0);
  return {failures == 0 && secs < 60.0,
          fmt("1000 trials (%zu with request count not divisible by M), %zu violations, %.2fs", odd,
              failures, secs)};
}

// 8. virtual-clock determinism of the emitted CSV
Verdict virtual_determinism() {
  bench::MatrixSpec s;
  s.base.clock = vdev::ClockMode::Virtual;
  s.base.subgrids = 32;
  s.base.steps = 3;
  s.base.executors = 4;
  s.sweep = bench::Sweep::Aggregation;
  auto a = bench::to_csv(bench::run_matrix(s));
  auto b = bench::to_csv(bench::run_matrix(s));
  auto rows = std::count(a.begin(), a.end(), '\n') - 1;
  return {a == b, fmt("%ld rows, %zu bytes, identical=%s", static_cast<long>(rows), a.size(),
                      a == b ? "yes" : "no")};
}

// 9. device timeline vs the reference simulator
Verdict oracle_equivalence() {
  vdev::DeviceConfig dc;
  dc.clock = vdev::ClockMode::Virtual;
  dc.compute_slots = 1;  // the queues contend for the single slot
  vdev::VirtualDevice dev(dc);
  auto qa = dev.create_queue();
  auto qb = dev.create_queue();
  using K = refsim::Kind;
  std::vector<refsim::Op> script = {
      {0, K::H2D, 0, 4096},  {1, K::Kernel, 2048, 0}, {0, K::Kernel, 512, 0},
      {1, K::D2H, 0, 1024},  {0, K::Barrier, 0, 0},   {1, K::Kernel, 64, 0},
      {0, K::Kernel, 8, 0},  {1, K::Dummy, 0, 0},     {0, K::D2H, 0, 65536},
      {1, K::H2D, 0, 128},
  };
  std::vector<vdev::DeviceEvent> evs;
  std::int64_t t = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    auto& op = script[i];
    if (i == 6) {  // later submissions arrive while the device is busy
      dev.advance_virtual_clock(micros(30));
      t += micros(30).count();
    }
    op.submit_ps = t;
    auto& q = op.queue == 0 ? qa : qb;
    switch (op.kind) {
      case K::Kernel: evs.push_back(q.submit(vdev::DeviceOp::kernel(op.items))); break;
      case K::H2D: evs.push_back(q.submit(vdev::DeviceOp::copy_h2d(op.bytes))); break;
      case K::D2H: evs.push_back(q.submit(vdev::DeviceOp::copy_d2h(op.bytes))); break;
      case K::Barrier: evs.push_back(q.submit(vdev::DeviceOp::barrier())); break;
      case K::Dummy: evs.push_back(q.submit(vdev::DeviceOp::dummy())); break;
    }
  }
  while (dev.advance_to_next_event()) {
  }
  refsim::Costs c{dc.latency.kernel_fixed.count(), dc.latency.kernel_per_item.count(),
                  dc.latency.copy_per_byte.count(), dc.latency.barrier_cost.count()};
  auto want = refsim::simulate(script, c, 1);
  std::size_t mismatched = 0;
  for (std::size_t i = 0; i < script.size(); ++i) {
    if (evs[i].start_time().count() != want[i].start_ps ||
        evs[i].completion_time().count() != want[i].end_ps) {
      ++mismatched;
      std::fprintf(stderr, "  op %zu: device [%lld, %lld] reference [%lld, %lld]\n", i,
                   static_cast<long long>(evs[i].start_time().count()),
                   static_cast<long long>(evs[i].completion_time().count()),
                   static_cast<long long>(want[i].start_ps), static_cast<long long>(want[i].end_ps));
    }
  }
  return {mismatched == 0, fmt("10 ops on 2 queues, %zu timestamp mismatches, last completion %.3f us",
                               mismatched, to_micros(evs.back().completion_time()))};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  std::vector<Criterion> all = {
      {1, "count exactness", count_exactness},
      {2, "checksum invariance", checksum_invariance},
      {3, "polling beats fence", polling_beats_fence},
      {4, "hosttask not faster than polling", hosttask_not_faster},
      {5, "barrier elision helps", elision_helps},
      {6, "poll exclusion and non-blocking", poll_exclusion},
      {7, "aggregation conservation and deadlock freedom", aggregation_property},
      {8, "virtual-clock determinism", virtual_determinism},
      {9, "reference simulator equivalence", oracle_equivalence},
  };
  int failed = 0;
  for (const auto& c : all) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%d] %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/miniapp/scenario.hpp"
#include "evbridge/miniapp/session.hpp"
#include "evbridge/runtime/future.hpp"
#include "evbridge/runtime/task.hpp"

namespace evbridge::mini {

struct StepMetrics {
  double step_ms = 0.0;
  double dt = 0.0;
  std::uint64_t kernels = 0;
  std::uint64_t transfers = 0;
  std::uint64_t barriers = 0;
  std::uint64_t dummies = 0;
  std::uint64_t requests = 0;  // kernel requests handed to the aggregators
  std::uint64_t launches = 0;  // fused launches
  std::uint64_t full_launches = 0;
  std::uint64_t idle_launches = 0;
  std::uint64_t event_waits = 0;
  std::vector<std::uint64_t> histogram;  // histogram[k] = launches of k requests
  double busy_ms = 0.0;                  // summed worker busy time
};

/// Running totals over several steps.
struct RunMetrics {
  std::vector<StepMetrics> steps;

  double mean_step_ms() const {
    if (steps.empty()) return 0.0;
    double s = 0.0;
    for (const auto& m : steps) s += m.step_ms;
    return s / static_cast<double>(steps.size());
  }
  std::uint64_t total(std::uint64_t StepMetrics::*field) const {
    std::uint64_t t = 0;
    for (const auto& m : steps) t += m.*field;
    return t;
  }
  double mean_batch() const {
    auto l = total(&StepMetrics::launches);
    return l == 0 ? 0.0 : static_cast<double>(total(&StepMetrics::requests)) / static_cast<double>(l);
  }
};

/// Drives the per-step task graph of a scenario on a session. Per sub-grid
/// and step there are three chains; each chain is a ghost fill on the CPU,
/// five device kernels (each with its own copy-in and copy-out), and a CPU
/// post-process. The step ends with a min-reduction over sub-grids.
class MiniApp {
 public:
  MiniApp(Session& session, Scenario& scenario) : ses_(session), sc_(scenario) {}

  StepMetrics run_step() {
    auto ctx = std::make_shared<StepCtx>(sc_.grids.size(), sc_.generation);
    auto c0 = ses_.device().counters();
    auto a0 = agg_totals();
    auto p0 = ses_.pool().stats();
    SimTime t0 = ses_.now();

    std::vector<Future<void>> done;
    done.reserve(sc_.grids.size());
    for (std::size_t i = 0; i < sc_.grids.size(); ++i) {
      done.push_back(ses_.pool().spawn(subgrid_step(ctx, &sc_, &ses_, i)));
    }
    Future<double> dt = reduce_min(ctx->post_f[kChains - 1]);
    Future<void> all = when_all(done);
    ses_.drive(all);
    ses_.drive(dt);
    if (all.has_error()) std::rethrow_exception(all.error());
    if (dt.has_error()) std::rethrow_exception(dt.error());

    SimTime t1 = ses_.now();
    auto c1 = ses_.device().counters();
    auto a1 = agg_totals();
    auto p1 = ses_.pool().stats();

    StepMetrics m;
    m.step_ms = to_millis(t1 - t0);
    m.dt = dt.get();
    m.kernels = c1.kernels - c0.kernels;
    m.transfers = c1.transfers() - c0.transfers();
    m.barriers = c1.barriers - c0.barriers;
    m.dummies = c1.dummies - c0.dummies;
    m.event_waits = c1.event_waits - c0.event_waits;
    m.requests = a1.requests - a0.requests;
    m.launches = a1.launches - a0.launches;
    m.full_launches = a1.full_launches - a0.full_launches;
    m.idle_launches = a1.idle_launches - a0.idle_launches;
    m.histogram.resize(a1.histogram.size());
    for (std::size_t k = 0; k < a1.histogram.size(); ++k) {
      m.histogram[k] = a1.histogram[k] - (k < a0.histogram.size() ? a0.histogram[k] : 0);
    }
    m.busy_ms = std::chrono::duration<double, std::milli>(p1.busy - p0.busy).count();

    sc_.dts.push_back(m.dt);
    sc_.generation += kChains * kKernelsPerChain;
    return m;
  }

  RunMetrics run(std::size_t steps) {
    RunMetrics r;
    for (std::size_t s = 0; s < steps; ++s) r.steps.push_back(run_step());
    return r;
  }

 private:
  struct StepCtx {
    StepCtx(std::size_t n, std::uint64_t gen) : generation(gen) {
      for (std::size_t c = 0; c < kChains; ++c) {
        ghost[c].resize(n);
        post[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          ghost_f[c].push_back(ghost[c][i].get_future());
          post_f[c].push_back(post[c][i].get_future());
        }
      }
    }
    std::uint64_t generation;
    std::array<std::vector<Promise<void>>, kChains> ghost;
    std::array<std::vector<Promise<double>>, kChains> post;
    std::array<std::vector<Future<void>>, kChains> ghost_f;
    std::array<std::vector<Future<double>>, kChains> post_f;
  };

  static Task<void> subgrid_step(std::shared_ptr<StepCtx> ctx, Scenario* sc, Session* ses,
                                 std::size_t i) {
    try {
      auto& g = sc->grids[i];
      const std::size_t l = sc->left(i);
      const std::size_t r = sc->right(i);
      auto& agg = ses->aggregator(i % ses->aggregators());

      for (std::size_t c = 0; c < kChains; ++c) {
        if (c > 0) {
          std::vector<Future<double>> prev{ctx->post_f[c - 1][l], ctx->post_f[c - 1][i],
                                           ctx->post_f[c - 1][r]};
          Future<void> ready = when_all(prev);
          co_await ready;
        }
        auto lc = sc->grids[l].cells();
        auto rc = sc->grids[r].cells();
        std::copy(lc.end() - kFace, lc.end(), g.ghost_left.begin());
        std::copy(rc.begin(), rc.begin() + kFace, g.ghost_right.begin());
        ctx->ghost[c][i].set_value();

        // Neighbors must have read our faces before we overwrite them.
        std::vector<Future<void>> faces{ctx->ghost_f[c][l], ctx->ghost_f[c][i], ctx->ghost_f[c][r]};
        Future<void> read = when_all(faces);
        co_await read;
        auto cells = g.cells();
        for (std::size_t j = 0; j < kFace; ++j) {
          cells[j] = 0.5 * (cells[j] + g.ghost_left[j]);
          cells[kCells - kFace + j] = 0.5 * (cells[kCells - kFace + j] + g.ghost_right[j]);
        }

        for (std::size_t k = 0; k < kKernelsPerChain; ++k) {
          Future<void> f = agg.schedule(static_cast<exec::KernelKind>(k), kCells, g.payload());
          co_await f;
        }

        const double want = static_cast<double>(ctx->generation + (c + 1) * kKernelsPerChain);
        for (double s : g.stamps()) {
          if (s != want) {
            throw Error(Errc::StateError, "sub-grid " + std::to_string(i) +
                                              " post-process saw stale cells (stamp " +
                                              std::to_string(s) + ")");
          }
        }
        double sum = 0.0;
        double lo = cells[0];
        for (double v : cells) {
          sum += v;
          lo = std::min(lo, v);
        }
        g.accumulator += sum;
        g.min_cell = lo;
        ctx->post[c][i].set_value(lo);
      }
    } catch (...) {
      auto err = std::current_exception();
      for (std::size_t c = 0; c < kChains; ++c) {
        ctx->ghost[c][i].try_set_error(err);
        ctx->post[c][i].try_set_error(err);
      }
      throw;
    }
  }

  /// Pairwise continuation tree.
  Future<double> reduce_min(std::vector<Future<double>> level) {
    auto& pool = ses_.pool();
    while (level.size() > 1) {
      std::vector<Future<double>> next;
      for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
        auto a = level[k];
        auto b = level[k + 1];
        next.push_back(when_all(std::vector<Future<double>>{a, b}).then(pool, [a, b] {
          return std::min(a.get(), b.get());
        }));
      }
      if (level.size() % 2) next.push_back(level.back());
      level = std::move(next);
    }
    return level.front();
  }

  exec::AggregationStats agg_totals() {
    exec::AggregationStats t;
    for (std::size_t e = 0; e < ses_.aggregators(); ++e) {
      auto s = ses_.aggregator(e).stats();
      t.requests += s.requests;
      t.launches += s.launches;
      t.full_launches += s.full_launches;
      t.idle_launches += s.idle_launches;
      t.idleness_futures += s.idleness_futures;
      if (t.histogram.size() < s.histogram.size()) t.histogram.resize(s.histogram.size());
      for (std::size_t k = 0; k < s.histogram.size(); ++k) t.histogram[k] += s.histogram[k];
    }
    return t;
  }

  Session& ses_;
  Scenario& sc_;
};

inline StepMetrics run_step(Session& session, Scenario& scenario) {
  return MiniApp(session, scenario).run_step();
}

}  // namespace evbridge::mini

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "evbridge/common/error.hpp"
#include "evbridge/common/time.hpp"
#include "evbridge/integration/integration.hpp"
#include "evbridge/miniapp/miniapp.hpp"
#include "evbridge/miniapp/scenario.hpp"
#include "evbridge/miniapp/session.hpp"
#include "evbridge/vdevice/device.hpp"

namespace evbridge::bench {

enum class Sweep : std::uint8_t { None, Executors, Aggregation, Workers };
enum class OutputFormat : std::uint8_t { Csv, Json };

constexpr std::string_view to_string(Sweep s) {
  switch (s) {
    case Sweep::None: return "none";
    case Sweep::Executors: return "executors";
    case Sweep::Aggregation: return "aggregation";
    case Sweep::Workers: return "workers";
  }
  return "?";
}

struct RunConfig {
  std::size_t workers = 8;
  std::size_t executors = 32;
  std::size_t max_agg = 8;
  IntegrationMode mode = IntegrationMode::Polling;
  bool barrier_elision = false;
  vdev::ClockMode clock = vdev::ClockMode::RealTime;
  vdev::LatencyModel latency;
  SimDuration event_alloc_cost = micros(1);
  std::size_t compute_slots = 16;
  std::size_t subgrids = 64;
  std::size_t steps = 15;
  std::uint64_t seed = 1;
  std::size_t repeats = 0;  // 0: 3 with a real clock, 1 with a virtual one
  bool inject_barriers = false;
  std::size_t hosttask_threads = 2;
  bool lazy_submit = false;
  bool event_pool = false;

  std::size_t effective_repeats() const {
    if (repeats) return repeats;
    return clock == vdev::ClockMode::Virtual ? 1 : 3;
  }

  /// Throws Error(Usage) naming the offending flag.
  void validate() const {
    auto need = [](bool ok, const char* flag) {
      if (!ok) throw Error(Errc::Usage, std::string(flag) + " must be >= 1");
    };
    need(workers >= 1, "--workers");
    need(executors >= 1, "--executors");
    need(max_agg >= 1, "--max-agg");
    need(steps >= 1, "--steps");
    need(subgrids >= 1, "--subgrids");
    need(compute_slots >= 1, "--compute-slots");
    need(hosttask_threads >= 1, "--hosttask-threads");
  }

  mini::SessionConfig session() const {
    mini::SessionConfig s;
    s.workers = workers;
    s.executors = executors;
    s.max_agg = max_agg;
    s.mode = mode;
    s.inject_barriers = inject_barriers;
    s.seed = seed;
    s.device.compute_slots = compute_slots;
    s.device.clock = clock;
    s.device.latency = latency;
    s.device.event_alloc_cost = event_alloc_cost;
    s.device.internal_event_pool = event_pool;
    s.device.hosttask_threads = hosttask_threads;
    s.device.barrier_elision = barrier_elision;
    s.device.lazy_submit = lazy_submit;
    return s;
  }
};

struct MatrixSpec {
  RunConfig base;
  std::vector<IntegrationMode> modes{IntegrationMode::Polling, IntegrationMode::HostTask,
                                     IntegrationMode::Fence};
  Sweep sweep = Sweep::None;
  OutputFormat format = OutputFormat::Csv;
  std::string out;  // empty: stdout
};

struct RunResult {
  RunConfig cfg;
  bool ok = false;
  std::string error;
  double mean_step_ms = 0.0;
  double stddev_ms = 0.0;
  std::vector<double> step_ms;  // of the reported repeat
  double speedup_vs_fence = 0.0;
  double launches = 0.0;  // device kernel launches per step
  double transfers = 0.0;
  double mean_batch = 0.0;
  std::uint64_t full_launches = 0;
  std::uint64_t idle_launches = 0;
  std::uint64_t event_waits = 0;
  std::uint64_t checksum = 0;
};

/// Ordering key for emitted rows.
inline auto row_key(const RunConfig& c) {
  return std::make_tuple(static_cast<int>(c.mode), c.executors, c.max_agg, c.workers,
                         c.barrier_elision);
}

/// Parameter cells of a sweep (mode left as in `base`).
inline std::vector<RunConfig> sweep_cells(const RunConfig& base, Sweep sweep) {
  std::vector<RunConfig> cells;
  auto push = [&](std::size_t w, std::size_t e, std::size_t m) {
    RunConfig c = base;
    c.workers = w;
    c.executors = e;
    c.max_agg = m;
    cells.push_back(c);
  };
  switch (sweep) {
    case Sweep::None:
      push(base.workers, base.executors, base.max_agg);
      break;
    case Sweep::Executors:
      for (std::size_t e = 1; e <= 128; e *= 2) push(base.workers, e, 1);
      break;
    case Sweep::Aggregation:
      for (std::size_t m = 1; m <= 64; m *= 2) push(base.workers, 1, m);
      break;
    case Sweep::Workers:
      for (std::size_t w = 1; w <= 32; w *= 2) push(w, base.executors, base.max_agg);
      break;
  }
  return cells;
}

/// One scenario run, no repeats.
inline RunResult run_once(const RunConfig& cfg) {
  RunResult r;
  r.cfg = cfg;
  auto sc = mini::build_scenario({cfg.subgrids, cfg.steps});
  mini::RunMetrics m;
  {
    mini::Session ses(cfg.session());
    mini::MiniApp app(ses, sc);
    m = app.run(cfg.steps);
  }
  r.ok = true;
  for (const auto& s : m.steps) r.step_ms.push_back(s.step_ms);
  r.mean_step_ms = m.mean_step_ms();
  double var = 0.0;
  for (double v : r.step_ms) var += (v - r.mean_step_ms) * (v - r.mean_step_ms);
  r.stddev_ms = std::sqrt(var / static_cast<double>(r.step_ms.size()));
  auto n = static_cast<double>(cfg.steps);
  r.launches = static_cast<double>(m.total(&mini::StepMetrics::kernels)) / n;
  r.transfers = static_cast<double>(m.total(&mini::StepMetrics::transfers)) / n;
  r.mean_batch = m.mean_batch();
  r.full_launches = m.total(&mini::StepMetrics::full_launches);
  r.idle_launches = m.total(&mini::StepMetrics::idle_launches);
  r.event_waits = m.total(&mini::StepMetrics::event_waits);
  r.checksum = mini::checksum(sc);
  return r;
}

/// Runs `cfg` effective_repeats() times and reports the repeat with the
/// median mean step time. Faults mark the result failed instead of
/// propagating.
inline RunResult run_cell(const RunConfig& cfg) {
  std::vector<RunResult> reps;
  try {
    cfg.validate();
    for (std::size_t k = 0; k < cfg.effective_repeats(); ++k) reps.push_back(run_once(cfg));
  } catch (const std::exception& e) {
    RunResult bad;
    bad.cfg = cfg;
    bad.error = e.what();
    return bad;
  }
  for (const auto& r : reps) {
    if (r.checksum != reps.front().checksum) {
      RunResult bad = reps.front();
      bad.ok = false;
      bad.error = "checksum differs between repeats";
      return bad;
    }
  }
  std::sort(reps.begin(), reps.end(),
            [](const RunResult& a, const RunResult& b) { return a.mean_step_ms < b.mean_step_ms; });
  return reps[(reps.size() - 1) / 2];
}

using Progress = std::function<void(const RunResult&)>;

/// Runs every (cell, mode) of the spec sequentially. Fence baselines are run
/// for speedups even when Fence rows are not requested; they are not
/// returned then.
inline std::vector<RunResult> run_matrix(const MatrixSpec& spec, const Progress& progress = {}) {
  std::vector<RunResult> rows;
  std::vector<RunResult> fences;
  bool want_fence = std::find(spec.modes.begin(), spec.modes.end(), IntegrationMode::Fence) !=
                    spec.modes.end();
  for (const auto& cell : sweep_cells(spec.base, spec.sweep)) {
    std::optional<RunResult> fence;
    auto fence_result = [&]() -> const RunResult& {
      if (!fence) {
        RunConfig c = cell;
        c.mode = IntegrationMode::Fence;
        fence = run_cell(c);
        if (progress) progress(*fence);
      }
      return *fence;
    };
    for (auto mode : spec.modes) {
      if (mode == IntegrationMode::Fence) continue;
      RunConfig c = cell;
      c.mode = mode;
      RunResult r = run_cell(c);
      if (progress) progress(r);
      const auto& f = fence_result();
      if (r.ok && f.ok && r.mean_step_ms > 0) r.speedup_vs_fence = f.mean_step_ms / r.mean_step_ms;
      rows.push_back(std::move(r));
    }
    if (want_fence) {
      RunResult f = fence_result();
      if (f.ok) f.speedup_vs_fence = 1.0;
      rows.push_back(std::move(f));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const RunResult& a, const RunResult& b) {
    return row_key(a.cfg) < row_key(b.cfg);
  });
  return rows;
}

inline constexpr const char* kCsvHeader =
    "workers,executors,max_agg,mode,barrier_elision,mean_step_ms,stddev_ms,speedup_vs_fence,"
    "launches,mean_batch,checksum";

inline std::string to_csv(const std::vector<RunResult>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    const auto& c = r.cfg;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%s,%s,", c.workers, c.executors, c.max_agg,
                  std::string(to_string(c.mode)).c_str(), c.barrier_elision ? "on" : "off");
    os << buf;
    if (r.ok) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.4f,%.1f,%.3f,%s", r.mean_step_ms, r.stddev_ms,
                    r.speedup_vs_fence, r.launches, r.mean_batch,
                    mini::checksum_hex(r.checksum).c_str());
      os << buf;
    } else {
      os << ",,,,,failed";
    }
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const std::vector<RunResult>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& c = r.cfg;
    nlohmann::json j;
    j["workers"] = c.workers;
    j["executors"] = c.executors;
    j["max_agg"] = c.max_agg;
    j["mode"] = std::string(to_string(c.mode));
    j["barrier_elision"] = c.barrier_elision ? "on" : "off";
    j["ok"] = r.ok;
    if (r.ok) {
      j["mean_step_ms"] = r.mean_step_ms;
      j["stddev_ms"] = r.stddev_ms;
      j["speedup_vs_fence"] = r.speedup_vs_fence;
      j["launches"] = r.launches;
      j["mean_batch"] = r.mean_batch;
      j["checksum"] = mini::checksum_hex(r.checksum);
      j["step_ms"] = r.step_ms;
      j["full_launches"] = r.full_launches;
      j["idle_launches"] = r.idle_launches;
      j["event_waits"] = r.event_waits;
    } else {
      j["error"] = r.error;
    }
    out.push_back(std::move(j));
  }
  return out;
}

inline std::string emit_string(const std::vector<RunResult>& rows, OutputFormat f) {
  if (f == OutputFormat::Csv) return to_csv(rows);
  return to_json(rows).dump(2) + "\n";
}

/// 0 all good, 2 a cell failed, 3 checksums disagree.
inline int exit_code(const std::vector<RunResult>& rows) {
  for (const auto& r : rows) {
    if (!r.ok) return 2;
  }
  for (const auto& r : rows) {
    if (r.checksum != rows.front().checksum) return 3;
  }
  return 0;
}

}  // namespace evbridge::bench

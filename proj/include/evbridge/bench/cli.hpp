#pragma once

#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evbridge/bench/bench.hpp"
#include "evbridge/common/time.hpp"

namespace evbridge::bench {

struct ParseOutcome {
  std::optional<MatrixSpec> spec;  // empty: stop with `exit_code`
  int exit_code = 0;
  std::string message;
};

namespace detail {

inline bool on_off(const std::string& v, const char* flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw Error(Errc::Usage, std::string(flag) + ": expected on|off, got '" + v + "'");
}

inline SimDuration duration_flag(const std::string& v, const char* flag, const char* unit) {
  auto d = parse_duration(v, unit);
  if (!d) throw Error(Errc::Usage, std::string(flag) + ": bad duration '" + v + "'");
  return *d;
}

}  // namespace detail

inline ParseOutcome parse_args(int argc, const char* const* argv) {
  CLI::App app{"Runs the sub-grid benchmark against the simulated device."};
  app.name(argc > 0 ? argv[0] : "evbench");
  MatrixSpec spec;
  RunConfig& b = spec.base;

  std::vector<std::string> modes{"all"};
  std::string elision = "off", clock = "real", sweep = "none", output = "csv";
  std::string lat_fixed = "50us", lat_item = "0.05us", lat_byte = "0.2ns", lat_barrier = "10us",
              lat_submit = "3us", lat_alloc = "1us";

  app.add_option("--workers", b.workers, "worker threads")->capture_default_str();
  app.add_option("--executors", b.executors, "device executors (one queue each)")
      ->capture_default_str();
  app.add_option("--max-agg", b.max_agg, "max kernels fused per launch")->capture_default_str();
  app.add_option("--integration", modes, "polling|hosttask|fence, comma separated, or all")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--barrier-elision", elision, "on|off")->capture_default_str();
  app.add_option("--clock", clock, "real|virtual")->capture_default_str();
  app.add_option("--subgrids", b.subgrids)->capture_default_str();
  app.add_option("--steps", b.steps)->capture_default_str();
  app.add_option("--seed", b.seed)->capture_default_str();
  app.add_option("--repeats", b.repeats, "0: 3 (real clock) or 1 (virtual clock)")
      ->capture_default_str();
  app.add_option("--latency.kernel_fixed", lat_fixed)->capture_default_str();
  app.add_option("--latency.kernel_per_item", lat_item)->capture_default_str();
  app.add_option("--latency.copy_per_byte", lat_byte)->capture_default_str();
  app.add_option("--latency.barrier", lat_barrier)->capture_default_str();
  app.add_option("--latency.submit", lat_submit)->capture_default_str();
  app.add_option("--latency.event_alloc", lat_alloc)->capture_default_str();
  app.add_option("--compute-slots", b.compute_slots)->capture_default_str();
  app.add_option("--hosttask-threads", b.hosttask_threads)->capture_default_str();
  app.add_flag("--inject-barriers", b.inject_barriers, "barrier after every fused kernel");
  app.add_flag("--lazy-submit", b.lazy_submit, "hold submissions until the next poll");
  app.add_flag("--event-pool", b.event_pool, "no per-submit event allocation cost");
  app.add_option("--sweep", sweep, "executors|aggregation|workers|none")->capture_default_str();
  app.add_option("--output", output, "csv|json")->capture_default_str();
  app.add_option("--out", spec.out, "output path (default stdout)");

  ParseOutcome res;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out, err;
    res.exit_code = app.exit(e, out, err) == 0 ? 0 : 1;
    res.message = out.str() + err.str();
    return res;
  }

  try {
    b.barrier_elision = detail::on_off(elision, "--barrier-elision");
    if (clock == "real") {
      b.clock = vdev::ClockMode::RealTime;
    } else if (clock == "virtual") {
      b.clock = vdev::ClockMode::Virtual;
    } else {
      throw Error(Errc::Usage, "--clock: expected real|virtual, got '" + clock + "'");
    }
    spec.modes.clear();
    for (const auto& m : modes) {
      if (m == "all") {
        spec.modes = {IntegrationMode::Polling, IntegrationMode::HostTask, IntegrationMode::Fence};
        break;
      }
      auto parsed = parse_integration_mode(m);
      if (!parsed) throw Error(Errc::Usage, "--integration: unknown mode '" + m + "'");
      if (std::find(spec.modes.begin(), spec.modes.end(), *parsed) == spec.modes.end()) {
        spec.modes.push_back(*parsed);
      }
    }
    if (sweep == "none") spec.sweep = Sweep::None;
    else if (sweep == "executors") spec.sweep = Sweep::Executors;
    else if (sweep == "aggregation") spec.sweep = Sweep::Aggregation;
    else if (sweep == "workers") spec.sweep = Sweep::Workers;
    else throw Error(Errc::Usage, "--sweep: unknown sweep '" + sweep + "'");
    if (output == "csv") spec.format = OutputFormat::Csv;
    else if (output == "json") spec.format = OutputFormat::Json;
    else throw Error(Errc::Usage, "--output: expected csv|json, got '" + output + "'");

    b.latency.kernel_fixed = detail::duration_flag(lat_fixed, "--latency.kernel_fixed", "us");
    b.latency.kernel_per_item = detail::duration_flag(lat_item, "--latency.kernel_per_item", "us");
    b.latency.copy_per_byte = detail::duration_flag(lat_byte, "--latency.copy_per_byte", "ns");
    b.latency.barrier_cost = detail::duration_flag(lat_barrier, "--latency.barrier", "us");
    b.latency.submit_cost = detail::duration_flag(lat_submit, "--latency.submit", "us");
    b.event_alloc_cost = detail::duration_flag(lat_alloc, "--latency.event_alloc", "us");
    b.validate();
  } catch (const Error& e) {
    res.exit_code = 1;
    res.message = std::string(e.what()) + "\n";
    return res;
  }
  res.spec = std::move(spec);
  return res;
}

}  // namespace evbridge::bench

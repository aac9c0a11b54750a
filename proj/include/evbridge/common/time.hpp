#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace evbridge {

/// Simulated time is integer picoseconds so sub-nanosecond per-byte costs
/// accumulate exactly and virtual timelines are bit-reproducible.
using SimDuration = std::chrono::duration<std::int64_t, std::pico>;
using SimTime = SimDuration;  // offset from the device epoch

inline constexpr SimTime kNever = SimDuration::max();

constexpr SimDuration picos(std::int64_t v) { return SimDuration(v); }
constexpr SimDuration round_picos(double v) {
  return SimDuration(static_cast<std::int64_t>(v >= 0 ? v + 0.5 : v - 0.5));
}
constexpr SimDuration nanos(double v) { return round_picos(v * 1e3); }
constexpr SimDuration micros(double v) { return round_picos(v * 1e6); }

inline double to_micros(SimDuration d) { return static_cast<double>(d.count()) / 1e6; }
inline double to_millis(SimDuration d) { return static_cast<double>(d.count()) / 1e9; }

/// Parses "50", "50us", "0.2ns", "1.5ms", "800ps", "0.001s". A bare number is
/// taken in `default_unit`.
inline std::optional<SimDuration> parse_duration(std::string_view text,
                                                 std::string_view default_unit = "us") {
  std::string s(text);
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(s, &pos);
  } catch (...) {
    return std::nullopt;
  }
  if (!std::isfinite(value) || value < 0) return std::nullopt;
  std::string_view unit = std::string_view(s).substr(pos);
  if (unit.empty()) unit = default_unit;
  double scale = 0;
  if (unit == "ps") scale = 1;
  else if (unit == "ns") scale = 1e3;
  else if (unit == "us") scale = 1e6;
  else if (unit == "ms") scale = 1e9;
  else if (unit == "s") scale = 1e12;
  else return std::nullopt;
  return SimDuration(static_cast<std::int64_t>(std::llround(value * scale)));
}

/// Spins the calling thread for `d` of wall time. Models host-side API cost.
inline void spin_for(SimDuration d) {
  if (d <= SimDuration::zero()) return;
  auto until = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(d);
  while (std::chrono::steady_clock::now() < until) {
  }
}

}  // namespace evbridge

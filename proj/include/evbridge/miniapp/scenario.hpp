#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "evbridge/common/error.hpp"

namespace evbridge::mini {

inline constexpr std::size_t kCells = 512;  // 8x8x8
inline constexpr std::size_t kFace = 8;
inline constexpr std::size_t kChains = 3;
inline constexpr std::size_t kKernelsPerChain = 5;
inline constexpr std::size_t kKinds = 5;

inline constexpr std::array<double, kKinds> kScale = {0.5, 1.25, 0.75, 1.5, 0.9};
inline constexpr std::array<double, kKinds> kShift = {0.25, -0.125, 0.0625, -0.03125, 0.1};

/// cell' = cell * scale[k] + shift[k]. Applied elementwise on the device.
inline void kernel_body(std::size_t kind, std::span<double> cells) {
  if (kind >= kKinds) throw Error(Errc::KindError, "kernel kind out of range");
  const double a = kScale[kind];
  const double b = kShift[kind];
  for (double& c : cells) c = c * a + b;
}

/// One 8x8x8 block. `data` holds the cells followed by one generation stamp
/// per cell; both travel to the device and back, the kernels bump the
/// stamps, and post-processing checks them.
struct SubGrid {
  std::size_t id = 0;
  std::vector<double> data;
  std::array<double, kFace> ghost_left{};
  std::array<double, kFace> ghost_right{};
  double accumulator = 0.0;
  double min_cell = 0.0;

  std::span<double> cells() { return {data.data(), kCells}; }
  std::span<const double> cells() const { return {data.data(), kCells}; }
  std::span<double> stamps() { return {data.data() + kCells, kCells}; }
  std::span<const double> stamps() const { return {data.data() + kCells, kCells}; }
  std::span<double> payload() { return {data.data(), data.size()}; }
};

struct ScenarioConfig {
  std::size_t subgrids = 512;
  std::size_t steps = 15;
};

struct Scenario {
  ScenarioConfig cfg;
  std::vector<SubGrid> grids;
  std::vector<double> dts;  // one per completed step
  std::uint64_t generation = 0;  // kernels applied to every cell so far

  std::size_t left(std::size_t i) const { return (i + grids.size() - 1) % grids.size(); }
  std::size_t right(std::size_t i) const { return (i + 1) % grids.size(); }

  std::size_t kernels_per_step() const { return grids.size() * kChains * kKernelsPerChain; }
  std::size_t transfers_per_step() const { return 2 * kernels_per_step(); }
  std::size_t total_cells() const { return grids.size() * kCells; }
};

inline Scenario build_scenario(const ScenarioConfig& cfg) {
  if (cfg.subgrids == 0) throw Error(Errc::Usage, "subgrids must be >= 1");
  Scenario s;
  s.cfg = cfg;
  s.grids.resize(cfg.subgrids);
  const double scale = 1.0 / (static_cast<double>(cfg.subgrids) * 1000.0);
  for (std::size_t g = 0; g < cfg.subgrids; ++g) {
    auto& sg = s.grids[g];
    sg.id = g;
    sg.data.assign(2 * kCells, 0.0);
    for (std::size_t i = 0; i < kCells; ++i) {
      sg.data[i] = static_cast<double>(g * 1000 + i) * scale;
    }
  }
  return s;
}

/// FNV-1a over the bit patterns of every cell, accumulator and time step.
inline std::uint64_t checksum(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& g : s.grids) {
    for (double c : g.cells()) mix(c);
    mix(g.accumulator);
  }
  for (double dt : s.dts) mix(dt);
  return h;
}

inline std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace evbridge::mini

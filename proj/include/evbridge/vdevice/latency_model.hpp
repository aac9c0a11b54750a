#pragma once

#include <cstdint>
#include <string_view>

#include "evbridge/common/time.hpp"

namespace evbridge::vdev {

enum class OpKind : std::uint8_t { Kernel, CopyH2D, CopyD2H, Barrier, DummyTask };

constexpr std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::Kernel: return "kernel";
    case OpKind::CopyH2D: return "h2d";
    case OpKind::CopyD2H: return "d2h";
    case OpKind::Barrier: return "barrier";
    case OpKind::DummyTask: return "dummy";
  }
  return "?";
}

/// Kernels and dummy tasks take compute slots; copies and barriers do not.
constexpr bool needs_compute_slot(OpKind k) {
  return k == OpKind::Kernel || k == OpKind::DummyTask;
}

/// Synthetic cost model. Kernel time is kernel_fixed + kernel_per_item * n.
struct LatencyModel {
  SimDuration kernel_fixed = micros(50);
  SimDuration kernel_per_item = nanos(50);
  SimDuration copy_per_byte = picos(200);
  SimDuration barrier_cost = micros(10);
  SimDuration submit_cost = micros(3);  // host-side, per API call

  SimDuration duration_of(OpKind kind, std::uint64_t work_items, std::uint64_t bytes) const {
    switch (kind) {
      case OpKind::Kernel:
        return kernel_fixed + kernel_per_item * static_cast<std::int64_t>(work_items);
      case OpKind::DummyTask:
        return kernel_fixed;
      case OpKind::CopyH2D:
      case OpKind::CopyD2H:
        return copy_per_byte * static_cast<std::int64_t>(bytes);
      case OpKind::Barrier:
        return barrier_cost;
    }
    return SimDuration::zero();
  }
};

}  // namespace evbridge::vdev

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "evbridge/common/error.hpp"
#include "evbridge/vdevice/buffer.hpp"

namespace evbridge::exec {

struct BufferPoolStats {
  std::uint64_t created = 0;     // fresh allocations
  std::uint64_t reused = 0;      // served from a free list
  std::uint64_t live = 0;
  std::uint64_t free = 0;
  std::uint64_t live_high_water = 0;
};

/// Recycles device buffers by exact byte size. Contents are not cleared on
/// reuse.
class BufferPool {
 public:
  vdev::DeviceBuffer alloc(std::size_t size_bytes) {
    if (size_bytes == 0) throw Error(Errc::PoolError, "zero-sized allocation");
    std::lock_guard lk(m_);
    vdev::DeviceBuffer b;
    auto& bucket = free_[size_bytes];
    if (!bucket.empty()) {
      b = std::move(bucket.back());
      bucket.pop_back();
      --free_count_;
      ++stats_.reused;
    } else {
      b = vdev::DeviceBuffer(next_id_++, size_bytes);
      ++stats_.created;
    }
    live_.emplace(b.id(), b);
    stats_.live_high_water = std::max<std::uint64_t>(stats_.live_high_water, live_.size());
    return b;
  }

  void release(const vdev::DeviceBuffer& b) {
    std::lock_guard lk(m_);
    auto it = live_.find(b.id());
    if (it == live_.end()) {
      throw Error(Errc::PoolError, "release of buffer " + std::to_string(b.id()) + " not live");
    }
    free_[b.size_bytes()].push_back(std::move(it->second));
    live_.erase(it);
    ++free_count_;
  }

  bool is_live(const vdev::DeviceBuffer& b) const {
    std::lock_guard lk(m_);
    return live_.count(b.id()) != 0;
  }

  bool is_free(const vdev::DeviceBuffer& b) const {
    std::lock_guard lk(m_);
    auto it = free_.find(b.size_bytes());
    if (it == free_.end()) return false;
    for (const auto& f : it->second) {
      if (f.id() == b.id()) return true;
    }
    return false;
  }

  BufferPoolStats stats() const {
    std::lock_guard lk(m_);
    auto s = stats_;
    s.live = live_.size();
    s.free = free_count_;
    return s;
  }

 private:
  mutable std::mutex m_;
  std::map<std::size_t, std::vector<vdev::DeviceBuffer>> free_;
  std::unordered_map<std::uint64_t, vdev::DeviceBuffer> live_;
  std::uint64_t next_id_ = 1;
  std::uint64_t free_count_ = 0;
  BufferPoolStats stats_;
};

inline vdev::DeviceBuffer buf_alloc(BufferPool& p, std::size_t size) { return p.alloc(size); }
inline void buf_release(BufferPool& p, const vdev::DeviceBuffer& b) { p.release(b); }

}  // namespace evbridge::exec

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace evbridge::vdev {

/// Device allocation modeled as unified, host-visible memory. Handles are
/// shared; the pool that hands them out tracks ownership.
class DeviceBuffer {
 public:
  DeviceBuffer() = default;
  DeviceBuffer(std::uint64_t id, std::size_t size_bytes)
      : id_(id),
        size_bytes_(size_bytes),
        storage_(std::make_shared<std::vector<double>>((size_bytes + sizeof(double) - 1) /
                                                       sizeof(double))) {}

  std::uint64_t id() const { return id_; }
  std::size_t size_bytes() const { return size_bytes_; }
  std::span<double> doubles() const { return {storage_->data(), storage_->size()}; }
  explicit operator bool() const { return storage_ != nullptr; }

  friend bool operator==(const DeviceBuffer& a, const DeviceBuffer& b) {
    return a.storage_ == b.storage_;
  }

 private:
  std::uint64_t id_ = 0;
  std::size_t size_bytes_ = 0;
  std::shared_ptr<std::vector<double>> storage_;
};

}  // namespace evbridge::vdev

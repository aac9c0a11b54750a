#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evbridge {

enum class Errc {
  Shutdown,
  DeviceGone,
  ModeError,
  OrderingError,
  KindError,
  StateError,
  PoolError,
  BrokenPromise,
  Usage,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Shutdown: return "Shutdown";
    case Errc::DeviceGone: return "DeviceGone";
    case Errc::ModeError: return "ModeError";
    case Errc::OrderingError: return "OrderingError";
    case Errc::KindError: return "KindError";
    case Errc::StateError: return "StateError";
    case Errc::PoolError: return "PoolError";
    case Errc::BrokenPromise: return "BrokenPromise";
    case Errc::Usage: return "Usage";
  }
  return "Unknown";
}

/// Exception carried through faulted futures and thrown by the public API.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Unrecoverable programmer error. Prints and aborts.
[[noreturn]] inline void panic(std::string_view msg) {
  std::fprintf(stderr, "evbridge panic: %.*s\n", static_cast<int>(msg.size()), msg.data());
  std::fflush(stderr);
  std::abort();
}

}  // namespace evbridge

#pragma once

#include <functional>
#include <memory>
#include <type_traits>
#include <utility>

namespace evbridge {

template <class Signature>
class UniqueFunction;

/// Move-only type-erased callable. std::function needs copyable targets,
/// which rules out closures owning promises or coroutine handles.
template <class R, class... Args>
class UniqueFunction<R(Args...)> {
 public:
  UniqueFunction() = default;
  UniqueFunction(std::nullptr_t) {}

  template <class F,
            class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, UniqueFunction> &&
                                     std::is_invocable_r_v<R, std::decay_t<F>&, Args...>>>
  UniqueFunction(F&& f) : impl_(std::make_unique<Impl<std::decay_t<F>>>(std::forward<F>(f))) {}

  UniqueFunction(UniqueFunction&&) noexcept = default;
  UniqueFunction& operator=(UniqueFunction&&) noexcept = default;

  R operator()(Args... args) { return impl_->call(std::forward<Args>(args)...); }

  explicit operator bool() const noexcept { return impl_ != nullptr; }

 private:
  struct Base {
    virtual ~Base() = default;
    virtual R call(Args... args) = 0;
  };

  template <class F>
  struct Impl final : Base {
    explicit Impl(F&& f) : fn(std::move(f)) {}
    explicit Impl(const F& f) : fn(f) {}
    R call(Args... args) override { return std::invoke(fn, std::forward<Args>(args)...); }
    F fn;
  };

  std::unique_ptr<Base> impl_;
};

using Job = UniqueFunction<void()>;

}  // namespace evbridge

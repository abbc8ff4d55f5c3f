// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>

namespace hintbox {

template <typename E>
struct Unexpected {
  E error;
};

template <typename E>
Unexpected<std::decay_t<E>> fail(E&& e) {
  return {std::forward<E>(e)};
}

// Value-or-error return type used across the library. Accessing the wrong
// alternative throws std::logic_error.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : data_(std::in_place_index<0>, std::move(value)) {}
  Result(Unexpected<E> err) : data_(std::in_place_index<1>, std::move(err.error)) {}

  [[nodiscard]] bool ok() const noexcept { return data_.index() == 0; }
  explicit operator bool() const noexcept { return ok(); }

  T& value() & {
    if (!ok()) throw std::logic_error("Result::value() on error");
    return std::get<0>(data_);
  }
  const T& value() const& {
    if (!ok()) throw std::logic_error("Result::value() on error");
    return std::get<0>(data_);
  }
  T&& value() && {
    if (!ok()) throw std::logic_error("Result::value() on error");
    return std::get<0>(std::move(data_));
  }
  const E& error() const {
    if (ok()) throw std::logic_error("Result::error() on value");
    return std::get<1>(data_);
  }

  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }
  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }

 private:
  std::variant<T, E> data_;
};

template <typename E>
class Result<void, E> {
 public:
  Result() = default;
  Result(Unexpected<E> err) : error_(std::move(err.error)), ok_(false) {}

  [[nodiscard]] bool ok() const noexcept { return ok_; }
  explicit operator bool() const noexcept { return ok_; }
  const E& error() const {
    if (ok_) throw std::logic_error("Result::error() on value");
    return error_;
  }

 private:
  E error_{};
  bool ok_ = true;
};

}  // namespace hintbox

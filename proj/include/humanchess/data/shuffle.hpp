#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "humanchess/util/rng.hpp"

namespace hc::data {

// Bounded streaming shuffle: fill the buffer, emit a uniformly chosen slot,
// refill from the source. Output is a permutation of the input and is fully
// determined by the seed. Capacity 1 degenerates to the identity order.
template <typename T>
class ShuffleStream {
 public:
  using Source = std::function<std::optional<T>()>;

  ShuffleStream(Source source, size_t capacity, uint64_t seed)
      : source_(std::move(source)), capacity_(std::max<size_t>(1, capacity)), rng_(seed) {}

  std::optional<T> next() {
    while (!exhausted_ && buffer_.size() < capacity_) {
      auto item = source_();
      if (!item) {
        exhausted_ = true;
        break;
      }
      buffer_.push_back(std::move(*item));
    }
    if (buffer_.empty()) return std::nullopt;
    const size_t j = static_cast<size_t>(rng_.next_below(buffer_.size()));
    T out = std::move(buffer_[j]);
    if (!exhausted_) {
      auto item = source_();
      if (item) {
        buffer_[j] = std::move(*item);
        return out;
      }
      exhausted_ = true;
    }
    buffer_[j] = std::move(buffer_.back());
    buffer_.pop_back();
    return out;
  }

 private:
  Source source_;
  size_t capacity_;
  Rng rng_;
  std::vector<T> buffer_;
  bool exhausted_ = false;
};

template <typename T>
std::vector<T> shuffle_stream(std::vector<T> input, size_t capacity, uint64_t seed) {
  size_t i = 0;
  ShuffleStream<T> s(
      [&]() -> std::optional<T> {
        if (i >= input.size()) return std::nullopt;
        return std::move(input[i++]);
      },
      capacity, seed);
  std::vector<T> out;
  out.reserve(input.size());
  while (auto item = s.next()) out.push_back(std::move(*item));
  return out;
}

}  // namespace hc::data

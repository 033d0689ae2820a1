#pragma once

#include <cstddef>
#include <vector>

#include "dqlab/core.hpp"
#include "dqlab/rng.hpp"

namespace dqlab {

// Fixed-capacity experience store. Once full, each push evicts the oldest
// entry. Sampling is uniform with replacement unless asked otherwise.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("ReplayBuffer: capacity must be positive");
    data_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }
  bool full() const { return data_.size() == capacity_; }

  void push(T item) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(item));
    } else {
      data_[head_] = std::move(item);
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i = 0 is the oldest stored entry.
  const T& at(std::size_t i) const {
    if (i >= data_.size()) throw UsageError("ReplayBuffer: index out of range");
    return data_[(head_ + i) % data_.size()];
  }

  std::vector<T> sample(std::size_t n, RngStream& rng) const {
    if (data_.empty()) throw UsageError("ReplayBuffer: sample from empty buffer");
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(data_[rng.uniform_below(data_.size())]);
    }
    return out;
  }

  // Partial Fisher-Yates over an index vector; n must not exceed size().
  std::vector<T> sample_without_replacement(std::size_t n, RngStream& rng) const {
    if (data_.empty()) throw UsageError("ReplayBuffer: sample from empty buffer");
    if (n > data_.size()) {
      throw UsageError("ReplayBuffer: cannot draw more distinct samples than stored");
    }
    std::vector<std::size_t> idx(data_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + rng.uniform_below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      out.push_back(data_[idx[i]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest entry once full
  std::vector<T> data_;
};

}  // namespace dqlab

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <algorithm>
#include <deque>
#include <mutex>
#include <optional>

#include "ol/common/error.hpp"
#include "ol/common/wakeup.hpp"

namespace ol::ingest {

enum class OverflowPolicy { Block, DropOldest };

template <typename T>
struct EnqueueResult {
  enum class Kind { Accepted, Dropped };
  Kind kind = Kind::Accepted;
  std::optional<T> evicted;  // set when kind == Dropped
};

// FIFO with a hard capacity, safe for concurrent producers and consumers.
// Block suspends producers while full; DropOldest evicts the head instead.
template <typename T>
class BoundedQueue {
 public:
  BoundedQueue(std::size_t capacity, OverflowPolicy policy, Wakeup* wake = nullptr)
      : capacity_(capacity), policy_(policy), wake_(wake) {
    if (capacity_ == 0) throw ArgumentError("queue capacity must be positive");
  }

  BoundedQueue(const BoundedQueue&) = delete;
  BoundedQueue& operator=(const BoundedQueue&) = delete;

  EnqueueResult<T> push(T item) {
    EnqueueResult<T> result;
    {
      std::unique_lock lock(mu_);
      if (closed_) throw QueueClosed();
      if (policy_ == OverflowPolicy::Block) {
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) throw QueueClosed();
      } else if (items_.size() == capacity_) {
        result.kind = EnqueueResult<T>::Kind::Dropped;
        result.evicted = std::move(items_.front());
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(item));
      high_water_ = std::max(high_water_, items_.size());
    }
    not_empty_.notify_one();
    if (wake_) wake_->notify();
    return result;
  }

  // Non-suspending push for step-driven producers. Under Block, returns
  // nullopt and leaves `item` untouched when the queue is full.
  std::optional<EnqueueResult<T>> try_push(T& item) {
    EnqueueResult<T> result;
    {
      std::lock_guard lock(mu_);
      if (closed_) throw QueueClosed();
      if (items_.size() == capacity_) {
        if (policy_ == OverflowPolicy::Block) return std::nullopt;
        result.kind = EnqueueResult<T>::Kind::Dropped;
        result.evicted = std::move(items_.front());
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(item));
      high_water_ = std::max(high_water_, items_.size());
    }
    not_empty_.notify_one();
    if (wake_) wake_->notify();
    return result;
  }

  // Waits for an item; nullopt once the queue is closed and drained.
  std::optional<T> pop() {
    std::optional<T> out;
    {
      std::unique_lock lock(mu_);
      not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
      if (items_.empty()) return std::nullopt;
      out = std::move(items_.front());
      items_.pop_front();
    }
    not_full_.notify_one();
    if (wake_) wake_->notify();
    return out;
  }

  template <class Rep, class Period>
  std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout) {
    std::optional<T> out;
    {
      std::unique_lock lock(mu_);
      if (!not_empty_.wait_for(lock, timeout, [&] { return closed_ || !items_.empty(); })) {
        return std::nullopt;
      }
      if (items_.empty()) return std::nullopt;
      out = std::move(items_.front());
      items_.pop_front();
    }
    not_full_.notify_one();
    if (wake_) wake_->notify();
    return out;
  }

  std::optional<T> try_pop() {
    std::optional<T> out;
    {
      std::lock_guard lock(mu_);
      if (items_.empty()) return std::nullopt;
      out = std::move(items_.front());
      items_.pop_front();
    }
    not_full_.notify_one();
    if (wake_) wake_->notify();
    return out;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
    if (wake_) wake_->notify();
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  bool empty() const { return size() == 0; }
  bool full() const { return size() == capacity_; }
  std::size_t capacity() const noexcept { return capacity_; }
  OverflowPolicy policy() const noexcept { return policy_; }
  std::size_t high_water() const {
    std::lock_guard lock(mu_);
    return high_water_;
  }
  std::size_t dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
  }

 private:
  const std::size_t capacity_;
  const OverflowPolicy policy_;
  Wakeup* wake_;
  mutable std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  bool closed_ = false;
  std::size_t high_water_ = 0;
  std::size_t dropped_ = 0;
};

}  // namespace ol::ingest

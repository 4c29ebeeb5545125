#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace aquasonde::ingest {

struct Event {
  std::string name;  // "snapshot" or "reading"
  std::string data;  // JSON text
};

class EventHub;

// Bounded per-subscriber queue. A subscriber that falls more than
// `capacity` events behind is closed, never blocking the publisher.
class Subscription {
 public:
  explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

  // Waits up to `timeout`; nullopt on timeout or once closed and drained.
  std::optional<Event> next(std::chrono::milliseconds timeout);
  bool closed() const;
  bool overflowed() const;

 private:
  friend class EventHub;
  bool push(const Event& event);
  void close(bool overflow);

  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Event> queue_;
  std::size_t capacity_;
  bool closed_ = false;
  bool overflowed_ = false;
};

class EventHub {
 public:
  explicit EventHub(std::size_t capacity = 256) : capacity_(capacity) {}

  std::shared_ptr<Subscription> subscribe();
  void unsubscribe(const std::shared_ptr<Subscription>& sub);
  void publish(const Event& event);
  // Closes every subscription; used at shutdown.
  void close_all();
  std::size_t subscriber_count() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subs_;
  std::size_t capacity_;
};

}  // namespace aquasonde::ingest

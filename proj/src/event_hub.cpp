#include "aquasonde/event_hub.hpp"

#include <algorithm>

namespace aquasonde::ingest {

std::optional<Event> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  Event e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

bool Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

bool Subscription::overflowed() const {
  std::lock_guard lock(mutex_);
  return overflowed_;
}

bool Subscription::push(const Event& event) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    if (queue_.size() >= capacity_) {
      closed_ = true;
      overflowed_ = true;
      queue_.clear();
    } else {
      queue_.push_back(event);
    }
  }
  ready_.notify_all();
  return !overflowed();
}

void Subscription::close(bool overflow) {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
    overflowed_ = overflowed_ || overflow;
  }
  ready_.notify_all();
}

std::shared_ptr<Subscription> EventHub::subscribe() {
  auto sub = std::make_shared<Subscription>(capacity_);
  std::lock_guard lock(mutex_);
  subs_.push_back(sub);
  return sub;
}

void EventHub::unsubscribe(const std::shared_ptr<Subscription>& sub) {
  sub->close(false);
  std::lock_guard lock(mutex_);
  std::erase(subs_, sub);
}

void EventHub::publish(const Event& event) {
  std::lock_guard lock(mutex_);
  std::erase_if(subs_, [&](const std::shared_ptr<Subscription>& sub) { return !sub->push(event); });
}

void EventHub::close_all() {
  std::lock_guard lock(mutex_);
  for (auto& sub : subs_) sub->close(false);
  subs_.clear();
}

std::size_t EventHub::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subs_.size();
}

}  // namespace aquasonde::ingest

#include "citysvc/message_bus.hpp"

#include <algorithm>
#include <cctype>

#include "citysvc/errors.hpp"

namespace citysvc {

bool MessageBus::is_valid_topic_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '-';
  });
}

TopicInfo MessageBus::create_topic(std::string_view name) {
  if (!is_valid_topic_name(name)) {
    throw ValidationError("malformed topic name: '" + std::string(name) + "'");
  }
  std::unique_lock lock(topics_mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end()) {
    auto log = std::make_shared<TopicLog>();
    log->name = std::string(name);
    it = topics_.emplace(log->name, std::move(log)).first;
  }
  std::lock_guard log_lock(it->second->mutex);
  return TopicInfo{it->second->name, it->second->messages.size()};
}

std::shared_ptr<MessageBus::TopicLog> MessageBus::find_topic(std::string_view name) const {
  std::shared_lock lock(topics_mutex_);
  auto it = topics_.find(name);
  if (it == topics_.end()) throw NotFoundError("topic", std::string(name));
  return it->second;
}

std::shared_ptr<MessageBus::SubscriptionState> MessageBus::find_subscription(
    SubscriptionId id) const {
  std::lock_guard lock(subs_mutex_);
  auto it = subs_.find(id);
  return it == subs_.end() ? nullptr : it->second;
}

Seq MessageBus::publish(std::string_view topic, std::string payload, TimestampMs timestamp,
                        std::string content_type) {
  auto log = find_topic(topic);
  Seq seq = 0;
  {
    std::lock_guard lock(log->mutex);
    seq = log->messages.size();
    auto message = std::make_shared<Message>();
    message->topic = log->name;
    message->seq = seq;
    message->timestamp = timestamp;
    message->content_type = std::move(content_type);
    message->payload = std::move(payload);
    log->messages.push_back(std::move(message));
  }
  log->cv.notify_all();
  return seq;
}

SubscriptionId MessageBus::subscribe(std::string_view topic, Seq from_seq) {
  auto log = find_topic(topic);
  auto state = std::make_shared<SubscriptionState>();
  state->log = log;
  {
    std::lock_guard lock(log->mutex);
    if (from_seq > log->messages.size()) {
      throw ValidationError("from_seq " + std::to_string(from_seq) + " beyond next_seq " +
                            std::to_string(log->messages.size()) + " of topic " + log->name);
    }
    state->cursor = from_seq;
  }
  std::lock_guard lock(subs_mutex_);
  SubscriptionId id = next_sub_id_++;
  subs_.emplace(id, std::move(state));
  return id;
}

void MessageBus::unsubscribe(SubscriptionId id) {
  std::shared_ptr<SubscriptionState> state;
  {
    std::lock_guard lock(subs_mutex_);
    auto it = subs_.find(id);
    if (it == subs_.end()) return;
    state = std::move(it->second);
    subs_.erase(it);
  }
  {
    std::lock_guard lock(state->log->mutex);
    state->active = false;
  }
  state->log->cv.notify_all();
}

std::vector<MessagePtr> MessageBus::poll(SubscriptionId id, std::size_t max) {
  auto state = find_subscription(id);
  if (!state) return {};
  std::lock_guard delivery(state->delivery);
  std::lock_guard lock(state->log->mutex);
  if (!state->active) return {};
  const auto& messages = state->log->messages;
  const std::size_t available = messages.size() - static_cast<std::size_t>(state->cursor);
  const std::size_t count = std::min(max, available);
  std::vector<MessagePtr> out(messages.begin() + static_cast<std::ptrdiff_t>(state->cursor),
                              messages.begin() + static_cast<std::ptrdiff_t>(state->cursor + count));
  state->cursor += count;
  return out;
}

std::optional<MessagePtr> MessageBus::wait_next(SubscriptionId id,
                                                std::chrono::milliseconds timeout) {
  auto state = find_subscription(id);
  if (!state) return std::nullopt;
  std::lock_guard delivery(state->delivery);
  std::unique_lock lock(state->log->mutex);
  auto& log = *state->log;
  const bool ready = log.cv.wait_for(lock, timeout, [&] {
    return !state->active || state->cursor < log.messages.size();
  });
  if (!ready || !state->active) return std::nullopt;
  return log.messages[static_cast<std::size_t>(state->cursor++)];
}

TopicInfo MessageBus::topic(std::string_view name) const {
  auto log = find_topic(name);
  std::lock_guard lock(log->mutex);
  return TopicInfo{log->name, log->messages.size()};
}

bool MessageBus::has_topic(std::string_view name) const {
  std::shared_lock lock(topics_mutex_);
  return topics_.find(name) != topics_.end();
}

std::vector<TopicInfo> MessageBus::topics() const {
  std::vector<std::shared_ptr<TopicLog>> logs;
  {
    std::shared_lock lock(topics_mutex_);
    for (const auto& [name, log] : topics_) logs.push_back(log);
  }
  std::vector<TopicInfo> out;
  for (const auto& log : logs) {
    std::lock_guard lock(log->mutex);
    out.push_back({log->name, log->messages.size()});
  }
  return out;
}

std::size_t MessageBus::backlog(SubscriptionId id) const {
  auto state = find_subscription(id);
  if (!state) return 0;
  std::lock_guard lock(state->log->mutex);
  if (!state->active) return 0;
  return state->log->messages.size() - static_cast<std::size_t>(state->cursor);
}

}  // namespace citysvc

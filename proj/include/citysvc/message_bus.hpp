#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace citysvc {

using TimestampMs = std::int64_t;
using Seq = std::uint64_t;

// One published event. Immutable once it is in a topic log; subscribers
// share the same instance.
struct Message {
  std::string topic;
  Seq seq = 0;
  TimestampMs timestamp = 0;
  std::string content_type;
  std::string payload;
};

using MessagePtr = std::shared_ptr<const Message>;

struct TopicInfo {
  std::string name;
  Seq next_seq = 0;
};

using SubscriptionId = std::uint64_t;

/// In-process publish/subscribe bus with a retained log per topic.
///
/// Every topic keeps all messages for the lifetime of the bus. A subscription
/// is a cursor into one topic log: it can start anywhere in [0, next_seq] and
/// is advanced by exactly one per delivered message, so each live
/// subscription sees every message from its origin once, in seq order.
///
/// Publishing is linearizable per topic. Deliveries to a single subscription
/// are sequential (concurrent polls on the same id are serialized).
class MessageBus {
 public:
  MessageBus() = default;
  MessageBus(const MessageBus&) = delete;
  MessageBus& operator=(const MessageBus&) = delete;

  // Idempotent: an existing topic is returned unchanged.
  TopicInfo create_topic(std::string_view name);

  // Throws NotFoundError for an unknown topic.
  Seq publish(std::string_view topic, std::string payload, TimestampMs timestamp,
              std::string content_type = "application/json");

  // Throws NotFoundError for an unknown topic and ValidationError when
  // from_seq > next_seq.
  SubscriptionId subscribe(std::string_view topic, Seq from_seq = 0);

  // Unknown or already removed ids are accepted silently.
  void unsubscribe(SubscriptionId id);

  // Delivers up to `max` pending messages and advances the cursor past them.
  // Returns nothing for unknown or unsubscribed ids.
  std::vector<MessagePtr> poll(SubscriptionId id,
                               std::size_t max = std::numeric_limits<std::size_t>::max());

  // Blocks until one message is available, the timeout expires, or the
  // subscription is removed.
  std::optional<MessagePtr> wait_next(SubscriptionId id, std::chrono::milliseconds timeout);

  TopicInfo topic(std::string_view name) const;
  bool has_topic(std::string_view name) const;
  std::vector<TopicInfo> topics() const;

  // Number of messages published but not yet delivered to this subscription.
  std::size_t backlog(SubscriptionId id) const;

  static bool is_valid_topic_name(std::string_view name);

 private:
  struct TopicLog {
    std::string name;
    mutable std::mutex mutex;
    std::condition_variable cv;
    std::vector<MessagePtr> messages;
  };

  struct SubscriptionState {
    std::shared_ptr<TopicLog> log;
    std::mutex delivery;  // serializes deliveries to this subscriber
    Seq cursor = 0;
    bool active = true;
  };

  std::shared_ptr<TopicLog> find_topic(std::string_view name) const;
  std::shared_ptr<SubscriptionState> find_subscription(SubscriptionId id) const;

  mutable std::shared_mutex topics_mutex_;
  std::map<std::string, std::shared_ptr<TopicLog>, std::less<>> topics_;

  mutable std::mutex subs_mutex_;
  std::map<SubscriptionId, std::shared_ptr<SubscriptionState>> subs_;
  SubscriptionId next_sub_id_ = 1;
};

}  // namespace citysvc

#pragma once

// In-process message bus: one FIFO queue per registered module. Delivery is
// exactly-once and order is preserved per (sender, target) pair; there is no
// global order across senders.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kirett/clock.hpp"

namespace kirett {

enum class MessageKind {
  ValueRequest,
  ValueResponse,
  PromptUpdate,
  DecisionSubmitted,
  Warning,
  SituationUpdate,
  SessionControl,
};

std::string_view to_string(MessageKind kind);
std::optional<MessageKind> message_kind_from_string(std::string_view text);

struct Envelope {
  /// Unique and increasing per source.
  std::uint64_t id = 0;
  std::string source;
  std::string target;
  MessageKind kind = MessageKind::PromptUpdate;
  nlohmann::json payload;
  std::int64_t sent_at_ms = 0;
};

class BusError : public std::runtime_error {
 public:
  enum class Code { UnknownTarget, UnknownModule, DuplicateModule, MalformedPayload };
  BusError(Code code, std::string message) : std::runtime_error(std::move(message)), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Checks the fields each kind requires; returns a description of the first
/// problem, or nothing when the payload is well formed.
std::optional<std::string> payload_problem(MessageKind kind, const nlohmann::json& payload);

class MessageBus;

/// Handle returned by register_module.
class Mailbox {
 public:
  Mailbox(MessageBus* bus, std::string name) : bus_(bus), name_(std::move(name)) {}
  const std::string& name() const { return name_; }
  std::uint64_t send(std::string_view target, MessageKind kind, nlohmann::json payload) const;
  std::vector<Envelope> poll(std::size_t max = SIZE_MAX) const;

 private:
  MessageBus* bus_;
  std::string name_;
};

class MessageBus {
 public:
  explicit MessageBus(Clock clock = system_clock_ms()) : clock_(std::move(clock)) {}

  Mailbox register_module(std::string name);
  bool is_registered(std::string_view name) const;

  /// Returns the envelope id. Throws UnknownTarget or MalformedPayload.
  std::uint64_t send(std::string_view source, std::string_view target, MessageKind kind,
                     nlohmann::json payload);
  /// Removes and returns up to max envelopes, oldest first.
  std::vector<Envelope> poll(std::string_view module, std::size_t max = SIZE_MAX);
  std::size_t pending(std::string_view module) const;

  /// Called after every successful send, outside the queue locks.
  void set_observer(std::function<void(const Envelope&)> observer);

 private:
  struct Queue {
    std::mutex mutex;
    std::deque<Envelope> items;
  };
  struct Sender {
    std::mutex mutex;
    std::uint64_t next_id = 1;
  };

  std::shared_ptr<Queue> queue(std::string_view module, BusError::Code missing) const;
  std::shared_ptr<Sender> sender(std::string_view name);

  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Queue>, std::less<>> queues_;
  std::map<std::string, std::shared_ptr<Sender>, std::less<>> senders_;
  std::function<void(const Envelope&)> observer_;
};

void to_json(nlohmann::json& j, const Envelope& e);

}  // namespace kirett

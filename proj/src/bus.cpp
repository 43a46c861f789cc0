#include "kirett/bus.hpp"

namespace kirett {
namespace {

constexpr MessageKind kAllKinds[] = {
    MessageKind::ValueRequest,      MessageKind::ValueResponse, MessageKind::PromptUpdate,
    MessageKind::DecisionSubmitted, MessageKind::Warning,       MessageKind::SituationUpdate,
    MessageKind::SessionControl,
};

std::optional<std::string> require(const nlohmann::json& payload,
                                   std::initializer_list<const char*> strings,
                                   std::initializer_list<const char*> numbers = {}) {
  if (!payload.is_object()) return "payload is not an object";
  for (const char* key : strings) {
    if (!payload.contains(key) || !payload.at(key).is_string()) {
      return "missing string field " + std::string(key);
    }
  }
  for (const char* key : numbers) {
    if (!payload.contains(key) || !payload.at(key).is_number()) {
      return "missing numeric field " + std::string(key);
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::ValueRequest:
      return "ValueRequest";
    case MessageKind::ValueResponse:
      return "ValueResponse";
    case MessageKind::PromptUpdate:
      return "PromptUpdate";
    case MessageKind::DecisionSubmitted:
      return "DecisionSubmitted";
    case MessageKind::Warning:
      return "Warning";
    case MessageKind::SituationUpdate:
      return "SituationUpdate";
    case MessageKind::SessionControl:
      return "SessionControl";
  }
  return "PromptUpdate";
}

std::optional<MessageKind> message_kind_from_string(std::string_view text) {
  for (MessageKind k : kAllKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<std::string> payload_problem(MessageKind kind, const nlohmann::json& payload) {
  switch (kind) {
    case MessageKind::ValueRequest:
      return require(payload, {"session_id", "patient_id", "parameter"});
    case MessageKind::ValueResponse:
      return require(payload, {"session_id", "patient_id", "parameter", "freshness"});
    case MessageKind::PromptUpdate:
      return require(payload, {"session_id"});
    case MessageKind::DecisionSubmitted:
      return require(payload, {"session_id", "choice"});
    case MessageKind::Warning:
      return require(payload, {"session_id", "parameter"}, {"reading"});
    case MessageKind::SituationUpdate:
      if (auto p = require(payload, {})) return p;
      if (!payload.contains("scores") || !payload.at("scores").is_object()) return "missing object field scores";
      if (!payload.contains("ranking") || !payload.at("ranking").is_array()) return "missing array field ranking";
      return std::nullopt;
    case MessageKind::SessionControl:
      return require(payload, {"session_id", "command"});
  }
  return "unknown kind";
}

std::uint64_t Mailbox::send(std::string_view target, MessageKind kind, nlohmann::json payload) const {
  return bus_->send(name_, target, kind, std::move(payload));
}

std::vector<Envelope> Mailbox::poll(std::size_t max) const { return bus_->poll(name_, max); }

Mailbox MessageBus::register_module(std::string name) {
  std::unique_lock lock(mutex_);
  if (queues_.count(name)) throw BusError(BusError::Code::DuplicateModule, "module " + name + " already registered");
  queues_.emplace(name, std::make_shared<Queue>());
  return Mailbox(this, std::move(name));
}

bool MessageBus::is_registered(std::string_view name) const {
  std::shared_lock lock(mutex_);
  return queues_.find(name) != queues_.end();
}

std::shared_ptr<MessageBus::Queue> MessageBus::queue(std::string_view module, BusError::Code missing) const {
  std::shared_lock lock(mutex_);
  auto it = queues_.find(module);
  if (it == queues_.end()) {
    throw BusError(missing, (missing == BusError::Code::UnknownTarget ? "unknown target " : "unknown module ") +
                                std::string(module));
  }
  return it->second;
}

std::shared_ptr<MessageBus::Sender> MessageBus::sender(std::string_view name) {
  {
    std::shared_lock lock(mutex_);
    auto it = senders_.find(name);
    if (it != senders_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto [it, inserted] = senders_.try_emplace(std::string(name), nullptr);
  if (inserted) it->second = std::make_shared<Sender>();
  return it->second;
}

std::uint64_t MessageBus::send(std::string_view source, std::string_view target, MessageKind kind,
                               nlohmann::json payload) {
  if (auto problem = payload_problem(kind, payload)) {
    throw BusError(BusError::Code::MalformedPayload,
                   std::string(to_string(kind)) + " payload: " + *problem);
  }
  auto q = queue(target, BusError::Code::UnknownTarget);
  auto s = sender(source);
  Envelope e;
  e.source = source;
  e.target = target;
  e.kind = kind;
  e.payload = std::move(payload);
  {
    // Holding the sender lock across id assignment and enqueue keeps each
    // sender's ids in queue order.
    std::lock_guard sender_lock(s->mutex);
    e.id = s->next_id++;
    e.sent_at_ms = clock_();
    std::lock_guard queue_lock(q->mutex);
    q->items.push_back(e);
  }
  std::function<void(const Envelope&)> observer;
  {
    std::shared_lock lock(mutex_);
    observer = observer_;
  }
  if (observer) observer(e);
  return e.id;
}

std::vector<Envelope> MessageBus::poll(std::string_view module, std::size_t max) {
  auto q = queue(module, BusError::Code::UnknownModule);
  std::lock_guard lock(q->mutex);
  std::vector<Envelope> out;
  while (!q->items.empty() && out.size() < max) {
    out.push_back(std::move(q->items.front()));
    q->items.pop_front();
  }
  return out;
}

std::size_t MessageBus::pending(std::string_view module) const {
  auto q = queue(module, BusError::Code::UnknownModule);
  std::lock_guard lock(q->mutex);
  return q->items.size();
}

void MessageBus::set_observer(std::function<void(const Envelope&)> observer) {
  std::unique_lock lock(mutex_);
  observer_ = std::move(observer);
}

void to_json(nlohmann::json& j, const Envelope& e) {
  j = nlohmann::json{{"id", e.id},
                     {"source", e.source},
                     {"target", e.target},
                     {"kind", to_string(e.kind)},
                     {"payload", e.payload},
                     {"sent_at_ms", e.sent_at_ms}};
}

}  // namespace kirett

#pragma once

// Wires the session engine, vitals store and situation detection together over
// the message bus. Four modules are registered: "kg" (session engine),
// "middleware" (vitals), "sd" (situation detection) and "ui" (the gateway that
// turns bus traffic into per-session event logs for the API).

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kirett/bus.hpp"
#include "kirett/clock.hpp"
#include "kirett/graph.hpp"
#include "kirett/session.hpp"
#include "kirett/situation.hpp"
#include "kirett/vitals.hpp"

namespace kirett {

struct ApiEvent {
  std::uint64_t seq = 0;
  /// prompt | warning | situation | audit | stopped
  std::string type;
  nlohmann::json body;
};

/// Append-only per-session event sequence; seq starts at 1 and has no gaps.
class EventLog {
 public:
  std::uint64_t append(std::string type, nlohmann::json body);
  std::vector<ApiEvent> after(std::uint64_t seq) const;
  /// Blocks until an event after seq exists, the log is closed, or the
  /// timeout passes.
  std::vector<ApiEvent> wait_after(std::uint64_t seq, std::chrono::milliseconds timeout) const;
  std::uint64_t last_seq() const;
  void close();
  bool closed() const;

 private:
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::vector<ApiEvent> events_;
  bool closed_ = false;
};

struct RuntimeConfig {
  std::int64_t max_age_ms = 300'000;
  Clock clock = system_clock_ms();
};

class Runtime {
 public:
  explicit Runtime(std::shared_ptr<const Graph> graph, RuntimeConfig config = {});
  ~Runtime();

  const Graph& graph() const { return *graph_; }
  SessionEngine& engine() { return engine_; }
  VitalsStore& vitals() { return vitals_; }
  MessageBus& bus() { return bus_; }
  const std::optional<Questionnaire>& questionnaire() const { return questionnaire_; }

  /// Each operation returns the session summary after all resulting bus
  /// traffic has been processed. Errors are SessionError.
  nlohmann::json create_session(std::string patient_id, std::string_view entry, bool simulation = false);
  nlohmann::json decide(std::string_view id, std::string_view choice);
  nlohmann::json confirm(std::string_view id, bool accept);
  nlohmann::json jump(std::string_view id, std::string_view target);
  std::vector<InfoItem> info(std::string_view id);
  nlohmann::json stop(std::string_view id);
  nlohmann::json summary(std::string_view id);
  nlohmann::json audit(std::string_view id);

  /// Stores the record, refreshes sessions waiting on that stream and warns
  /// sessions whose current node bounds the reading violates.
  void ingest(const VitalsRecord& record);

  /// Scores answers; vitals default to the patient's latest readings for the
  /// parameters the rules mention. With session_id the result is also pushed
  /// to that session's event log.
  nlohmann::json situation(const nlohmann::json& answers, const nlohmann::json& vitals,
                           const std::optional<std::string>& patient_id,
                           const std::optional<std::string>& session_id, std::size_t k);

  /// Throws SessionError(UnknownSession).
  std::shared_ptr<EventLog> events(std::string_view id);

  /// Processes queued messages until every queue is empty.
  void settle();
  /// Closes every event log so blocked readers return.
  void shutdown();

 private:
  struct SessionState {
    std::size_t published = 0;
    bool request_in_flight = false;
    bool stopped_published = false;
    std::shared_ptr<EventLog> log = std::make_shared<EventLog>();
  };

  template <typename F>
  nlohmann::json operate(std::string_view id, F&& op);
  SessionState& state(const std::string& id);
  /// Must be called with the session locked.
  void publish(Session& s);

  void handle_kg(const Envelope& e);
  void handle_middleware(const Envelope& e);
  void handle_ui(const Envelope& e);

  std::shared_ptr<const Graph> graph_;
  RuntimeConfig config_;
  SessionEngine engine_;
  VitalsStore vitals_;
  MessageBus bus_;
  Mailbox kg_;
  Mailbox middleware_;
  Mailbox sd_;
  Mailbox ui_;
  std::optional<Questionnaire> questionnaire_;

  std::mutex pump_mutex_;
  std::mutex state_mutex_;
  std::map<std::string, SessionState, std::less<>> states_;
};

void to_json(nlohmann::json& j, const ApiEvent& e);

}  // namespace kirett

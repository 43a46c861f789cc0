#pragma once

// Per-patient treatment state machine over an immutable Graph.
//
// A Session walks path edges one operator action at a time. Header nodes
// (BPR, SAA, disease group) advance automatically along their R1 edge; every
// other position change requires an explicit action and is written to the
// append-only audit log. Nodes carrying d_type issue a ValueRequest; the
// answer becomes a suggestion that still has to be confirmed, except in
// simulation mode where suggestions are confirmed on the operator's behalf.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "kirett/clock.hpp"
#include "kirett/graph.hpp"
#include "kirett/vitals.hpp"

namespace kirett {

enum class SessionStatus { Active, AwaitingDecision, AwaitingValue, AwaitingPathConfirmation, Stopped };
enum class PromptKind { Binary, MultiChoice, Acknowledge, ValueConfirmation, PathChangeConfirmation };
enum class Presentation { Normal, Information, Warning };

std::string_view to_string(SessionStatus s);
std::string_view to_string(PromptKind k);
std::string_view to_string(Presentation p);

struct PromptOption {
  std::string key;
  std::string target;
  std::string label;
  bool operator==(const PromptOption&) const = default;
};

struct AttachedValue {
  std::string parameter;
  double reading = 0;
  std::string unit;
  std::optional<bool> in_range;
  Freshness freshness = Freshness::Fresh;
  std::int64_t timestamp_ms = 0;
  bool operator==(const AttachedValue&) const = default;
};

struct LinkRef {
  std::string id;
  std::string name;
  bool operator==(const LinkRef&) const = default;
};

struct Prompt {
  std::string node;
  PromptKind kind = PromptKind::Acknowledge;
  std::string title;
  std::vector<PromptOption> options;
  std::optional<std::string> suggested;
  bool info_available = false;
  std::optional<AttachedValue> attached_value;
  bool invasive = false;
  Presentation presentation = Presentation::Normal;
  /// Standard procedures linked from the node (SAA links).
  std::vector<LinkRef> procedures;

  const PromptOption* option(std::string_view key) const;
  bool operator==(const Prompt&) const = default;
};

enum class AuditAction {
  Create,
  Auto,
  Choice,
  Acknowledge,
  Value,
  ConfirmSuggestion,
  DeclineSuggestion,
  PathConfirmed,
  PathDeclined,
  Jump,
  Info,
  Stop,
};

std::string_view to_string(AuditAction a);
std::optional<AuditAction> audit_action_from_string(std::string_view text);

struct AuditEntry {
  std::int64_t timestamp_ms = 0;
  std::string node;
  std::optional<PromptKind> prompt_kind;
  AuditAction action = AuditAction::Create;
  std::string detail;
  std::optional<std::string> target;
  std::optional<AttachedValue> vitals;
  bool operator==(const AuditEntry&) const = default;
};

class SessionError : public std::runtime_error {
 public:
  enum class Code {
    UnknownNode,
    DisallowedEntry,
    Stopped,
    NotAwaitingDecision,
    UnknownChoice,
    NoPendingConfirmation,
    ConfirmationPending,
    NotJumpReachable,
    ParameterMismatch,
    NotAwaitingValue,
    Structural,
    UnknownSession,
  };
  SessionError(Code code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

std::string_view to_string(SessionError::Code code);

struct SessionOptions {
  bool simulation = false;
  Clock clock;
};

struct InfoItem {
  std::string id;
  std::string name;
  NodeKind kind;
};

/// Result of one step(): a prompt for the operator, a value request for the
/// middleware, an automatic advance through a header node, or a stop.
struct AutoAdvance {
  std::string from;
  std::string to;
};
struct StopReached {};
using StepOutcome = std::variant<Prompt, ValueRequest, AutoAdvance, StopReached>;

class Session {
 public:
  /// entry is "start" (the unique Start node) or the id of a Start, BPR or
  /// disease-group node.
  Session(std::shared_ptr<const Graph> graph, std::string session_id, std::string patient_id,
          std::string_view entry, SessionOptions options = {});

  const std::string& id() const { return id_; }
  const std::string& patient_id() const { return patient_id_; }
  const std::string& current() const { return current_; }
  SessionStatus status() const { return status_; }
  const std::optional<Prompt>& pending() const { return pending_; }
  const std::vector<AuditEntry>& audit() const { return audit_; }
  const std::optional<std::string>& current_path_label() const { return path_label_; }
  /// Set while the current node waits for (or accepts refreshes of) a value.
  const std::optional<ValueRequest>& outstanding_request() const { return request_; }
  bool simulation() const { return simulation_; }
  const Graph& graph() const { return *graph_; }

  /// Performs one unit of progress from the current node.
  StepOutcome step();

  void submit_decision(std::string_view choice);
  /// Follows the first option of an acknowledge prompt.
  void acknowledge();
  /// Accepts or declines the pending value suggestion or path change.
  void confirm(bool accept = true);
  void apply_value(const ValueResponse& response);
  void jump(std::string_view target);
  std::vector<InfoItem> request_additional_info();
  /// Idempotent.
  void stop();

  nlohmann::json export_audit() const;

 private:
  struct PendingTransition {
    std::string target;
    AuditAction action;
    std::string detail;
    SessionStatus prior_status;
    std::optional<Prompt> prior_prompt;
  };

  void settle();
  void transition(const std::string& target, AuditAction action, std::string detail);
  void move_to(const std::string& target, AuditAction action, std::string detail);
  void log(AuditAction action, std::string detail, std::optional<std::string> target = {},
           std::optional<AttachedValue> vitals = {});
  std::int64_t next_timestamp();
  void require_not_stopped() const;
  void require_no_confirmation() const;
  Prompt make_prompt(const Node& node, PromptKind kind) const;
  std::optional<std::string> jump_route(const Node& target) const;

  std::shared_ptr<const Graph> graph_;
  std::string id_;
  std::string patient_id_;
  std::string current_;
  SessionStatus status_ = SessionStatus::Active;
  std::optional<Prompt> pending_;
  std::vector<AuditEntry> audit_;
  std::optional<std::string> path_label_;
  std::optional<ValueRequest> request_;
  std::optional<PendingTransition> transition_;
  bool simulation_ = false;
  Clock clock_;
  std::int64_t last_timestamp_ = 0;
};

/// Renders an exported audit report as a line-per-entry transcript without
/// timestamps, so replays of the same script compare byte-for-byte.
std::string render_transcript(const nlohmann::json& report);

void to_json(nlohmann::json& j, const PromptOption& o);
void to_json(nlohmann::json& j, const AttachedValue& v);
void to_json(nlohmann::json& j, const Prompt& p);
void to_json(nlohmann::json& j, const AuditEntry& e);
void to_json(nlohmann::json& j, const InfoItem& i);
/// Session state summary (no audit).
nlohmann::json session_summary(const Session& s);

/// Holds many sessions; operations on different sessions run concurrently,
/// each session is mutated by one caller at a time.
class SessionEngine {
 public:
  explicit SessionEngine(std::shared_ptr<const Graph> graph, Clock clock = system_clock_ms());

  /// Returns the new session id ("s1", "s2", ...).
  std::string create(std::string patient_id, std::string_view entry, bool simulation = false);
  std::vector<std::string> list() const;
  bool contains(std::string_view id) const;

  /// Runs fn with exclusive access to the session. Throws
  /// SessionError(UnknownSession).
  template <typename F>
  auto with_session(std::string_view id, F&& fn) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return fn(slot->session);
  }

  Session snapshot(std::string_view id);
  void stop(std::string_view id);
  const Graph& graph() const { return *graph_; }

 private:
  struct Slot {
    explicit Slot(Session s) : session(std::move(s)) {}
    std::mutex mutex;
    Session session;
  };
  std::shared_ptr<Slot> find(std::string_view id) const;

  std::shared_ptr<const Graph> graph_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace kirett

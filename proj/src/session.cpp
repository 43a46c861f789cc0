#include "kirett/session.hpp"

#include <algorithm>
#include <cstdio>

#include "number_format.hpp"

namespace kirett {
namespace {

using Code = SessionError::Code;

bool is_header(NodeKind kind) {
  return kind == NodeKind::Bpr || kind == NodeKind::Saa || kind == NodeKind::DiseaseGroup;
}

std::string value_detail(const std::string& parameter, const std::optional<AttachedValue>& v,
                         const std::optional<std::string>& suggested) {
  if (!v) return parameter + " unavailable";
  std::string out = parameter + "=" + detail::format_number(v->reading);
  if (!v->unit.empty()) out += " " + v->unit;
  out += " in_range=";
  out += v->in_range ? (*v->in_range ? "yes" : "no") : "-";
  out += " freshness=" + std::string(to_string(v->freshness));
  out += " suggested=" + suggested.value_or("-");
  return out;
}

}  // namespace

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Active:
      return "active";
    case SessionStatus::AwaitingDecision:
      return "awaiting_decision";
    case SessionStatus::AwaitingValue:
      return "awaiting_value";
    case SessionStatus::AwaitingPathConfirmation:
      return "awaiting_path_confirmation";
    case SessionStatus::Stopped:
      return "stopped";
  }
  return "active";
}

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::Binary:
      return "binary";
    case PromptKind::MultiChoice:
      return "multi_choice";
    case PromptKind::Acknowledge:
      return "acknowledge";
    case PromptKind::ValueConfirmation:
      return "value_confirmation";
    case PromptKind::PathChangeConfirmation:
      return "path_change_confirmation";
  }
  return "acknowledge";
}

std::string_view to_string(Presentation p) {
  switch (p) {
    case Presentation::Normal:
      return "normal";
    case Presentation::Information:
      return "information";
    case Presentation::Warning:
      return "warning";
  }
  return "normal";
}

std::string_view to_string(AuditAction a) {
  switch (a) {
    case AuditAction::Create:
      return "create";
    case AuditAction::Auto:
      return "auto";
    case AuditAction::Choice:
      return "choice";
    case AuditAction::Acknowledge:
      return "acknowledge";
    case AuditAction::Value:
      return "value";
    case AuditAction::ConfirmSuggestion:
      return "confirm-suggestion";
    case AuditAction::DeclineSuggestion:
      return "decline-suggestion";
    case AuditAction::PathConfirmed:
      return "path-confirmed";
    case AuditAction::PathDeclined:
      return "path-declined";
    case AuditAction::Jump:
      return "jump";
    case AuditAction::Info:
      return "info";
    case AuditAction::Stop:
      return "stop";
  }
  return "create";
}

std::optional<AuditAction> audit_action_from_string(std::string_view text) {
  for (int i = 0; i <= static_cast<int>(AuditAction::Stop); ++i) {
    auto a = static_cast<AuditAction>(i);
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

std::string_view to_string(SessionError::Code code) {
  switch (code) {
    case Code::UnknownNode:
      return "unknown_node";
    case Code::DisallowedEntry:
      return "disallowed_entry";
    case Code::Stopped:
      return "stopped";
    case Code::NotAwaitingDecision:
      return "not_awaiting_decision";
    case Code::UnknownChoice:
      return "unknown_choice";
    case Code::NoPendingConfirmation:
      return "no_pending_confirmation";
    case Code::ConfirmationPending:
      return "confirmation_pending";
    case Code::NotJumpReachable:
      return "not_jump_reachable";
    case Code::ParameterMismatch:
      return "parameter_mismatch";
    case Code::NotAwaitingValue:
      return "not_awaiting_value";
    case Code::Structural:
      return "structural";
    case Code::UnknownSession:
      return "unknown_session";
  }
  return "structural";
}

const PromptOption* Prompt::option(std::string_view key) const {
  for (const PromptOption& o : options) {
    if (o.key == key) return &o;
  }
  return nullptr;
}

Session::Session(std::shared_ptr<const Graph> graph, std::string session_id,
                 std::string patient_id, std::string_view entry, SessionOptions options)
    : graph_(std::move(graph)),
      id_(std::move(session_id)),
      patient_id_(std::move(patient_id)),
      simulation_(options.simulation),
      clock_(options.clock ? std::move(options.clock) : system_clock_ms()) {
  const Node* node = nullptr;
  if (entry == "start") {
    for (const Node& n : graph_->nodes()) {
      if (n.kind == NodeKind::Start) {
        node = &n;
        break;
      }
    }
    if (!node) throw SessionError(Code::UnknownNode, "graph has no Start node");
  } else {
    node = graph_->find(entry);
    if (!node) throw SessionError(Code::UnknownNode, "unknown entry node " + std::string(entry));
  }
  if (node->kind != NodeKind::Start && node->kind != NodeKind::Bpr &&
      node->kind != NodeKind::DiseaseGroup) {
    throw SessionError(Code::DisallowedEntry,
                       "entry " + node->id + " is a " + std::string(to_string(node->kind)) +
                           " node; expected Start, BPR or DiseaseGroup");
  }
  current_ = node->id;
  path_label_ = node->path_label();
  log(AuditAction::Create, "entry");
  settle();
}

std::int64_t Session::next_timestamp() {
  std::int64_t t = clock_();
  if (!audit_.empty() && t <= last_timestamp_) t = last_timestamp_ + 1;
  last_timestamp_ = t;
  return t;
}

void Session::log(AuditAction action, std::string detail, std::optional<std::string> target,
                  std::optional<AttachedValue> vitals) {
  AuditEntry e;
  e.timestamp_ms = next_timestamp();
  e.node = current_;
  if (pending_) e.prompt_kind = pending_->kind;
  e.action = action;
  e.detail = std::move(detail);
  e.target = std::move(target);
  e.vitals = std::move(vitals);
  audit_.push_back(std::move(e));
}

void Session::require_not_stopped() const {
  if (status_ == SessionStatus::Stopped) {
    throw SessionError(Code::Stopped, "session " + id_ + " is stopped");
  }
}

void Session::require_no_confirmation() const {
  if (status_ == SessionStatus::AwaitingPathConfirmation) {
    throw SessionError(Code::ConfirmationPending, "a path change awaits confirmation");
  }
}

Prompt Session::make_prompt(const Node& node, PromptKind kind) const {
  Prompt p;
  p.node = node.id;
  p.kind = kind;
  p.title = node.name;
  for (const OrderedEdge& oe : out_edges_ordered(*graph_, node.id)) {
    p.options.push_back({oe.edge->key(), oe.target->id, oe.target->name});
  }
  RelatedLinks links = related_links(*graph_, node.id);
  p.info_available = !links.additional_info.empty();
  for (const OrderedEdge& oe : links.saa) p.procedures.push_back({oe.target->id, oe.target->name});
  p.invasive = node.kind == NodeKind::InvasiveProcedure;
  if (node.kind == NodeKind::Display) p.presentation = Presentation::Information;
  if (node.kind == NodeKind::Warning) p.presentation = Presentation::Warning;
  return p;
}

StepOutcome Session::step() {
  if (status_ == SessionStatus::Stopped) return StopReached{};
  if (status_ == SessionStatus::AwaitingValue && request_) return *request_;
  if (pending_) return *pending_;

  const Node& node = graph_->node(current_);
  if (node.kind == NodeKind::Stop) {
    log(AuditAction::Stop, "reached");
    status_ = SessionStatus::Stopped;
    return StopReached{};
  }
  if (is_jump_hub(node.kind)) {
    throw SessionError(Code::Structural, "session positioned on jump hub " + node.id);
  }
  auto edges = out_edges_ordered(*graph_, node.id);
  if (edges.empty()) {
    throw SessionError(Code::Structural, "node " + node.id + " has no outgoing path edge");
  }

  if (is_header(node.kind)) {
    const OrderedEdge& first = edges.front();
    AutoAdvance advance{node.id, first.target->id};
    log(AuditAction::Auto, first.edge->key(), first.target->id);
    current_ = first.target->id;
    if (auto label = first.target->path_label()) path_label_ = label;
    return advance;
  }

  if (node.kind == NodeKind::DecisionYN && node.requests_value()) {
    request_ = ValueRequest{id_, patient_id_, node.id, *node.value, node.min, node.max};
    status_ = SessionStatus::AwaitingValue;
    return *request_;
  }

  PromptKind kind = PromptKind::Acknowledge;
  if (node.kind == NodeKind::DecisionYN) kind = PromptKind::Binary;
  if (node.kind == NodeKind::DecisionOR || node.kind == NodeKind::Start) kind = PromptKind::MultiChoice;
  pending_ = make_prompt(node, kind);
  status_ = SessionStatus::AwaitingDecision;
  return *pending_;
}

void Session::settle() {
  while (true) {
    StepOutcome out = step();
    if (!std::holds_alternative<AutoAdvance>(out)) return;
  }
}

void Session::move_to(const std::string& target, AuditAction action, std::string detail) {
  log(action, std::move(detail), target);
  current_ = target;
  if (auto label = graph_->node(target).path_label()) path_label_ = label;
  pending_.reset();
  request_.reset();
  transition_.reset();
  status_ = SessionStatus::Active;
  settle();
}

void Session::transition(const std::string& target, AuditAction action, std::string detail) {
  auto label = graph_->node(target).path_label();
  if (path_label_ && label && *label != *path_label_) {
    transition_ = PendingTransition{target, action, std::move(detail), status_, pending_};
    Prompt p;
    p.node = current_;
    p.kind = PromptKind::PathChangeConfirmation;
    p.title = graph_->node(target).name;
    p.options = {{"yes", target, *label}, {"no", current_, *path_label_}};
    pending_ = std::move(p);
    status_ = SessionStatus::AwaitingPathConfirmation;
    return;
  }
  move_to(target, action, std::move(detail));
}

void Session::submit_decision(std::string_view choice) {
  require_not_stopped();
  if (status_ == SessionStatus::AwaitingPathConfirmation) {
    if (choice == "yes" || choice == "no") return confirm(choice == "yes");
    throw SessionError(Code::UnknownChoice, "expected yes or no for the path change");
  }
  if (status_ != SessionStatus::AwaitingDecision || !pending_) {
    throw SessionError(Code::NotAwaitingDecision, "session is not awaiting a decision");
  }
  const PromptOption* opt = pending_->option(choice);
  if (!opt) {
    throw SessionError(Code::UnknownChoice, "choice " + std::string(choice) + " is not offered at " +
                                                current_);
  }
  AuditAction action =
      pending_->kind == PromptKind::Acknowledge ? AuditAction::Acknowledge : AuditAction::Choice;
  transition(opt->target, action, opt->key);
}

void Session::acknowledge() {
  require_not_stopped();
  require_no_confirmation();
  if (status_ != SessionStatus::AwaitingDecision || !pending_ ||
      pending_->kind != PromptKind::Acknowledge) {
    throw SessionError(Code::NotAwaitingDecision, "no acknowledge prompt pending");
  }
  const PromptOption& opt = pending_->options.front();
  transition(opt.target, AuditAction::Acknowledge, opt.key);
}

void Session::confirm(bool accept) {
  require_not_stopped();
  if (status_ == SessionStatus::AwaitingPathConfirmation && transition_) {
    PendingTransition t = *transition_;
    const std::string from = path_label_.value_or("-");
    const std::string to = graph_->node(t.target).path_label().value_or("-");
    // The entries are logged against the prompt the operator answered.
    if (accept) {
      log(AuditAction::PathConfirmed, "from=" + from + " to=" + to, t.target);
      pending_ = t.prior_prompt;
      move_to(t.target, t.action, t.detail);
    } else {
      log(AuditAction::PathDeclined, "from=" + from + " to=" + to, t.target);
      transition_.reset();
      pending_ = std::move(t.prior_prompt);
      status_ = t.prior_status;
    }
    return;
  }
  if (status_ != SessionStatus::AwaitingDecision || !pending_ || !pending_->suggested) {
    throw SessionError(Code::NoPendingConfirmation, "nothing awaits confirmation");
  }
  if (accept) {
    const PromptOption* opt = pending_->option(*pending_->suggested);
    transition(opt->target, AuditAction::ConfirmSuggestion, opt->key);
  } else {
    log(AuditAction::DeclineSuggestion, *pending_->suggested);
    pending_->suggested.reset();
    pending_->kind = PromptKind::Binary;
  }
}

void Session::apply_value(const ValueResponse& response) {
  require_not_stopped();
  const bool waiting = status_ == SessionStatus::AwaitingValue;
  const bool refresh = status_ == SessionStatus::AwaitingDecision && request_ &&
                       request_->node_id == current_;
  if (!request_ || (!waiting && !refresh)) {
    throw SessionError(Code::NotAwaitingValue, "session is not awaiting a value");
  }
  if (response.parameter != request_->parameter) {
    throw SessionError(Code::ParameterMismatch, "expected " + request_->parameter + ", got " +
                                                    response.parameter);
  }
  if (!response.node_id.empty() && response.node_id != current_) {
    throw SessionError(Code::ParameterMismatch, "response is for node " + response.node_id);
  }
  const Node& node = graph_->node(current_);
  const bool available = response.freshness != Freshness::Unavailable && response.reading;
  // A reading that stopped being available does not withdraw one already shown.
  if (refresh && !available) return;

  Prompt p = make_prompt(node, PromptKind::Binary);
  if (available) {
    AttachedValue v;
    v.parameter = response.parameter;
    v.reading = *response.reading;
    v.unit = response.unit.value_or(node.unit.value_or(""));
    v.freshness = response.freshness;
    v.timestamp_ms = response.timestamp_ms.value_or(0);
    if (node.min || node.max) {
      v.in_range = within_bounds(v.reading, node.min, node.max);
      const bool yes = *v.in_range == (node.in_range_branch() == RangeBranch::Yes);
      p.suggested = yes ? "yes" : "no";
      p.kind = PromptKind::ValueConfirmation;
    }
    p.attached_value = v;
  }
  pending_ = p;
  status_ = SessionStatus::AwaitingDecision;
  log(AuditAction::Value, value_detail(request_->parameter, p.attached_value, p.suggested), {},
      p.attached_value);
  if (simulation_ && p.suggested) confirm(true);
}

std::optional<std::string> Session::jump_route(const Node& target) const {
  for (std::size_t i : graph_->out_edges(current_)) {
    const Edge& e = graph_->edges()[i];
    if (e.to != target.id) continue;
    if (e.kind == EdgeKind::BprLink || e.kind == EdgeKind::SaaLink ||
        e.kind == EdgeKind::Association) {
      return std::string(to_string(e.kind));
    }
  }
  for (std::size_t i : graph_->in_edges(target.id)) {
    const Edge& e = graph_->edges()[i];
    const Node& hub = graph_->node(e.from);
    auto ht = hub_target(hub.kind);
    if (ht && ht->target == target.kind && ht->link == e.kind) return "hub:" + hub.id;
  }
  return std::nullopt;
}

void Session::jump(std::string_view target) {
  require_not_stopped();
  require_no_confirmation();
  const Node* node = graph_->find(target);
  if (!node) throw SessionError(Code::UnknownNode, "unknown node " + std::string(target));
  auto route = is_jump_hub(node->kind) ? std::nullopt : jump_route(*node);
  if (!route) {
    throw SessionError(Code::NotJumpReachable,
                       node->id + " is not reachable by a jump from " + current_);
  }
  transition(node->id, AuditAction::Jump, *route);
}

std::vector<InfoItem> Session::request_additional_info() {
  require_not_stopped();
  std::vector<InfoItem> items;
  std::string ids;
  for (const OrderedEdge& oe : related_links(*graph_, current_).additional_info) {
    items.push_back({oe.target->id, oe.target->name, oe.target->kind});
    ids += (ids.empty() ? "" : ",") + oe.target->id;
  }
  log(AuditAction::Info, ids.empty() ? "none" : ids);
  return items;
}

void Session::stop() {
  if (status_ == SessionStatus::Stopped) return;
  log(AuditAction::Stop, "terminated");
  pending_.reset();
  request_.reset();
  transition_.reset();
  status_ = SessionStatus::Stopped;
}

nlohmann::json Session::export_audit() const {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < audit_.size(); ++i) {
    nlohmann::json e = audit_[i];
    e["seq"] = i + 1;
    entries.push_back(std::move(e));
  }
  return {{"session_id", id_},
          {"patient_id", patient_id_},
          {"graph", {{"name", graph_->meta().name}, {"version", graph_->meta().version}}},
          {"status", to_string(status_)},
          {"current", current_},
          {"entries", std::move(entries)}};
}

std::string render_transcript(const nlohmann::json& report) {
  std::string out;
  for (const auto& e : report.at("entries")) {
    char seq[16];
    std::snprintf(seq, sizeof seq, "%03zu", e.at("seq").get<std::size_t>());
    out += seq;
    out += " " + e.at("action").get<std::string>() + " " + e.at("node").get<std::string>() + " [";
    out += e.contains("prompt_kind") ? e.at("prompt_kind").get<std::string>() : "-";
    out += "] " + e.at("detail").get<std::string>();
    if (e.contains("target")) out += " -> " + e.at("target").get<std::string>();
    out += '\n';
  }
  return out;
}

void to_json(nlohmann::json& j, const PromptOption& o) {
  j = nlohmann::json{{"key", o.key}, {"target", o.target}, {"label", o.label}};
}

void to_json(nlohmann::json& j, const AttachedValue& v) {
  j = nlohmann::json{{"parameter", v.parameter},
                     {"reading", v.reading},
                     {"unit", v.unit},
                     {"freshness", to_string(v.freshness)},
                     {"timestamp_ms", v.timestamp_ms}};
  j["in_range"] = v.in_range ? nlohmann::json(*v.in_range) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const Prompt& p) {
  j = nlohmann::json{{"node", p.node},
                     {"kind", to_string(p.kind)},
                     {"title", p.title},
                     {"options", p.options},
                     {"info_available", p.info_available},
                     {"invasive", p.invasive},
                     {"presentation", to_string(p.presentation)}};
  j["suggested"] = p.suggested ? nlohmann::json(*p.suggested) : nlohmann::json(nullptr);
  j["attached_value"] = p.attached_value ? nlohmann::json(*p.attached_value) : nlohmann::json(nullptr);
  nlohmann::json procedures = nlohmann::json::array();
  for (const LinkRef& l : p.procedures) procedures.push_back({{"id", l.id}, {"name", l.name}});
  j["procedures"] = std::move(procedures);
}

void to_json(nlohmann::json& j, const AuditEntry& e) {
  j = nlohmann::json{{"timestamp_ms", e.timestamp_ms},
                     {"node", e.node},
                     {"action", to_string(e.action)},
                     {"detail", e.detail}};
  if (e.prompt_kind) j["prompt_kind"] = to_string(*e.prompt_kind);
  if (e.target) j["target"] = *e.target;
  if (e.vitals) j["vitals"] = *e.vitals;
}

void to_json(nlohmann::json& j, const InfoItem& i) {
  j = nlohmann::json{{"id", i.id}, {"name", i.name}, {"kind", to_string(i.kind)}};
}

nlohmann::json session_summary(const Session& s) {
  nlohmann::json j{{"session_id", s.id()},
                   {"patient_id", s.patient_id()},
                   {"current", s.current()},
                   {"status", to_string(s.status())},
                   {"simulation", s.simulation()}};
  j["path_label"] = s.current_path_label() ? nlohmann::json(*s.current_path_label()) : nlohmann::json(nullptr);
  j["prompt"] = s.pending() ? nlohmann::json(*s.pending()) : nlohmann::json(nullptr);
  if (s.status() == SessionStatus::AwaitingValue && s.outstanding_request()) {
    j["value_request"] = *s.outstanding_request();
  }
  return j;
}

SessionEngine::SessionEngine(std::shared_ptr<const Graph> graph, Clock clock)
    : graph_(std::move(graph)), clock_(std::move(clock)) {}

std::string SessionEngine::create(std::string patient_id, std::string_view entry, bool simulation) {
  std::unique_lock lock(mutex_);
  std::string id = "s" + std::to_string(next_id_);
  auto slot = std::make_shared<Slot>(
      Session(graph_, id, std::move(patient_id), entry, SessionOptions{simulation, clock_}));
  ++next_id_;
  sessions_.emplace(id, std::move(slot));
  return id;
}

std::vector<std::string> SessionEngine::list() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, slot] : sessions_) ids.push_back(id);
  // Creation order: "s2" before "s10".
  std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
    return std::pair(a.size(), a) < std::pair(b.size(), b);
  });
  return ids;
}

bool SessionEngine::contains(std::string_view id) const {
  std::shared_lock lock(mutex_);
  return sessions_.find(id) != sessions_.end();
}

std::shared_ptr<SessionEngine::Slot> SessionEngine::find(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw SessionError(Code::UnknownSession, "unknown session " + std::string(id));
  }
  return it->second;
}

Session SessionEngine::snapshot(std::string_view id) {
  return with_session(id, [](Session& s) { return s; });
}

void SessionEngine::stop(std::string_view id) {
  with_session(id, [](Session& s) { s.stop(); });
}

}  // namespace kirett

#include "kirett/runtime.hpp"

#include <set>

namespace kirett {

std::uint64_t EventLog::append(std::string type, nlohmann::json body) {
  std::uint64_t seq;
  {
    std::lock_guard lock(mutex_);
    seq = events_.size() + 1;
    events_.push_back({seq, std::move(type), std::move(body)});
  }
  changed_.notify_all();
  return seq;
}

std::vector<ApiEvent> EventLog::after(std::uint64_t seq) const {
  std::lock_guard lock(mutex_);
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

std::vector<ApiEvent> EventLog::wait_after(std::uint64_t seq, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  changed_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > seq; });
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

void EventLog::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  changed_.notify_all();
}

bool EventLog::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

Runtime::Runtime(std::shared_ptr<const Graph> graph, RuntimeConfig config)
    : graph_(std::move(graph)),
      config_(std::move(config)),
      engine_(graph_, config_.clock),
      vitals_(VitalsConfig{config_.max_age_ms}),
      bus_(config_.clock),
      kg_(bus_.register_module("kg")),
      middleware_(bus_.register_module("middleware")),
      sd_(bus_.register_module("sd")),
      ui_(bus_.register_module("ui")) {
  if (graph_->extensions().contains("questionnaire")) questionnaire_ = questionnaire_from_graph(*graph_);
}

Runtime::~Runtime() { shutdown(); }

void Runtime::shutdown() {
  std::lock_guard lock(state_mutex_);
  for (auto& [id, st] : states_) st.log->close();
}

Runtime::SessionState& Runtime::state(const std::string& id) {
  std::lock_guard lock(state_mutex_);
  return states_[id];
}

void Runtime::publish(Session& s) {
  SessionState& st = state(s.id());
  const auto& audit = s.audit();
  if (st.published < audit.size()) {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = st.published; i < audit.size(); ++i) {
      nlohmann::json e = audit[i];
      e["seq"] = i + 1;
      entries.push_back(std::move(e));
    }
    st.published = audit.size();
    nlohmann::json payload = session_summary(s);
    payload["entries"] = std::move(entries);
    kg_.send("ui", MessageKind::PromptUpdate, std::move(payload));
  }
  if (s.status() == SessionStatus::AwaitingValue && s.outstanding_request() && !st.request_in_flight) {
    st.request_in_flight = true;
    kg_.send("middleware", MessageKind::ValueRequest, *s.outstanding_request());
  }
}

template <typename F>
nlohmann::json Runtime::operate(std::string_view id, F&& op) {
  engine_.with_session(id, [&](Session& s) {
    op(s);
    publish(s);
  });
  settle();
  return summary(id);
}

nlohmann::json Runtime::create_session(std::string patient_id, std::string_view entry, bool simulation) {
  std::string id = engine_.create(std::move(patient_id), entry, simulation);
  state(id);
  return operate(id, [](Session&) {});
}

nlohmann::json Runtime::decide(std::string_view id, std::string_view choice) {
  return operate(id, [&](Session& s) { s.submit_decision(choice); });
}

nlohmann::json Runtime::confirm(std::string_view id, bool accept) {
  return operate(id, [&](Session& s) { s.confirm(accept); });
}

nlohmann::json Runtime::jump(std::string_view id, std::string_view target) {
  return operate(id, [&](Session& s) { s.jump(target); });
}

std::vector<InfoItem> Runtime::info(std::string_view id) {
  std::vector<InfoItem> items;
  operate(id, [&](Session& s) { items = s.request_additional_info(); });
  return items;
}

nlohmann::json Runtime::stop(std::string_view id) {
  return operate(id, [](Session& s) { s.stop(); });
}

nlohmann::json Runtime::summary(std::string_view id) {
  return engine_.with_session(id, [](Session& s) { return session_summary(s); });
}

nlohmann::json Runtime::audit(std::string_view id) {
  return engine_.with_session(id, [](Session& s) { return s.export_audit(); });
}

std::shared_ptr<EventLog> Runtime::events(std::string_view id) {
  if (!engine_.contains(id)) {
    throw SessionError(SessionError::Code::UnknownSession, "unknown session " + std::string(id));
  }
  return state(std::string(id)).log;
}

void Runtime::ingest(const VitalsRecord& record) {
  vitals_.ingest(record);
  const std::int64_t now = config_.clock();
  for (const std::string& id : engine_.list()) {
    engine_.with_session(id, [&](Session& s) {
      if (s.patient_id() != record.patient_id || s.status() == SessionStatus::Stopped) return;
      const Node& node = s.graph().node(s.current());
      if (node.value != record.parameter) return;
      if ((node.min || node.max) && !within_bounds(record.reading, node.min, node.max)) {
        nlohmann::json warning = record;
        warning["session_id"] = s.id();
        warning["node"] = node.id;
        if (node.min) warning["min"] = *node.min;
        if (node.max) warning["max"] = *node.max;
        middleware_.send("ui", MessageKind::Warning, std::move(warning));
      }
      const auto& request = s.outstanding_request();
      if (request && request->node_id == s.current() && s.status() == SessionStatus::AwaitingDecision) {
        middleware_.send("kg", MessageKind::ValueResponse, vitals_.answer(*request, now));
      }
    });
  }
  settle();
}

nlohmann::json Runtime::situation(const nlohmann::json& answers, const nlohmann::json& vitals,
                                  const std::optional<std::string>& patient_id,
                                  const std::optional<std::string>& session_id, std::size_t k) {
  if (!questionnaire_) throw SituationError(SituationError::Code::Malformed, "graph has no questionnaire");
  if (session_id && !engine_.contains(*session_id)) {
    throw SessionError(SessionError::Code::UnknownSession, "unknown session " + *session_id);
  }
  VitalsSnapshot snapshot = parse_vitals_snapshot(vitals);
  if (vitals.is_null() && patient_id) {
    for (const VitalsRule& rule : questionnaire_->rules) {
      if (auto r = vitals_.latest(*patient_id, rule.parameter)) snapshot[rule.parameter] = r->reading;
    }
  }
  SituationScore s = score(*questionnaire_, parse_answers(answers), snapshot);
  nlohmann::json out = s;
  out["recommendations"] = recommend_entry(*graph_, s, k);
  if (session_id) {
    nlohmann::json payload = out;
    payload["session_id"] = *session_id;
    sd_.send("ui", MessageKind::SituationUpdate, std::move(payload));
    settle();
  }
  return out;
}

void Runtime::settle() {
  std::lock_guard lock(pump_mutex_);
  while (true) {
    bool any = false;
    for (const Envelope& e : middleware_.poll()) {
      any = true;
      handle_middleware(e);
    }
    for (const Envelope& e : kg_.poll()) {
      any = true;
      handle_kg(e);
    }
    for (const Envelope& e : ui_.poll()) {
      any = true;
      handle_ui(e);
    }
    if (!any) return;
  }
}

void Runtime::handle_middleware(const Envelope& e) {
  if (e.kind != MessageKind::ValueRequest) return;
  ValueRequest request = e.payload.get<ValueRequest>();
  middleware_.send(e.source, MessageKind::ValueResponse, vitals_.answer(request, config_.clock()));
}

void Runtime::handle_kg(const Envelope& e) {
  if (e.kind != MessageKind::ValueResponse) return;
  ValueResponse response = e.payload.get<ValueResponse>();
  if (!engine_.contains(response.session_id)) return;
  engine_.with_session(response.session_id, [&](Session& s) {
    state(s.id()).request_in_flight = false;
    try {
      s.apply_value(response);
    } catch (const SessionError&) {
      // The session moved on before the answer arrived.
    }
    publish(s);
  });
}

void Runtime::handle_ui(const Envelope& e) {
  const std::string id = e.payload.at("session_id").get<std::string>();
  SessionState& st = state(id);
  switch (e.kind) {
    case MessageKind::PromptUpdate: {
      for (const auto& entry : e.payload.at("entries")) st.log->append("audit", entry);
      const auto& prompt = e.payload.at("prompt");
      if (!prompt.is_null()) st.log->append("prompt", prompt);
      if (e.payload.at("status") == "stopped" && !st.stopped_published) {
        st.stopped_published = true;
        st.log->append("stopped", {{"session_id", id}, {"current", e.payload.at("current")}});
      }
      break;
    }
    case MessageKind::Warning:
      st.log->append("warning", e.payload);
      break;
    case MessageKind::SituationUpdate:
      st.log->append("situation", e.payload);
      break;
    default:
      break;
  }
}

void to_json(nlohmann::json& j, const ApiEvent& e) {
  j = nlohmann::json{{"seq", e.seq}, {"type", e.type}, {"body", e.body}};
}

}  // namespace kirett

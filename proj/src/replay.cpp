#include "kirett/replay.hpp"

#include "kirett/session.hpp"

namespace kirett {
namespace {

ReplayAction action_from_string(const std::string& text) {
  if (text == "choice") return ReplayAction::Choice;
  if (text == "ack") return ReplayAction::Ack;
  if (text == "jump") return ReplayAction::Jump;
  if (text == "stop") return ReplayAction::Stop;
  if (text == "info") return ReplayAction::Info;
  if (text == "decline") return ReplayAction::Decline;
  throw ReplayError("unknown action " + text);
}

}  // namespace

ReplayScript parse_replay_script(const nlohmann::json& doc) {
  ReplayScript script;
  try {
    doc.at("patient_id").get_to(script.patient_id);
    script.entry = doc.value("entry", std::string("start"));
    std::size_t index = 0;
    for (const auto& js : doc.at("steps")) {
      ++index;
      ReplayStep step;
      js.at("expect").get_to(step.expect);
      step.action = action_from_string(js.at("action").get<std::string>());
      step.arg = js.value("arg", std::string{});
      if ((step.action == ReplayAction::Choice || step.action == ReplayAction::Jump) && step.arg.empty()) {
        throw ReplayError("step " + std::to_string(index) + ": action needs an arg");
      }
      script.steps.push_back(std::move(step));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ReplayError(std::string("malformed script: ") + e.what());
  }
  return script;
}

void check_replay_script(const ReplayScript& script, const Graph& graph) {
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const ReplayStep& step = script.steps[i];
    if (!graph.contains(step.expect)) {
      throw ReplayError("step " + std::to_string(i + 1) + ": unknown node " + step.expect);
    }
    if (step.action == ReplayAction::Jump && !graph.contains(step.arg)) {
      throw ReplayError("step " + std::to_string(i + 1) + ": unknown jump target " + step.arg);
    }
  }
}

ReplayResult replay(std::shared_ptr<const Graph> graph, const ReplayScript& script,
                    const std::vector<VitalsRecord>& feed, ReplayOptions options) {
  check_replay_script(script, *graph);
  VitalsStore store(VitalsConfig{options.max_age_ms});
  std::size_t next_row = 0;
  std::int64_t now = 0;

  auto answer_requests = [&](Session& s) {
    while (s.status() == SessionStatus::AwaitingValue && s.outstanding_request()) {
      const ValueRequest request = *s.outstanding_request();
      while (next_row < feed.size()) {
        const VitalsRecord& row = feed[next_row++];
        store.ingest(row);
        now = row.timestamp_ms;
        if (row.patient_id == request.patient_id && row.parameter == request.parameter) break;
      }
      s.apply_value(store.answer(request, now));
    }
  };

  std::optional<Session> session;
  try {
    session.emplace(graph, "replay", script.patient_id, script.entry,
                    SessionOptions{true, [&now] { return now; }});
    answer_requests(*session);
  } catch (const SessionError& e) {
    throw ReplayError(std::string("cannot start session: ") + e.what());
  } catch (const VitalsError& e) {
    throw ReplayError(std::string("vitals feed: ") + e.what());
  }

  ReplayResult result;
  Session& s = *session;
  for (std::size_t i = 0; i < script.steps.size() && result.ok; ++i) {
    const ReplayStep& step = script.steps[i];
    auto diverge = [&](const std::string& why) {
      result.ok = false;
      result.failed_step = i + 1;
      result.message = "step " + std::to_string(i + 1) + ": " + why;
    };
    if (s.status() == SessionStatus::Stopped) {
      diverge("expected " + step.expect + ", session already stopped at " + s.current());
      break;
    }
    if (s.current() != step.expect) {
      diverge("expected " + step.expect + ", session is at " + s.current());
      break;
    }
    try {
      switch (step.action) {
        case ReplayAction::Choice:
          s.submit_decision(step.arg);
          break;
        case ReplayAction::Ack:
          if (s.status() == SessionStatus::AwaitingPathConfirmation ||
              (s.pending() && s.pending()->kind == PromptKind::ValueConfirmation)) {
            s.confirm(true);
          } else {
            s.acknowledge();
          }
          break;
        case ReplayAction::Jump:
          s.jump(step.arg);
          break;
        case ReplayAction::Stop:
          s.stop();
          break;
        case ReplayAction::Info:
          s.request_additional_info();
          break;
        case ReplayAction::Decline:
          s.confirm(false);
          break;
      }
      answer_requests(s);
    } catch (const SessionError& e) {
      diverge(e.what());
    } catch (const VitalsError& e) {
      throw ReplayError(std::string("vitals feed: ") + e.what());
    }
  }
  result.report = s.export_audit();
  result.transcript = render_transcript(result.report);
  return result;
}

}  // namespace kirett

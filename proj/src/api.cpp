#include "kirett/api.hpp"

#include <charconv>

#include "httplib.h"
#include "kirett/validator.hpp"

namespace kirett {
namespace {

using nlohmann::json;

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string error_code(const std::exception& e) {
  if (auto* s = dynamic_cast<const SessionError*>(&e)) return std::string(to_string(s->code()));
  if (auto* v = dynamic_cast<const VitalsError*>(&e)) {
    return v->code() == VitalsError::Code::NonMonotone ? "non_monotone" : "malformed";
  }
  if (auto* s = dynamic_cast<const SituationError*>(&e)) {
    switch (s->code()) {
      case SituationError::Code::OutOfDomain:
        return "out_of_domain";
      case SituationError::Code::UnknownGroup:
        return "unknown_group";
      case SituationError::Code::EmptyScore:
        return "empty_score";
      case SituationError::Code::Malformed:
        return "malformed";
    }
  }
  if (dynamic_cast<const BadRequest*>(&e) || dynamic_cast<const json::exception*>(&e)) return "bad_request";
  return "internal";
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw BadRequest("request body must be a JSON object");
  return body;
}

std::string string_field(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_string()) {
    throw BadRequest(std::string("missing string field ") + key);
  }
  return body.at(key).get<std::string>();
}

std::uint64_t parse_cursor(const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) throw BadRequest("invalid event cursor " + text);
  return v;
}

json node_ref(const Node* n) { return {{"id", n->id}, {"name", n->name}}; }

std::string sse_frame(const ApiEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + json(e).dump() + "\n\n";
}

}  // namespace

int http_status(const std::exception& e) {
  if (auto* s = dynamic_cast<const SessionError*>(&e)) {
    switch (s->code()) {
      case SessionError::Code::UnknownSession:
        return 404;
      case SessionError::Code::UnknownNode:
      case SessionError::Code::DisallowedEntry:
      case SessionError::Code::NotJumpReachable:
        return 422;
      case SessionError::Code::Structural:
        return 500;
      default:
        return 409;
    }
  }
  if (auto* v = dynamic_cast<const VitalsError*>(&e)) {
    return v->code() == VitalsError::Code::NonMonotone ? 409 : 400;
  }
  if (auto* s = dynamic_cast<const SituationError*>(&e)) {
    return s->code() == SituationError::Code::UnknownGroup || s->code() == SituationError::Code::EmptyScore ? 422 : 400;
  }
  if (dynamic_cast<const BadRequest*>(&e) || dynamic_cast<const json::exception*>(&e)) return 400;
  return 500;
}

struct ApiService::Impl {
  httplib::Server server;
};

ApiService::ApiService(std::shared_ptr<Runtime> runtime, ApiOptions options)
    : runtime_(std::move(runtime)), impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  Runtime& rt = *runtime_;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      reply(res, http_status(e), {{"error", error_code(e)}, {"message", e.what()}});
    }
  });

  srv.Post("/sessions", [&rt](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    std::string entry = body.contains("entry") ? string_field(body, "entry") : "start";
    bool simulation = body.value("simulation", false);
    reply(res, 201, rt.create_session(string_field(body, "patient_id"), entry, simulation));
  });
  srv.Get("/sessions", [&rt](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const std::string& id : rt.engine().list()) out.push_back(rt.summary(id));
    reply(res, 200, {{"sessions", out}});
  });
  srv.Get("/sessions/:id/prompt", [&rt](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, rt.summary(req.path_params.at("id")));
  });
  srv.Post("/sessions/:id/decision", [&rt](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    reply(res, 200, rt.decide(req.path_params.at("id"), string_field(body, "choice")));
  });
  srv.Post("/sessions/:id/confirm", [&rt](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    if (body.contains("accept") && !body.at("accept").is_boolean()) throw BadRequest("accept must be a boolean");
    reply(res, 200, rt.confirm(req.path_params.at("id"), body.value("accept", true)));
  });
  srv.Post("/sessions/:id/jump", [&rt](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    reply(res, 200, rt.jump(req.path_params.at("id"), string_field(body, "target")));
  });
  srv.Get("/sessions/:id/info", [&rt](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, {{"items", rt.info(req.path_params.at("id"))}});
  });
  srv.Post("/sessions/:id/stop", [&rt](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, rt.stop(req.path_params.at("id")));
  });
  srv.Get("/sessions/:id/audit", [&rt](const httplib::Request& req, httplib::Response& res) {
    reply(res, 200, rt.audit(req.path_params.at("id")));
  });

  srv.Get("/sessions/:id/events", [&rt, options](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    std::uint64_t cursor = 0;
    if (req.has_param("after")) {
      cursor = parse_cursor(req.get_param_value("after"));
    } else if (req.has_header("Last-Event-ID")) {
      cursor = parse_cursor(req.get_header_value("Last-Event-ID"));
    }
    std::shared_ptr<EventLog> log;
    try {
      log = rt.events(id);
    } catch (const SessionError& e) {
      json body{{"error", to_string(e.code())}, {"message", e.what()}};
      res.set_content("event: error\ndata: " + body.dump() + "\n\n", "text/event-stream");
      return;
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [log, cursor, keepalive = options.keepalive](std::size_t, httplib::DataSink& sink) mutable {
          auto events = log->wait_after(cursor, keepalive);
          if (events.empty()) {
            const auto done = log->closed() || [&] {
              // The stream ends once the stopped event has been delivered.
              for (const ApiEvent& e : log->after(0)) {
                if (e.type == "stopped" && e.seq <= cursor) return true;
              }
              return false;
            }();
            if (done) {
              sink.done();
              return true;
            }
            static const std::string ping = ": keep-alive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          for (const ApiEvent& e : events) {
            std::string frame = sse_frame(e);
            if (!sink.write(frame.data(), frame.size())) return false;
            cursor = e.seq;
            if (e.type == "stopped") {
              sink.done();
              return true;
            }
          }
          return true;
        });
  });

  srv.Get("/graph/stats", [&rt](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, stats(rt.graph()));
  });
  srv.Get("/graph/entries", [&rt](const httplib::Request&, httplib::Response& res) {
    EntryPoints ep = entry_points(rt.graph());
    json out{{"start", ep.start}, {"bprs", json::array()}, {"saas", json::array()}, {"disease_groups", json::array()}};
    for (const Node* n : ep.bprs) out["bprs"].push_back(node_ref(n));
    for (const Node* n : ep.saas) out["saas"].push_back(node_ref(n));
    for (const Node* n : ep.disease_groups) out["disease_groups"].push_back(node_ref(n));
    reply(res, 200, out);
  });

  srv.Post("/vitals", [&rt](const httplib::Request& req, httplib::Response& res) {
    std::vector<VitalsRecord> records;
    if (req.get_header_value("Content-Type").rfind("text/csv", 0) == 0) {
      records = parse_vitals_csv(req.body);
    } else {
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) throw BadRequest("body must be JSON or text/csv");
      if (body.is_array()) {
        records = body.get<std::vector<VitalsRecord>>();
      } else {
        records.push_back(body.get<VitalsRecord>());
      }
    }
    std::size_t ingested = 0;
    try {
      for (const VitalsRecord& r : records) {
        rt.ingest(r);
        ++ingested;
      }
    } catch (const VitalsError& e) {
      reply(res, http_status(e), {{"error", error_code(e)}, {"message", e.what()}, {"ingested", ingested}});
      return;
    }
    reply(res, 200, {{"ingested", ingested}, {"record_count", rt.vitals().record_count()}});
  });
  srv.Get("/vitals/stats", [&rt](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"record_count", rt.vitals().record_count()}, {"max_age_ms", rt.vitals().config().max_age_ms}});
  });

  srv.Post("/sd/questionnaire", [&rt](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    if (!body.contains("answers")) throw BadRequest("missing field answers");
    std::optional<std::string> patient, session;
    if (body.contains("patient_id")) patient = string_field(body, "patient_id");
    if (body.contains("session_id")) session = string_field(body, "session_id");
    std::size_t k = body.value("k", std::size_t{3});
    reply(res, 200, rt.situation(body.at("answers"), body.value("vitals", json()), patient, session, k));
  });
}

ApiService::~ApiService() { stop(); }

int ApiService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void ApiService::listen() { impl_->server.listen_after_bind(); }

void ApiService::start() {
  thread_ = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
}

void ApiService::stop() {
  runtime_->shutdown();
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace kirett

// Acceptance gate: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "kirett/api.hpp"
#include "kirett/graph.hpp"
#include "kirett/replay.hpp"
#include "kirett/runtime.hpp"
#include "kirett/validator.hpp"
#include "mutations.hpp"
#include "paths.hpp"
#include "random_graph.hpp"
#include "sse.hpp"

using namespace kirett;
using nlohmann::json;
using kirett::testing::fixture_path;
using kirett::testing::read_text;

namespace {

/// Failed expectation inside a criterion.
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& what) {
  if (!condition) throw Failure(what);
}

std::shared_ptr<const Graph> corpus() {
  static auto g = std::make_shared<const Graph>(load_graph_file(kirett::testing::corpus_path()));
  return g;
}

json manifest() { return json::parse(read_text(kirett::testing::source_path("corpus/kirett_sample.manifest.json"))); }

ReplayScript script(const std::string& name) {
  return parse_replay_script(json::parse(read_text(fixture_path(name))));
}

std::vector<VitalsRecord> feed(const std::string& name) { return parse_vitals_csv(read_text(fixture_path(name))); }

json without_timestamps(json entries) {
  for (auto& e : entries) e.erase("timestamp_ms");
  return entries;
}

void corpus_integrity() {
  const Graph& g = *corpus();
  GraphStats s = stats(g);
  expect(s.bpr_count >= 3, "fewer than 3 BPR");
  expect(s.saa_count >= 2, "fewer than 2 SAA");
  expect(s.node_count >= 60, "fewer than 60 nodes");
  expect(s.edge_count >= 80, "fewer than 80 edges");
  expect(s.nodes_by_kind.at("Start") == 1, "Start count is not 1");
  expect(s.nodes_by_kind.at("Stop") >= 2, "fewer than 2 Stop nodes");
  expect(s.nodes_by_kind.at("JumpBPR") + s.nodes_by_kind.at("JumpSAA") + s.nodes_by_kind.at("JumpDiseaseGroup") == 3,
         "jump hub count is not 3");
  expect(s.nodes_by_kind.at("DiseaseGroup") >= 2, "fewer than 2 disease groups");
  expect(!has_errors(validate(g)), "validate reports errors");
  expect(json(s) == manifest(), "stats differ from the manifest");
}

void mutation_suite() {
  const Graph& g = *corpus();
  for (const auto& m : kirett::testing::corpus_mutations()) {
    auto checks = kirett::testing::error_checks(validate(kirett::testing::mutate(g, m)));
    expect(checks == std::vector<Check>{m.check}, "mutation \"" + m.description + "\" gave other codes");
  }
  std::mt19937_64 rng(31337);
  for (int i = 0; i < 100; ++i) {
    Graph r = kirett::testing::random_graph(rng, {.max_nodes = 60, .rich_properties = false});
    auto expected = kirett::testing::bfs_unreachable_oracle({r.nodes().begin(), r.nodes().end()},
                                                            {r.edges().begin(), r.edges().end()});
    std::set<std::string> flagged;
    for (const Finding& f : validate(r)) {
      if (f.check == Check::WeakConnectivity) flagged.insert(f.node);
    }
    expect(flagged == std::set<std::string>(expected.begin(), expected.end()), "V3 disagrees with BFS on graph " + std::to_string(i));
  }
}

void hypoglycemia_replay() {
  auto r = replay(corpus(), script("hypo_script.json"), feed("hypo_vitals.csv"));
  expect(r.ok, "replay diverged: " + r.message);
  expect(r.transcript == read_text(fixture_path("hypo_transcript.txt")), "transcript differs from fixture");
  auto b = replay(corpus(), script("hypo_script.json"), feed("hypo_vitals_boundary60.csv"));
  expect(b.ok, "boundary replay diverged: " + b.message);
  expect(b.transcript == read_text(fixture_path("hypo_transcript_boundary60.txt")), "boundary transcript differs");
  expect(b.report["entries"][2]["vitals"]["in_range"] == true, "reading 60 is not in range");
  expect(b.report["entries"][3]["target"] == "hypo_awake", "reading 60 did not take the hypoglycemia branch");
}

void priority_ordering() {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    Graph g = kirett::testing::random_priority_node(rng);
    std::vector<Edge> out;
    for (std::size_t e : g.out_edges("n")) out.push_back(g.edges()[e]);
    auto expected = kirett::testing::priority_order_oracle(out);
    auto actual = out_edges_ordered(g, "n");
    expect(actual.size() == expected.size(), "ordered edge count differs");
    bool seen_rn = false;
    for (std::size_t k = 0; k < actual.size(); ++k) {
      expect(*actual[k].edge == *expected[k], "order differs from the oracle at node " + std::to_string(i));
      const bool is_rn = actual[k].edge->rank && actual[k].edge->rank->is_last();
      expect(!(seen_rn && actual[k].edge->kind == EdgeKind::Priority), "priority edge after Rn");
      seen_rn = seen_rn || is_rn;
    }
  }
}

using Move = std::function<void(Session&)>;

Move value(double reading) {
  return [reading](Session& s) {
    const auto& r = *s.outstanding_request();
    s.apply_value({s.id(), s.patient_id(), r.node_id, r.parameter, reading, "u", 1, Freshness::Fresh, std::nullopt});
  };
}
Move choose(std::string key) {
  return [key](Session& s) { s.submit_decision(key); };
}
Move confirm() {
  return [](Session& s) { s.confirm(true); };
}
Move info() {
  return [](Session& s) { s.request_additional_info(); };
}

struct Script {
  std::string patient;
  std::string entry;
  std::vector<Move> moves;
};

std::vector<Script> mci_scripts() {
  return {
      {"p1", "bpr_hypo", {value(55), confirm(), choose("yes"), info(), choose("R1"), value(90), confirm(), choose("R1")}},
      {"p2", "bpr_asthma", {value(88), confirm(), choose("R1"), choose("R2"), choose("R1"), choose("no"), choose("R1"), choose("R1")}},
      {"p3", "start", {choose("R1"), choose("yes"), choose("yes"), value(97), confirm(), value(80), confirm(), value(90),
                       confirm(), info(), choose("R1"), choose("R1"), choose("no"), choose("R1")}},
  };
}

Clock counter() {
  auto t = std::make_shared<std::int64_t>(0);
  return [t] { return ++*t; };
}

json normalized(SessionEngine& engine, const std::string& id) {
  json j = engine.snapshot(id).export_audit();
  j["entries"] = without_timestamps(j["entries"]);
  j.erase("session_id");
  return j;
}

void session_isolation() {
  auto scripts = mci_scripts();
  std::vector<json> solo;
  for (const Script& sc : scripts) {
    SessionEngine engine(corpus(), counter());
    auto id = engine.create(sc.patient, sc.entry);
    for (const Move& m : sc.moves) engine.with_session(id, m);
    solo.push_back(normalized(engine, id));
    expect(engine.snapshot(id).status() == SessionStatus::Stopped, sc.entry + " script did not finish");
  }

  SessionEngine engine(corpus(), counter());
  std::vector<std::string> ids;
  for (const Script& sc : scripts) ids.push_back(engine.create(sc.patient, sc.entry));
  for (std::size_t step = 0;; ++step) {
    bool any = false;
    for (std::size_t i = 0; i < scripts.size(); ++i) {
      if (step < scripts[i].moves.size()) {
        engine.with_session(ids[i], scripts[i].moves[step]);
        any = true;
      }
    }
    if (!any) break;
  }
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    expect(normalized(engine, ids[i]) == solo[i], "interleaved audit of " + ids[i] + " differs from its solo run");
  }

  SessionEngine mid(corpus(), counter());
  std::vector<std::string> mids;
  for (const Script& sc : scripts) {
    mids.push_back(mid.create(sc.patient, sc.entry));
    for (std::size_t k = 0; k < 3; ++k) mid.with_session(mids.back(), sc.moves[k]);
  }
  auto b = mid.snapshot(mids[1]);
  auto c = mid.snapshot(mids[2]);
  mid.stop(mids[0]);
  expect(mid.snapshot(mids[0]).status() == SessionStatus::Stopped, "stop did not stop");
  for (auto* before : {&b, &c}) {
    auto after = mid.snapshot(before->id());
    expect(after.status() == before->status() && after.current() == before->current() &&
               after.audit() == before->audit(),
           "stopping one session changed " + before->id());
  }
}

void bus_properties() {
  MessageBus bus;
  auto kg = bus.register_module("kg");
  std::vector<std::thread> threads;
  for (int s = 0; s < 100; ++s) {
    threads.emplace_back([&bus, s] {
      for (int i = 0; i < 100; ++i) {
        bus.send("sender" + std::to_string(s), "kg", MessageKind::PromptUpdate, {{"session_id", "x"}, {"n", i}});
      }
    });
  }
  for (auto& t : threads) t.join();
  auto all = kg.poll();
  expect(all.size() == 10000, "drained " + std::to_string(all.size()) + " messages");
  std::multiset<std::pair<std::string, std::uint64_t>> got;
  std::multiset<std::pair<std::string, std::uint64_t>> sent;
  std::map<std::string, int> last;
  for (const Envelope& e : all) {
    got.insert({e.source, e.id});
    auto [it, fresh] = last.try_emplace(e.source, -1);
    expect(e.payload["n"].get<int>() == it->second + 1, "per-sender order broken for " + e.source);
    it->second = e.payload["n"].get<int>();
  }
  for (int s = 0; s < 100; ++s) {
    for (std::uint64_t i = 1; i <= 100; ++i) sent.insert({"sender" + std::to_string(s), i});
  }
  expect(got == sent, "id multisets differ");

  Runtime rt(corpus(), {300'000, [] { return std::int64_t{100'000}; }});
  std::mutex m;
  int requests = 0, responses = 0;
  std::string session;
  rt.bus().set_observer([&](const Envelope& e) {
    std::lock_guard lock(m);
    if (e.kind == MessageKind::ValueRequest) ++requests;
    if (e.kind == MessageKind::ValueResponse) {
      ++responses;
      session = e.payload["session_id"];
    }
  });
  rt.ingest({"p1", "BLOOD_SUGAR", 55, "mg/dl", 60'000});
  auto id = rt.create_session("p1", "bpr_hypo")["session_id"].get<std::string>();
  expect(requests == 1 && responses == 1, "value round trip produced " + std::to_string(requests) + " requests and " +
                                              std::to_string(responses) + " responses");
  expect(session == id, "response names another session");
}

void round_trip() {
  const std::string text = read_text(kirett::testing::corpus_path());
  Graph g = parse_graph(text);
  expect(serialize_graph(g) == text, "corpus does not serialize to its own bytes");
  expect(parse_graph(serialize_graph(g)) == g, "corpus round trip changes the graph");
  std::mt19937_64 rng(4242);
  for (int i = 0; i < 100; ++i) {
    Graph r = kirett::testing::random_graph(rng, {.max_nodes = 200});
    const std::string once = serialize_graph(r);
    Graph back = parse_graph(once);
    expect(back == r, "random graph " + std::to_string(i) + " changed on parse");
    expect(serialize_graph(back) == once, "random graph " + std::to_string(i) + " is not a fixed point");
  }
}

void api_parity() {
  auto now = std::make_shared<std::atomic<std::int64_t>>(60'000);
  auto runtime = std::make_shared<Runtime>(corpus(), RuntimeConfig{300'000, [now] { return now->load(); }});
  ApiService service(runtime, ApiOptions{std::chrono::milliseconds(50)});
  const int port = service.bind("127.0.0.1", 0);
  expect(port > 0, "cannot bind");
  service.start();
  httplib::Client c("127.0.0.1", port);
  auto post = [&](const std::string& path, const json& body) {
    auto res = c.Post(path, body.dump(), "application/json");
    expect(res && res->status / 100 == 2, "POST " + path + " failed");
    return json::parse(res->body);
  };
  auto vitals = [&](double reading, std::int64_t t) {
    now->store(t);
    post("/vitals", {{"patient_id", "p1"}, {"parameter", "BLOOD_SUGAR"}, {"reading", reading}, {"unit", "mg/dl"}, {"timestamp_ms", t}});
  };

  vitals(55, 60'000);
  const std::string id = post("/sessions", {{"patient_id", "p1"}, {"entry", "bpr_hypo"}})["session_id"];
  const std::string base = "/sessions/" + id;
  post(base + "/confirm", json::object());
  post(base + "/decision", {{"choice", "yes"}});
  auto first = kirett::testing::read_sse(port, base + "/events", 3);
  vitals(90, 600'000);
  post(base + "/decision", {{"choice", "R1"}});
  post(base + "/confirm", json::object());
  post(base + "/decision", {{"choice", "R1"}});
  auto rest = kirett::testing::read_sse(port, base + "/events", SIZE_MAX,
                                        {{"Last-Event-ID", std::to_string(first.empty() ? 0 : first.back().id)}});
  auto res = c.Get(base + "/audit");
  expect(res && res->status == 200, "GET audit failed");
  json http_audit = json::parse(res->body);
  service.stop();

  auto engine = replay(corpus(), script("hypo_script.json"), feed("hypo_vitals.csv"));
  expect(engine.ok, "engine replay diverged");
  expect(without_timestamps(http_audit["entries"]) == without_timestamps(engine.report["entries"]),
         "HTTP audit differs from the engine replay");
  expect(render_transcript(http_audit) == engine.transcript, "HTTP transcript differs");

  expect(first.size() == 3, "first connection got " + std::to_string(first.size()) + " events");
  std::uint64_t expected_id = 1;
  for (const auto* batch : {&first, &rest}) {
    for (const auto& e : *batch) {
      expect(e.id == expected_id, "event id " + std::to_string(e.id) + " where " + std::to_string(expected_id) + " was due");
      ++expected_id;
    }
  }
  expect(!rest.empty() && rest.back().type == "stopped", "stream did not end with stopped");
  expect(expected_id - 1 == runtime->events(id)->last_seq(), "events missing after reconnect");
}

struct Criterion {
  std::string name;
  std::string tolerance;
  std::optional<double> limit_s;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"corpus-integrity", "exact stats match, zero errors", 1.0, corpus_integrity},
      {"validator-mutations", "exact code set per mutation, 100/100 BFS agreements", 10.0, mutation_suite},
      {"hypoglycemia-replay", "byte-equal transcripts, bound inclusive at 60", 1.0, hypoglycemia_replay},
      {"priority-ordering", "1000/1000 nodes equal the oracle, Rn last", 5.0, priority_ordering},
      {"session-isolation", "identical audits modulo timestamps", std::nullopt, session_isolation},
      {"bus-properties", "zero loss or duplication, FIFO per sender, 1:1 value round trip", 10.0, bus_properties},
      {"round-trip", "byte-identical fixed point on corpus and 100 random graphs", std::nullopt, round_trip},
      {"api-parity", "identical audit modulo timestamps, gapless ids across one reconnect", std::nullopt, api_parity},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    std::string error;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && c.limit_s && took > *c.limit_s) error = "exceeded runtime limit";
    const bool ok = error.empty();
    failed += !ok;
    char timing[96];
    if (c.limit_s) {
      std::snprintf(timing, sizeof timing, "%.3f s of %.0f s", took, *c.limit_s);
    } else {
      std::snprintf(timing, sizeof timing, "%.3f s, no limit", took);
    }
    std::printf("%s %-20s tolerance: %s; runtime: %s%s%s\n", ok ? "PASS" : "FAIL", c.name.c_str(), c.tolerance.c_str(),
                timing, ok ? "" : "; ", error.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#include <random>

#include "doctest.h"
#include "kirett/session.hpp"
#include "paths.hpp"

using namespace kirett;
using Code = SessionError::Code;

namespace {

std::shared_ptr<const Graph> corpus() {
  static auto g = std::make_shared<const Graph>(load_graph_file(kirett::testing::corpus_path()));
  return g;
}

Clock counter(std::int64_t start = 1000) {
  auto t = std::make_shared<std::int64_t>(start);
  return [t] { return (*t)++; };
}

Session make(std::string_view entry, bool simulation = false) {
  return Session(corpus(), "s1", "p1", entry, {simulation, counter()});
}

ValueResponse reading(const Session& s, double value, Freshness f = Freshness::Fresh) {
  const auto& r = *s.outstanding_request();
  return {s.id(), s.patient_id(), r.node_id, r.parameter, value, "mg/dl", 60000, f, std::nullopt};
}

ValueResponse unavailable(const Session& s) {
  const auto& r = *s.outstanding_request();
  return {s.id(), s.patient_id(), r.node_id, r.parameter, std::nullopt, std::nullopt, std::nullopt,
          Freshness::Unavailable, std::nullopt};
}

template <typename F>
Code error_of(F&& f) {
  try {
    f();
  } catch (const SessionError& e) {
    return e.code();
  }
  FAIL("no SessionError");
  return Code::Structural;
}

std::vector<std::string> targets(const Prompt& p) {
  std::vector<std::string> out;
  for (const auto& o : p.options) out.push_back(o.target);
  return out;
}

std::vector<std::string> ordered_targets(const Graph& g, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& oe : out_edges_ordered(g, id)) out.push_back(oe.target->id);
  return out;
}

/// Audit without timestamps.
nlohmann::json normalized(const Session& s) {
  nlohmann::json j = s.export_audit();
  for (auto& e : j["entries"]) e.erase("timestamp_ms");
  return j;
}

/// One random but valid operator move. Returns false once the session is stopped.
bool random_move(Session& s, std::mt19937_64& rng) {
  if (s.status() == SessionStatus::Stopped) return false;
  if (s.status() == SessionStatus::AwaitingValue) {
    const int pick = static_cast<int>(rng() % 4);
    if (pick == 0) {
      s.apply_value(unavailable(s));
    } else {
      s.apply_value(reading(s, static_cast<double>(rng() % 300)));
    }
    return true;
  }
  const Prompt& p = *s.pending();
  switch (p.kind) {
    case PromptKind::PathChangeConfirmation:
    case PromptKind::ValueConfirmation:
      s.confirm(rng() % 3 != 0);
      return true;
    default:
      break;
  }
  const int roll = static_cast<int>(rng() % 20);
  if (roll == 0) {
    s.request_additional_info();
  } else if (roll == 1) {
    static const std::vector<std::string> bprs{"bpr_acs", "bpr_hypo", "bpr_hyper", "bpr_asthma", "saa_iv"};
    s.jump(bprs[rng() % bprs.size()]);
  } else {
    s.submit_decision(p.options[rng() % p.options.size()].key);
  }
  return true;
}

}  // namespace

TEST_CASE("create at Start offers cABCDE and the questionnaire") {
  Session s = make("start");
  CHECK(s.current() == "start");
  CHECK(s.status() == SessionStatus::AwaitingDecision);
  REQUIRE(s.pending());
  CHECK(s.pending()->kind == PromptKind::MultiChoice);
  CHECK(targets(*s.pending()) == std::vector<std::string>{"cabcde_c", "sd_questionnaire"});
  REQUIRE(s.audit().size() == 1);
  CHECK(s.audit()[0].action == AuditAction::Create);
  CHECK(make("start").export_audit()["entries"].size() == 1);
}

TEST_CASE("create at a BPR auto-advances through the header") {
  Session s = make("bpr_hypo");
  CHECK(s.current() == "hypo_bs_check");
  CHECK(s.status() == SessionStatus::AwaitingValue);
  CHECK(s.current_path_label() == "hypoglykaemie");
  REQUIRE(s.audit().size() == 2);
  CHECK(s.audit()[1].action == AuditAction::Auto);
  CHECK(s.audit()[1].node == "bpr_hypo");
  CHECK(s.audit()[1].target == "hypo_bs_check");
  const auto& r = *s.outstanding_request();
  CHECK(r.parameter == "BLOOD_SUGAR");
  CHECK(r.max == 60);
  CHECK_FALSE(r.min);
  CHECK(std::holds_alternative<ValueRequest>(s.step()));

  Session dg = make("dg_metabolic");
  CHECK(dg.current() == "hypo_bs_check");
  CHECK(dg.audit().size() == 3);
}

TEST_CASE("disallowed entries") {
  CHECK(error_of([] { make("hypo_oral_glucose"); }) == Code::DisallowedEntry);
  CHECK(error_of([] { make("saa_iv"); }) == Code::DisallowedEntry);
  CHECK(error_of([] { make("nope"); }) == Code::UnknownNode);
}

TEST_CASE("prompt kinds by node kind") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 55));
  s.confirm(true);
  REQUIRE(s.current() == "hypo_awake");
  CHECK(s.pending()->kind == PromptKind::Binary);
  CHECK(s.pending()->options.size() == 2);
  CHECK(s.pending()->options[0].key == "yes");
  CHECK(s.pending()->options[1].key == "no");

  s.submit_decision("no");
  CHECK(s.current() == "hypo_iv_access");
  CHECK(s.pending()->kind == PromptKind::Acknowledge);
  CHECK(s.pending()->info_available);
  REQUIRE(s.pending()->procedures.size() == 1);
  CHECK(s.pending()->procedures[0].id == "saa_iv");
  CHECK_FALSE(s.pending()->invasive);
  s.acknowledge();
  CHECK(s.current() == "hypo_glucose_iv");
  CHECK(s.pending()->invasive);

  Session a = make("bpr_asthma");
  a.apply_value(reading(a, 95));
  a.confirm(true);
  REQUIRE(a.current() == "asthma_auscultation");
  CHECK(a.pending()->kind == PromptKind::MultiChoice);
  CHECK(targets(*a.pending()) == std::vector<std::string>{"asthma_obstructive", "asthma_crackles", "asthma_unclear"});
  CHECK(a.pending()->options[2].key == "Rn");
}

TEST_CASE("choices") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 55));
  s.confirm(true);
  auto before = s.audit().size();
  CHECK(error_of([&] { s.submit_decision("maybe"); }) == Code::UnknownChoice);
  CHECK(s.current() == "hypo_awake");
  CHECK(s.audit().size() == before);
  s.submit_decision("yes");
  CHECK(s.current() == "hypo_oral_glucose");
  CHECK(s.audit().back().action == AuditAction::Choice);
  CHECK(s.audit().back().detail == "yes");

  Session v = make("bpr_hypo");
  CHECK(error_of([&] { v.submit_decision("yes"); }) == Code::NotAwaitingDecision);
  CHECK(error_of([&] { v.acknowledge(); }) == Code::NotAwaitingDecision);
  CHECK(error_of([&] { v.confirm(true); }) == Code::NoPendingConfirmation);
}

TEST_CASE("hypoglycemia trace matches the transcript fixture") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 55));
  CHECK(s.pending()->kind == PromptKind::ValueConfirmation);
  CHECK(s.pending()->suggested == "yes");
  CHECK(s.pending()->attached_value->in_range == true);
  // Suggestions never execute on their own.
  CHECK(s.current() == "hypo_bs_check");
  s.confirm(true);
  s.submit_decision("yes");
  s.acknowledge();
  REQUIRE(s.current() == "hypo_bs_recheck");
  s.apply_value(reading(s, 90));
  CHECK(s.pending()->suggested == "no");
  CHECK(s.pending()->attached_value->in_range == false);
  s.confirm(true);
  CHECK(s.current() == "hypo_monitor");
  s.acknowledge();
  CHECK(s.status() == SessionStatus::Stopped);
  CHECK(s.current() == "stop_handover");
  CHECK(render_transcript(s.export_audit()) ==
        kirett::testing::read_text(kirett::testing::fixture_path("hypo_transcript.txt")));
}

TEST_CASE("boundary reading 60 takes the hypoglycemia branch") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 60));
  CHECK(s.pending()->attached_value->in_range == true);
  CHECK(s.pending()->suggested == "yes");
  s.apply_value(reading(s, 61));
  CHECK(s.pending()->suggested == "no");
}

TEST_CASE("simulation confirms suggestions") {
  Session s = make("bpr_hypo", true);
  s.apply_value(reading(s, 55));
  CHECK(s.current() == "hypo_awake");
  CHECK(s.audit().back().action == AuditAction::ConfirmSuggestion);
}

TEST_CASE("declining a suggestion leaves a manual binary decision") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 55));
  s.confirm(false);
  CHECK(s.current() == "hypo_bs_check");
  CHECK(s.pending()->kind == PromptKind::Binary);
  CHECK_FALSE(s.pending()->suggested);
  CHECK(s.pending()->attached_value);
  CHECK(s.audit().back().action == AuditAction::DeclineSuggestion);
  CHECK(error_of([&] { s.confirm(true); }) == Code::NoPendingConfirmation);
  s.submit_decision("no");
  CHECK(s.current() == "hypo_other");
}

TEST_CASE("unavailable values degrade to a manual decision") {
  Session s = make("bpr_hypo");
  s.apply_value(unavailable(s));
  CHECK(s.status() == SessionStatus::AwaitingDecision);
  CHECK(s.pending()->kind == PromptKind::Binary);
  CHECK_FALSE(s.pending()->attached_value);
  CHECK(s.audit().back().detail == "BLOOD_SUGAR unavailable");
  // A later reading upgrades the prompt; a later outage does not withdraw it.
  s.apply_value(reading(s, 40));
  CHECK(s.pending()->kind == PromptKind::ValueConfirmation);
  auto entries = s.audit().size();
  s.apply_value(unavailable(s));
  CHECK(s.pending()->kind == PromptKind::ValueConfirmation);
  CHECK(s.audit().size() == entries);
  s.apply_value(reading(s, 45, Freshness::Stale));
  CHECK(s.pending()->attached_value->freshness == Freshness::Stale);
  CHECK(s.pending()->attached_value->in_range == true);
}

TEST_CASE("value errors") {
  Session s = make("bpr_hypo");
  auto r = reading(s, 55);
  r.parameter = "PULSE";
  CHECK(error_of([&] { s.apply_value(r); }) == Code::ParameterMismatch);
  CHECK(s.status() == SessionStatus::AwaitingValue);
  Session t = make("start");
  ValueResponse any{"s1", "p1", "", "BLOOD_SUGAR", 55, "mg/dl", 0, Freshness::Fresh, std::nullopt};
  CHECK(error_of([&] { t.apply_value(any); }) == Code::NotAwaitingValue);
}

TEST_CASE("unbounded value nodes attach the reading without a suggestion") {
  auto g = std::make_shared<const Graph>(Graph::build(
      {"t", "1"},
      {{"s", "S", NodeKind::Start}, {"d", "D", NodeKind::DecisionYN, std::string("x")}, {"e", "E", NodeKind::Stop}},
      {{"s", "d", EdgeKind::Priority, PriorityRank::numbered(1)}, {"d", "e", EdgeKind::Yes}, {"d", "e", EdgeKind::No}}));
  auto nodes = std::vector<Node>(g->nodes().begin(), g->nodes().end());
  nodes[1].d_type = "vital";
  nodes[1].value = "PULSE";
  auto built = std::make_shared<const Graph>(Graph::build(g->meta(), nodes, {g->edges().begin(), g->edges().end()}));
  Session s(built, "s1", "p1", "start", {false, counter()});
  s.submit_decision("R1");
  REQUIRE(s.status() == SessionStatus::AwaitingValue);
  s.apply_value({"s1", "p1", "d", "PULSE", 80, "/min", 1, Freshness::Fresh, std::nullopt});
  CHECK(s.pending()->kind == PromptKind::Binary);
  CHECK_FALSE(s.pending()->suggested);
  CHECK(s.pending()->attached_value->reading == 80);
  CHECK_FALSE(s.pending()->attached_value->in_range);
}

TEST_CASE("path change needs confirmation") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 100));
  s.confirm(true);
  REQUIRE(s.current() == "hypo_other");
  s.jump("bpr_hyper");
  CHECK(s.status() == SessionStatus::AwaitingPathConfirmation);
  CHECK(s.current() == "hypo_other");
  CHECK(s.pending()->kind == PromptKind::PathChangeConfirmation);
  CHECK(error_of([&] { s.acknowledge(); }) == Code::ConfirmationPending);
  CHECK(error_of([&] { s.jump("bpr_acs"); }) == Code::ConfirmationPending);

  s.confirm(false);
  CHECK(s.current() == "hypo_other");
  CHECK(s.status() == SessionStatus::AwaitingDecision);
  CHECK(s.pending()->kind == PromptKind::Acknowledge);
  CHECK(s.audit().back().action == AuditAction::PathDeclined);

  s.jump("bpr_hyper");
  s.submit_decision("yes");
  CHECK(s.current() == "hyper_bs_check");
  CHECK(s.current_path_label() == "hyperglykaemie");
  auto n = s.audit().size();
  CHECK(s.audit()[n - 3].action == AuditAction::PathConfirmed);
  CHECK(s.audit()[n - 3].detail == "from=hypoglykaemie to=hyperglykaemie");
  CHECK(s.audit()[n - 2].action == AuditAction::Jump);
  CHECK(s.audit()[n - 2].detail == "bpr");
  CHECK(s.audit()[n - 1].action == AuditAction::Auto);
}

TEST_CASE("choice crossing into another path asks first") {
  // cabcde_d yes leads into the hypoglycemia BPR.
  Session s = make("start");
  s.submit_decision("R1");
  s.submit_decision("yes");
  s.submit_decision("yes");
  REQUIRE(s.current() == "cabcde_b");
  s.apply_value(reading(s, 97));
  s.confirm(true);
  s.apply_value(reading(s, 80));
  s.confirm(true);
  REQUIRE(s.current() == "cabcde_d");
  s.apply_value(reading(s, 50));
  s.confirm(true);
  CHECK(s.status() == SessionStatus::AwaitingPathConfirmation);
  CHECK(s.current() == "cabcde_d");
  s.confirm(true);
  CHECK(s.current() == "hypo_bs_check");
  CHECK(s.audit()[s.audit().size() - 3].action == AuditAction::PathConfirmed);
  CHECK(s.audit()[s.audit().size() - 2].action == AuditAction::ConfirmSuggestion);
}

TEST_CASE("jumps") {
  Session s = make("start");
  s.submit_decision("R1");
  s.submit_decision("no");
  s.acknowledge();
  s.submit_decision("yes");
  s.apply_value(reading(s, 97));
  s.confirm(true);
  s.apply_value(reading(s, 80));
  s.confirm(true);
  s.apply_value(reading(s, 90));
  s.confirm(true);
  s.acknowledge();
  REQUIRE(s.current() == "cabcde_ecg");

  SUBCASE("association to the ECG of another BPR") {
    s.jump("acs_ecg");
    s.confirm(true);
    CHECK(s.current() == "acs_ecg");
    CHECK(s.audit()[s.audit().size() - 1].detail == "association");
    s.jump("cabcde_ecg");
    s.confirm(true);
    CHECK(s.current() == "cabcde_ecg");
  }
  SUBCASE("hub-listed BPR from anywhere") {
    s.jump("bpr_asthma");
    CHECK(s.pending()->kind == PromptKind::PathChangeConfirmation);
    s.confirm(true);
    CHECK(s.current() == "asthma_spo2");
    CHECK(s.audit()[s.audit().size() - 2].detail == "hub:hub_bpr");
  }
  SUBCASE("unreachable targets") {
    auto n = s.audit().size();
    CHECK(error_of([&] { s.jump("hypo_awake"); }) == Code::NotJumpReachable);
    CHECK(error_of([&] { s.jump("hub_bpr"); }) == Code::NotJumpReachable);
    CHECK(error_of([&] { s.jump("ghost"); }) == Code::UnknownNode);
    CHECK(s.audit().size() == n);
    CHECK(s.current() == "cabcde_ecg");
  }
}

TEST_CASE("additional information") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 55));
  s.confirm(true);
  s.submit_decision("no");
  REQUIRE(s.current() == "hypo_iv_access");
  auto items = s.request_additional_info();
  REQUIRE(items.size() == 1);
  CHECK(items[0].id == "info_glucose_dose");
  CHECK(items[0].kind == NodeKind::Display);
  s.request_additional_info();
  CHECK(s.current() == "hypo_iv_access");
  CHECK(s.audit()[s.audit().size() - 1].action == AuditAction::Info);
  CHECK(s.audit()[s.audit().size() - 2].action == AuditAction::Info);
  CHECK(s.pending()->kind == PromptKind::Acknowledge);

  s.acknowledge();
  auto two = s.request_additional_info();
  CHECK(two.size() == 2);

  Session t = make("bpr_hypo");
  CHECK(t.request_additional_info().empty());
  CHECK(t.audit().back().detail == "none");
}

TEST_CASE("stop is idempotent and final") {
  Session s = make("bpr_hypo");
  s.stop();
  CHECK(s.status() == SessionStatus::Stopped);
  auto n = s.audit().size();
  s.stop();
  CHECK(s.audit().size() == n);
  CHECK(error_of([&] { s.submit_decision("yes"); }) == Code::Stopped);
  CHECK(error_of([&] { s.jump("bpr_acs"); }) == Code::Stopped);
  CHECK(error_of([&] { s.request_additional_info(); }) == Code::Stopped);
  CHECK(std::holds_alternative<StopReached>(s.step()));
}

TEST_CASE("stopping one session leaves the others alone") {
  SessionEngine engine(corpus(), counter());
  auto a = engine.create("pa", "start");
  auto b = engine.create("pb", "bpr_hypo");
  engine.with_session(b, [](Session& s) { s.apply_value(reading(s, 55)); });
  auto before = normalized(engine.snapshot(b));
  engine.stop(a);
  engine.stop(a);
  CHECK(engine.snapshot(a).status() == SessionStatus::Stopped);
  CHECK(normalized(engine.snapshot(b)) == before);
  CHECK(engine.snapshot(b).status() == SessionStatus::AwaitingDecision);
  CHECK(engine.list() == std::vector<std::string>{"s1", "s2"});
  CHECK(error_of([&] { engine.stop("s9"); }) == Code::UnknownSession);
}

TEST_CASE("engine ids stay in creation order") {
  SessionEngine engine(corpus(), counter());
  for (int i = 0; i < 11; ++i) engine.create("p", "start");
  auto ids = engine.list();
  CHECK(ids[1] == "s2");
  CHECK(ids[10] == "s11");
  CHECK(engine.contains("s11"));
  CHECK_FALSE(engine.contains("s12"));
}

TEST_CASE("export is deterministic and timestamps strictly increase") {
  Session s = make("bpr_hypo");
  s.apply_value(reading(s, 55));
  s.confirm(true);
  CHECK(s.export_audit() == s.export_audit());
  // A clock that stands still still yields a strictly ordered log.
  Session frozen(corpus(), "s1", "p1", "bpr_hypo", {false, [] { return std::int64_t{5}; }});
  frozen.apply_value(reading(frozen, 55));
  frozen.confirm(true);
  for (std::size_t i = 1; i < frozen.audit().size(); ++i) {
    CHECK(frozen.audit()[i].timestamp_ms > frozen.audit()[i - 1].timestamp_ms);
  }
}

TEST_CASE("random walks keep prompts consistent with the graph") {
  std::mt19937_64 rng(2024);
  const auto& g = *corpus();
  for (int walk = 0; walk < 200; ++walk) {
    static const std::vector<std::string> entries{"start", "bpr_hypo", "bpr_acs", "dg_respiratory", "bpr_hyper"};
    Session s = make(entries[rng() % entries.size()]);
    for (int i = 0; i < 60 && random_move(s, rng); ++i) {
      REQUIRE(g.find(s.current()));
      if (s.pending() && s.pending()->kind != PromptKind::PathChangeConfirmation) {
        CHECK(targets(*s.pending()) == ordered_targets(g, s.current()));
        if (s.pending()->suggested) CHECK(s.pending()->option(*s.pending()->suggested));
      }
      if (s.status() == SessionStatus::Stopped && s.audit().back().detail == "reached") {
        CHECK(g.node(s.current()).kind == NodeKind::Stop);
      }
    }
    // Every position change is explained by an audit entry.
    std::string at;
    for (const auto& e : s.audit()) {
      if (!at.empty()) CHECK(e.node == at);
      if (e.target && e.action != AuditAction::PathConfirmed && e.action != AuditAction::PathDeclined) at = *e.target;
      else at = e.node;
    }
  }
}

TEST_CASE("interleaved sessions match solo runs") {
  std::mt19937_64 seeds(99);
  for (int round = 0; round < 30; ++round) {
    const int k = 3 + static_cast<int>(seeds() % 3);
    static const std::vector<std::string> entries{"start", "bpr_hypo", "bpr_acs", "bpr_asthma"};
    std::vector<std::uint64_t> seed(k);
    std::vector<std::string> entry(k);
    for (int i = 0; i < k; ++i) {
      seed[i] = seeds();
      entry[i] = entries[seeds() % entries.size()];
    }

    std::vector<nlohmann::json> solo;
    for (int i = 0; i < k; ++i) {
      SessionEngine engine(corpus(), counter());
      auto id = engine.create("p" + std::to_string(i), entry[i]);
      std::mt19937_64 rng(seed[i]);
      for (int n = 0; n < 40; ++n) {
        if (!engine.with_session(id, [&](Session& s) { return random_move(s, rng); })) break;
      }
      auto j = normalized(engine.snapshot(id));
      j.erase("session_id");
      solo.push_back(j);
    }

    SessionEngine engine(corpus(), counter());
    std::vector<std::string> ids;
    std::vector<std::mt19937_64> rngs;
    std::vector<int> moves(k, 0);
    for (int i = 0; i < k; ++i) {
      ids.push_back(engine.create("p" + std::to_string(i), entry[i]));
      rngs.emplace_back(seed[i]);
    }
    std::vector<bool> done(k, false);
    int remaining = k;
    while (remaining > 0) {
      const int i = static_cast<int>(seeds() % k);
      if (done[i]) continue;
      bool more = moves[i] < 40 && engine.with_session(ids[i], [&](Session& s) { return random_move(s, rngs[i]); });
      ++moves[i];
      if (!more) {
        done[i] = true;
        --remaining;
      }
    }
    for (int i = 0; i < k; ++i) {
      auto j = normalized(engine.snapshot(ids[i]));
      j.erase("session_id");
      CHECK(j == solo[i]);
    }
  }
}

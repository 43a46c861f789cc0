#include "kirett/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "kirett/api.hpp"
#include "kirett/replay.hpp"
#include "kirett/runtime.hpp"
#include "kirett/session.hpp"
#include "kirett/validator.hpp"
#include "kirett/vitals.hpp"

namespace kirett {
namespace {

using nlohmann::json;

void report(std::ostream& err, const std::string& path, const GraphError& e) {
  err << "error: " << path << ": ";
  if (e.line()) err << "line " << e.line() << ", column " << e.column() << ": ";
  if (!e.where().empty()) err << e.where() << ": ";
  err << e.what() << '\n';
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::shared_ptr<const Graph> load(const std::string& path, std::ostream& err) {
  try {
    return std::make_shared<const Graph>(load_graph_file(path));
  } catch (const GraphError& e) {
    report(err, path, e);
    return nullptr;
  }
}

void print_findings(const std::vector<Finding>& findings, std::ostream& out) {
  std::size_t errors = 0;
  for (const Finding& f : findings) {
    errors += f.severity == Severity::Error;
    out << code(f.check) << ' ' << (f.severity == Severity::Error ? "error" : "warning") << ' '
        << (f.node.empty() ? "-" : f.node);
    if (f.edge) out << " edge#" << *f.edge;
    out << ": " << f.message << '\n';
  }
  out << errors << " error(s), " << findings.size() - errors << " warning(s)\n";
}

void print_prompt(const Session& s, std::ostream& out) {
  const Prompt& p = *s.pending();
  out << "\n[" << p.node << "] " << p.title << " (" << to_string(p.kind) << ")\n";
  if (p.attached_value) {
    const AttachedValue& v = *p.attached_value;
    out << "  value: " << v.parameter << " = " << json(v.reading).dump() << ' ' << v.unit << " ("
        << to_string(v.freshness);
    if (v.in_range) out << ", " << (*v.in_range ? "in range" : "out of range");
    out << ")\n";
  }
  for (std::size_t i = 0; i < p.options.size(); ++i) {
    const PromptOption& o = p.options[i];
    out << "  " << i + 1 << ") " << o.key << " -> " << o.label
        << (p.suggested && *p.suggested == o.key ? "  [suggested]" : "") << '\n';
  }
  for (const LinkRef& l : p.procedures) out << "  procedure: " << l.name << " (" << l.id << ")\n";
  out << "  commands: <number|key> choose, c confirm, d decline, i info, j <id> jump, s stop, q quit\n";
}

}  // namespace

int cmd_validate(const std::string& graph_path, OutputFormat format, std::ostream& out, std::ostream& err) {
  auto graph = load(graph_path, err);
  if (!graph) return 2;
  auto findings = validate(*graph);
  if (format == OutputFormat::Structured) {
    std::size_t errors = 0;
    for (const Finding& f : findings) errors += f.severity == Severity::Error;
    out << json{{"findings", findings}, {"errors", errors}, {"warnings", findings.size() - errors}}.dump(2) << '\n';
  } else {
    print_findings(findings, out);
  }
  return has_errors(findings) ? 1 : 0;
}

int cmd_stats(const std::string& graph_path, OutputFormat format, std::ostream& out, std::ostream& err) {
  auto graph = load(graph_path, err);
  if (!graph) return 2;
  GraphStats s = stats(*graph);
  if (format == OutputFormat::Structured) {
    out << json(s).dump(2) << '\n';
    return 0;
  }
  out << "node_count " << s.node_count << "\nedge_count " << s.edge_count << "\nbpr_count " << s.bpr_count
      << "\nsaa_count " << s.saa_count << '\n';
  for (const auto& [kind, n] : s.nodes_by_kind) out << "nodes_by_kind." << kind << ' ' << n << '\n';
  for (const auto& [kind, n] : s.edges_by_kind) out << "edges_by_kind." << kind << ' ' << n << '\n';
  return 0;
}

int cmd_replay(const std::string& graph_path, const std::string& script_path, const std::string& vitals_path,
               std::int64_t max_age_ms, std::ostream& out, std::ostream& err) {
  auto graph = load(graph_path, err);
  if (!graph) return 2;
  try {
    auto script_text = read_file(script_path);
    if (!script_text) throw ReplayError("cannot read script " + script_path);
    json doc = json::parse(*script_text, nullptr, false);
    if (doc.is_discarded()) throw ReplayError("script " + script_path + " is not valid JSON");
    ReplayScript script = parse_replay_script(doc);

    std::vector<VitalsRecord> feed;
    if (!vitals_path.empty()) {
      auto csv = read_file(vitals_path);
      if (!csv) throw ReplayError("cannot read vitals " + vitals_path);
      feed = parse_vitals_csv(*csv);
    }
    ReplayResult result = replay(graph, script, feed, ReplayOptions{max_age_ms});
    out << result.transcript;
    if (!result.ok) {
      err << "divergence at " << result.message << '\n';
      return 1;
    }
    return 0;
  } catch (const ReplayError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const VitalsError& e) {
    err << "error: " << vitals_path << ": " << e.what() << '\n';
  }
  return 2;
}

int cmd_run(const RunOptions& options, std::istream& in, std::ostream& out, std::ostream& err) {
  auto graph = load(options.graph_path, err);
  if (!graph) return 2;
  VitalsStore store(VitalsConfig{options.max_age_ms});
  std::int64_t now = 0;
  if (options.vitals_path) {
    auto csv = read_file(*options.vitals_path);
    if (!csv) {
      err << "error: cannot read vitals " << *options.vitals_path << '\n';
      return 2;
    }
    try {
      for (const VitalsRecord& r : parse_vitals_csv(*csv)) {
        store.ingest(r);
        now = std::max(now, r.timestamp_ms);
      }
    } catch (const VitalsError& e) {
      err << "error: " << *options.vitals_path << ": " << e.what() << '\n';
      return 2;
    }
  }

  std::optional<Session> session;
  try {
    session.emplace(graph, "run", options.patient_id, options.entry);
  } catch (const SessionError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  Session& s = *session;
  std::string line;
  while (s.status() != SessionStatus::Stopped) {
    try {
      if (s.status() == SessionStatus::AwaitingValue && s.outstanding_request()) {
        s.apply_value(store.answer(*s.outstanding_request(), now));
        continue;
      }
      print_prompt(s, out);
      out << "> " << std::flush;
      if (!std::getline(in, line)) break;
      std::istringstream words(line);
      std::string cmd, arg;
      words >> cmd >> arg;
      if (cmd.empty()) continue;
      if (cmd == "q") break;
      if (cmd == "s") {
        s.stop();
      } else if (cmd == "c") {
        s.confirm(true);
      } else if (cmd == "d") {
        s.confirm(false);
      } else if (cmd == "j") {
        s.jump(arg);
      } else if (cmd == "i") {
        auto items = s.request_additional_info();
        if (items.empty()) out << "  (no additional information)\n";
        for (const InfoItem& item : items) out << "  " << to_string(item.kind) << ": " << item.name << '\n';
      } else {
        std::string key = cmd;
        const auto& options_list = s.pending()->options;
        if (std::all_of(cmd.begin(), cmd.end(), ::isdigit)) {
          std::size_t n = std::stoul(cmd);
          if (n >= 1 && n <= options_list.size()) key = options_list[n - 1].key;
        }
        s.submit_decision(key);
      }
    } catch (const SessionError& e) {
      out << "  ! " << e.what() << '\n';
    }
  }
  out << '\n' << render_transcript(s.export_audit());
  return 0;
}

int cmd_serve(const ServeOptions& options, std::ostream& out, std::ostream& err,
              const std::function<void(ApiService&, int)>& on_ready) {
  auto graph = load(options.graph_path, err);
  if (!graph) return 2;
  auto findings = validate(*graph);
  if (has_errors(findings)) {
    err << "refusing to serve an invalid graph\n";
    print_findings(findings, err);
    return 1;
  }
  if (options.manifest_path) {
    auto text = read_file(*options.manifest_path);
    json manifest = text ? json::parse(*text, nullptr, false) : json();
    if (manifest.is_discarded() || manifest.is_null()) {
      err << "error: cannot read manifest " << *options.manifest_path << '\n';
      return 2;
    }
    json actual = stats(*graph);
    if (actual != manifest) {
      err << "graph statistics differ from manifest " << *options.manifest_path << "\n  expected "
          << manifest.dump() << "\n  actual   " << actual.dump() << '\n';
      return 1;
    }
  }

  auto runtime = std::make_shared<Runtime>(graph, RuntimeConfig{options.max_age_ms, system_clock_ms()});
  try {
    if (options.vitals_log) {
      if (auto csv = read_file(*options.vitals_log); csv && !csv->empty()) {
        for (const VitalsRecord& r : parse_vitals_csv(*csv)) runtime->vitals().ingest(r);
      }
      runtime->vitals().persist_to(*options.vitals_log);
    }
  } catch (const VitalsError& e) {
    err << "error: " << *options.vitals_log << ": " << e.what() << '\n';
    return 2;
  }

  ApiService service(runtime);
  int port = service.bind(options.host, options.port);
  if (port < 0) {
    err << "error: cannot bind " << options.host << ':' << options.port << '\n';
    return 2;
  }
  out << "listening on http://" << options.host << ':' << port << std::endl;
  if (on_ready) {
    std::thread driver([&] { on_ready(service, port); });
    service.listen();
    driver.join();
  } else {
    service.listen();
  }
  return 0;
}

int cmd_ingest(const std::string& csv_path, const std::string& url, std::ostream& out, std::ostream& err) {
  auto csv = read_file(csv_path);
  if (!csv) {
    err << "error: cannot read " << csv_path << '\n';
    return 2;
  }
  try {
    parse_vitals_csv(*csv);
  } catch (const VitalsError& e) {
    err << "error: " << csv_path << ": " << e.what() << '\n';
    return 2;
  }
  httplib::Client client(url);
  auto res = client.Post("/vitals", *csv, "text/csv");
  if (!res) {
    err << "error: cannot reach " << url << ": " << httplib::to_string(res.error()) << '\n';
    return 2;
  }
  out << res->body << '\n';
  return res->status == 200 ? 0 : 1;
}

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"KIRETT treatment assistant"};
  app.require_subcommand(1);
  const std::map<std::string, OutputFormat> formats{{"text", OutputFormat::Text},
                                                    {"structured", OutputFormat::Structured}};

  std::string graph_path;
  OutputFormat format = OutputFormat::Text;
  auto* validate_cmd = app.add_subcommand("validate", "Check a graph file");
  validate_cmd->add_option("graph", graph_path, "Graph file")->required();
  validate_cmd->add_option("--format", format, "text or structured")->transform(CLI::CheckedTransformer(formats));

  auto* stats_cmd = app.add_subcommand("stats", "Count nodes and edges by kind");
  stats_cmd->add_option("graph", graph_path, "Graph file")->required();
  stats_cmd->add_option("--format", format, "text or structured")->transform(CLI::CheckedTransformer(formats));

  std::string script_path, vitals_path;
  std::int64_t max_age_ms = 300'000;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a session script in simulation mode");
  replay_cmd->add_option("graph", graph_path, "Graph file")->required();
  replay_cmd->add_option("--script", script_path, "Session script (JSON)")->required();
  replay_cmd->add_option("--vitals", vitals_path, "Vitals feed (CSV)");
  replay_cmd->add_option("--max-age", max_age_ms, "Staleness threshold in ms");

  RunOptions run;
  std::string run_vitals;
  auto* run_cmd = app.add_subcommand("run", "Interactive terminal session");
  run_cmd->add_option("graph", run.graph_path, "Graph file")->required();
  run_cmd->add_option("--entry", run.entry, "start, a BPR id or a disease-group id");
  run_cmd->add_option("--patient", run.patient_id, "Patient id");
  run_cmd->add_option("--vitals", run_vitals, "Vitals to answer value requests (CSV)");
  run_cmd->add_option("--max-age", run.max_age_ms, "Staleness threshold in ms");

  ServeOptions serve;
  std::string manifest, vitals_log;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--graph", serve.graph_path, "Graph file")->required();
  serve_cmd->add_option("--host", serve.host, "Bind address");
  serve_cmd->add_option("--port", serve.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--max-age", serve.max_age_ms, "Staleness threshold in ms");
  serve_cmd->add_option("--corpus-manifest", manifest, "Refuse to start unless stats match");
  serve_cmd->add_option("--vitals-log", vitals_log, "Append-only vitals log, restored at start");

  std::string csv_path, url = "http://127.0.0.1:8080";
  auto* ingest_cmd = app.add_subcommand("ingest", "Post a vitals CSV to a running service");
  ingest_cmd->add_option("csv", csv_path, "Vitals CSV")->required();
  ingest_cmd->add_option("--url", url, "Service base URL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  if (*validate_cmd) return cmd_validate(graph_path, format, out, err);
  if (*stats_cmd) return cmd_stats(graph_path, format, out, err);
  if (*replay_cmd) return cmd_replay(graph_path, script_path, vitals_path, max_age_ms, out, err);
  if (*run_cmd) {
    if (!run_vitals.empty()) run.vitals_path = run_vitals;
    return cmd_run(run, in, out, err);
  }
  if (*serve_cmd) {
    if (!manifest.empty()) serve.manifest_path = manifest;
    if (!vitals_log.empty()) serve.vitals_log = vitals_log;
    return cmd_serve(serve, out, err);
  }
  if (*ingest_cmd) return cmd_ingest(csv_path, url, out, err);
  return 2;
}

}  // namespace kirett

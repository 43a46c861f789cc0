#pragma once

// Command implementations behind the kirett executable. Exit codes: 0 success,
// 1 findings/divergence/refusal, 2 input or I/O error.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace kirett {

class ApiService;

enum class OutputFormat { Text, Structured };

int cmd_validate(const std::string& graph_path, OutputFormat format, std::ostream& out, std::ostream& err);
int cmd_stats(const std::string& graph_path, OutputFormat format, std::ostream& out, std::ostream& err);
int cmd_replay(const std::string& graph_path, const std::string& script_path,
               const std::string& vitals_path, std::int64_t max_age_ms, std::ostream& out,
               std::ostream& err);

struct RunOptions {
  std::string graph_path;
  std::string entry = "start";
  std::string patient_id = "p1";
  std::optional<std::string> vitals_path;
  std::int64_t max_age_ms = 300'000;
};
/// Line-based interactive session on in/out.
int cmd_run(const RunOptions& options, std::istream& in, std::ostream& out, std::ostream& err);

struct ServeOptions {
  std::string graph_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::int64_t max_age_ms = 300'000;
  std::optional<std::string> manifest_path;
  std::optional<std::string> vitals_log;
};
/// Blocks while serving. on_ready runs once the port is bound (tests use it
/// to drive and stop the service).
int cmd_serve(const ServeOptions& options, std::ostream& out, std::ostream& err,
              const std::function<void(ApiService&, int port)>& on_ready = {});

int cmd_ingest(const std::string& csv_path, const std::string& url, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace kirett

#pragma once

// Deterministic scripted replay of one session in simulation mode.
//
// Vitals are fed on demand: whenever the session asks for a value, rows of the
// feed are ingested in file order until one for the requested (patient,
// parameter) stream has been stored, or the feed runs out. The virtual clock
// reads the timestamp of the last ingested row.

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kirett/graph.hpp"
#include "kirett/vitals.hpp"

namespace kirett {

/// Malformed script or inconsistent input; maps to exit code 2.
class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReplayAction { Choice, Ack, Jump, Stop, Info, Decline };

struct ReplayStep {
  std::string expect;
  ReplayAction action = ReplayAction::Ack;
  std::string arg;
};

struct ReplayScript {
  std::string patient_id;
  std::string entry;
  std::vector<ReplayStep> steps;
};

ReplayScript parse_replay_script(const nlohmann::json& doc);
/// Checks that every expectation and jump target names a node of the graph.
void check_replay_script(const ReplayScript& script, const Graph& graph);

struct ReplayOptions {
  std::int64_t max_age_ms = 300'000;
};

struct ReplayResult {
  bool ok = true;
  /// 1-based index of the first step that did not match.
  std::optional<std::size_t> failed_step;
  std::string message;
  nlohmann::json report;
  std::string transcript;
};

ReplayResult replay(std::shared_ptr<const Graph> graph, const ReplayScript& script,
                    const std::vector<VitalsRecord>& feed, ReplayOptions options = {});

}  // namespace kirett

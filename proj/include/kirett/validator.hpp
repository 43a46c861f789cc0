#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kirett/graph.hpp"

namespace kirett {

/// Structural checks. Numbering is stable; findings sort by it.
enum class Check {
  UniqueIds = 1,          // V1
  StartStop = 2,          // V2
  WeakConnectivity = 3,   // V3
  BinaryDecision = 4,     // V4
  PriorityRanks = 5,      // V5
  ValueProperties = 6,    // V6
  JumpHubPairs = 7,       // V7
  PathMembership = 8,     // V8
  DanglingEdges = 9,      // V9
  YesNoSource = 10,       // V10
};

std::string code(Check check);

enum class Severity { Error, Warning };

struct Finding {
  Check check;
  Severity severity;
  /// Node locus (for edge findings: the edge's source node). Empty for
  /// graph-level findings such as a missing Start node.
  std::string node;
  std::optional<std::size_t> edge;
  std::string message;

  bool operator==(const Finding&) const = default;
};

/// Runs every check. Pure; result is ordered by check code, then locus.
std::vector<Finding> validate(const Graph& graph);

bool has_errors(const std::vector<Finding>& findings);

/// Ids of nodes not reachable from the unique Start node when edge direction
/// is ignored. Empty when there is no unique Start.
std::vector<std::string> weakly_unreachable(const Graph& graph);

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::map<std::string, std::size_t> nodes_by_kind;
  std::map<std::string, std::size_t> edges_by_kind;
  std::size_t bpr_count = 0;
  std::size_t saa_count = 0;

  bool operator==(const GraphStats&) const = default;
};

GraphStats stats(const Graph& graph);

void to_json(nlohmann::json& j, const GraphStats& s);
void from_json(const nlohmann::json& j, GraphStats& s);
void to_json(nlohmann::json& j, const Finding& f);

}  // namespace kirett

#pragma once

// Typed treatment graph: node/edge taxonomy, immutable indexed Graph, and the
// JSON graph-definition file format.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kirett {

enum class NodeKind {
  Start,
  Stop,
  Bpr,
  Saa,
  JumpBprHub,
  JumpSaaHub,
  JumpDiseaseGroupHub,
  DiseaseGroup,
  DecisionYN,
  DecisionOR,
  Procedure,
  InvasiveProcedure,
  Action,
  Display,
  Warning,
};

inline constexpr NodeKind kAllNodeKinds[] = {
    NodeKind::Start,      NodeKind::Stop,       NodeKind::Bpr,
    NodeKind::Saa,        NodeKind::JumpBprHub, NodeKind::JumpSaaHub,
    NodeKind::JumpDiseaseGroupHub, NodeKind::DiseaseGroup, NodeKind::DecisionYN,
    NodeKind::DecisionOR, NodeKind::Procedure,  NodeKind::InvasiveProcedure,
    NodeKind::Action,     NodeKind::Display,    NodeKind::Warning,
};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view text);
bool is_jump_hub(NodeKind kind);

enum class EdgeKind {
  Priority,
  Yes,
  No,
  BprLink,
  SaaLink,
  Association,
  AdditionalInformation,
};

inline constexpr EdgeKind kAllEdgeKinds[] = {
    EdgeKind::Priority, EdgeKind::Yes,         EdgeKind::No,
    EdgeKind::BprLink,  EdgeKind::SaaLink,     EdgeKind::Association,
    EdgeKind::AdditionalInformation,
};

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> edge_kind_from_string(std::string_view text);

/// Priority, Yes and No edges advance a treatment; the rest are navigation
/// and information links.
constexpr bool is_path_edge(EdgeKind kind) {
  return kind == EdgeKind::Priority || kind == EdgeKind::Yes || kind == EdgeKind::No;
}

/// Link kind a jump hub uses for its opposed pairs, and the node kind it lists.
struct HubTarget {
  NodeKind target;
  EdgeKind link;
};
std::optional<HubTarget> hub_target(NodeKind hub);

/// Rank of a priority edge: R1 is the highest priority, Rn sorts after every
/// numbered rank.
class PriorityRank {
 public:
  static PriorityRank numbered(std::uint32_t rank);
  static PriorityRank last() { return PriorityRank(kLast); }

  bool is_last() const { return value_ == kLast; }
  std::uint32_t number() const { return value_; }
  std::string label() const;

  auto operator<=>(const PriorityRank&) const = default;

 private:
  static constexpr std::uint32_t kLast = UINT32_MAX;
  explicit PriorityRank(std::uint32_t value) : value_(value) {}
  std::uint32_t value_;
};

/// Which binary branch an in-range reading maps to.
enum class RangeBranch { Yes, No };

struct Node {
  std::string id;
  std::string name;
  NodeKind kind = NodeKind::Action;
  std::optional<std::string> bpr;
  std::optional<std::string> saa;
  std::optional<std::string> d_type;
  std::optional<std::string> value;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<std::string> unit;
  std::optional<RangeBranch> range_branch;

  /// Path-membership label: bpr if present, otherwise saa.
  std::optional<std::string> path_label() const;
  bool requests_value() const { return d_type.has_value() && !d_type->empty(); }
  RangeBranch in_range_branch() const { return range_branch.value_or(RangeBranch::Yes); }

  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string from;
  std::string to;
  EdgeKind kind = EdgeKind::Priority;
  std::optional<PriorityRank> rank;

  /// Choice key shown to the operator: "R1".."Rn", "yes", "no", or the link kind.
  std::string key() const;

  bool operator==(const Edge&) const = default;
};

struct GraphMeta {
  std::string name;
  std::string version;
  bool operator==(const GraphMeta&) const = default;
};

class GraphError : public std::runtime_error {
 public:
  enum class Code {
    Io,
    Syntax,
    MissingField,
    InvalidField,
    UnknownKind,
    DuplicateId,
    UnknownEndpoint,
    RangeInverted,
    UnknownNode,
  };

  GraphError(Code code, std::string message, std::string where = {}, std::size_t line = 0,
             std::size_t column = 0);

  Code code() const { return code_; }
  /// JSON pointer of the offending element, when known.
  const std::string& where() const { return where_; }
  /// 1-based position for syntax errors; 0 when not applicable.
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  Code code_;
  std::string where_;
  std::size_t line_;
  std::size_t column_;
};

/// Immutable directed property graph. Construct through Graph::build or
/// parse_graph; every instance satisfies the structural invariants checked
/// there (unique non-empty ids, no dangling edges, min <= max, ranks only on
/// priority edges).
class Graph {
 public:
  static Graph build(GraphMeta meta, std::vector<Node> nodes, std::vector<Edge> edges,
                     nlohmann::ordered_json extensions = nlohmann::ordered_json::object());

  const GraphMeta& meta() const { return meta_; }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Edge> edges() const { return edges_; }
  /// Top-level document sections other than meta/nodes/edges, kept verbatim.
  const nlohmann::ordered_json& extensions() const { return extensions_; }

  const Node* find(std::string_view id) const;
  /// Throws GraphError(UnknownNode).
  const Node& node(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  /// Indices into edges(), in declaration order.
  std::span<const std::size_t> out_edges(std::string_view id) const;
  std::span<const std::size_t> in_edges(std::string_view id) const;

  bool operator==(const Graph& other) const;

 private:
  Graph() = default;
  std::size_t index_of(std::string_view id) const;

  GraphMeta meta_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  nlohmann::ordered_json extensions_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

Graph parse_graph(std::string_view document);
Graph load_graph_file(const std::string& path);
/// Canonical form: one node or edge per line, fixed key order, absent
/// optionals omitted.
std::string serialize_graph(const Graph& graph);

struct OrderedEdge {
  const Edge* edge;
  const Node* target;
};

/// Path edges of a node in display order: priority ranks ascending with Rn
/// last, then yes before no. Link edges are excluded (see related_links).
std::vector<OrderedEdge> out_edges_ordered(const Graph& graph, std::string_view id);

struct RelatedLinks {
  std::vector<OrderedEdge> bpr;
  std::vector<OrderedEdge> saa;
  std::vector<OrderedEdge> association;
  std::vector<OrderedEdge> additional_info;
};

RelatedLinks related_links(const Graph& graph, std::string_view id);

struct EntryPoints {
  std::string start;
  std::vector<const Node*> bprs;
  std::vector<const Node*> saas;
  std::vector<const Node*> disease_groups;
};

/// Requires exactly one Start node (guaranteed after validation).
EntryPoints entry_points(const Graph& graph);

}  // namespace kirett

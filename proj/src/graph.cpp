#include "kirett/graph.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <utility>

namespace kirett {
namespace {

constexpr std::array<std::pair<NodeKind, std::string_view>, 15> kNodeKindNames{{
    {NodeKind::Start, "Start"},
    {NodeKind::Stop, "Stop"},
    {NodeKind::Bpr, "BPR"},
    {NodeKind::Saa, "SAA"},
    {NodeKind::JumpBprHub, "JumpBPR"},
    {NodeKind::JumpSaaHub, "JumpSAA"},
    {NodeKind::JumpDiseaseGroupHub, "JumpDiseaseGroup"},
    {NodeKind::DiseaseGroup, "DiseaseGroup"},
    {NodeKind::DecisionYN, "DecisionYN"},
    {NodeKind::DecisionOR, "DecisionOR"},
    {NodeKind::Procedure, "Procedure"},
    {NodeKind::InvasiveProcedure, "InvasiveProcedure"},
    {NodeKind::Action, "Action"},
    {NodeKind::Display, "Display"},
    {NodeKind::Warning, "Warning"},
}};

constexpr std::array<std::pair<EdgeKind, std::string_view>, 7> kEdgeKindNames{{
    {EdgeKind::Priority, "R"},
    {EdgeKind::Yes, "yes"},
    {EdgeKind::No, "no"},
    {EdgeKind::BprLink, "bpr"},
    {EdgeKind::SaaLink, "saa"},
    {EdgeKind::Association, "association"},
    {EdgeKind::AdditionalInformation, "additionalInformation"},
}};

// Display order of path edges from one node.
std::pair<int, std::uint32_t> display_key(const Edge& e) {
  switch (e.kind) {
    case EdgeKind::Priority:
      return {0, e.rank ? e.rank->number() : UINT32_MAX};
    case EdgeKind::Yes:
      return {1, 0};
    case EdgeKind::No:
      return {1, 1};
    default:
      return {2, 0};
  }
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  for (const auto& [k, name] : kNodeKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<NodeKind> node_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kNodeKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

bool is_jump_hub(NodeKind kind) {
  return kind == NodeKind::JumpBprHub || kind == NodeKind::JumpSaaHub ||
         kind == NodeKind::JumpDiseaseGroupHub;
}

std::string_view to_string(EdgeKind kind) {
  for (const auto& [k, name] : kEdgeKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<EdgeKind> edge_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kEdgeKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::optional<HubTarget> hub_target(NodeKind hub) {
  switch (hub) {
    case NodeKind::JumpBprHub:
      return HubTarget{NodeKind::Bpr, EdgeKind::BprLink};
    case NodeKind::JumpSaaHub:
      return HubTarget{NodeKind::Saa, EdgeKind::SaaLink};
    case NodeKind::JumpDiseaseGroupHub:
      return HubTarget{NodeKind::DiseaseGroup, EdgeKind::Association};
    default:
      return std::nullopt;
  }
}

PriorityRank PriorityRank::numbered(std::uint32_t rank) {
  if (rank == 0 || rank == kLast) {
    throw std::invalid_argument("priority rank must be a positive integer");
  }
  return PriorityRank(rank);
}

std::string PriorityRank::label() const {
  return is_last() ? std::string("Rn") : "R" + std::to_string(value_);
}

std::optional<std::string> Node::path_label() const {
  if (bpr) return bpr;
  return saa;
}

std::string Edge::key() const {
  if (kind == EdgeKind::Priority && rank) return rank->label();
  return std::string(to_string(kind));
}

GraphError::GraphError(Code code, std::string message, std::string where, std::size_t line,
                       std::size_t column)
    : std::runtime_error(std::move(message)),
      code_(code),
      where_(std::move(where)),
      line_(line),
      column_(column) {}

Graph Graph::build(GraphMeta meta, std::vector<Node> nodes, std::vector<Edge> edges,
                   nlohmann::ordered_json extensions) {
  Graph g;
  g.meta_ = std::move(meta);
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.extensions_ = extensions.is_null() ? nlohmann::ordered_json::object() : std::move(extensions);

  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    const Node& n = g.nodes_[i];
    const std::string where = "/nodes/" + std::to_string(i);
    if (n.id.empty()) {
      throw GraphError(GraphError::Code::InvalidField, "node id must be non-empty", where);
    }
    if (!g.index_.emplace(n.id, i).second) {
      throw GraphError(GraphError::Code::DuplicateId, "duplicate node id \"" + n.id + "\"", where);
    }
    if (n.min && n.max && *n.min > *n.max) {
      throw GraphError(GraphError::Code::RangeInverted,
                       "node \"" + n.id + "\" has min greater than max", where);
    }
  }

  g.out_.resize(g.nodes_.size());
  g.in_.resize(g.nodes_.size());
  for (std::size_t i = 0; i < g.edges_.size(); ++i) {
    const Edge& e = g.edges_[i];
    const std::string where = "/edges/" + std::to_string(i);
    auto from = g.index_.find(e.from);
    auto to = g.index_.find(e.to);
    if (from == g.index_.end() || to == g.index_.end()) {
      const std::string& missing = from == g.index_.end() ? e.from : e.to;
      throw GraphError(GraphError::Code::UnknownEndpoint,
                       "edge references unknown node \"" + missing + "\"", where);
    }
    if (e.kind == EdgeKind::Priority && !e.rank) {
      throw GraphError(GraphError::Code::MissingField, "priority edge requires a rank", where);
    }
    if (e.kind != EdgeKind::Priority && e.rank) {
      throw GraphError(GraphError::Code::InvalidField, "only priority edges carry a rank", where);
    }
    g.out_[from->second].push_back(i);
    g.in_[to->second].push_back(i);
  }
  return g;
}

const Node* Graph::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::size_t Graph::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw GraphError(GraphError::Code::UnknownNode, "unknown node id \"" + std::string(id) + "\"");
  }
  return it->second;
}

const Node& Graph::node(std::string_view id) const { return nodes_[index_of(id)]; }

std::span<const std::size_t> Graph::out_edges(std::string_view id) const {
  return out_[index_of(id)];
}

std::span<const std::size_t> Graph::in_edges(std::string_view id) const {
  return in_[index_of(id)];
}

bool Graph::operator==(const Graph& other) const {
  return meta_ == other.meta_ && nodes_ == other.nodes_ && edges_ == other.edges_ &&
         extensions_ == other.extensions_;
}

std::vector<OrderedEdge> out_edges_ordered(const Graph& graph, std::string_view id) {
  std::vector<OrderedEdge> result;
  for (std::size_t i : graph.out_edges(id)) {
    const Edge& e = graph.edges()[i];
    if (is_path_edge(e.kind)) result.push_back({&e, graph.find(e.to)});
  }
  std::stable_sort(result.begin(), result.end(), [](const OrderedEdge& a, const OrderedEdge& b) {
    return display_key(*a.edge) < display_key(*b.edge);
  });
  return result;
}

RelatedLinks related_links(const Graph& graph, std::string_view id) {
  RelatedLinks links;
  for (std::size_t i : graph.out_edges(id)) {
    const Edge& e = graph.edges()[i];
    OrderedEdge item{&e, graph.find(e.to)};
    switch (e.kind) {
      case EdgeKind::BprLink:
        links.bpr.push_back(item);
        break;
      case EdgeKind::SaaLink:
        links.saa.push_back(item);
        break;
      case EdgeKind::Association:
        links.association.push_back(item);
        break;
      case EdgeKind::AdditionalInformation:
        links.additional_info.push_back(item);
        break;
      default:
        break;
    }
  }
  return links;
}

EntryPoints entry_points(const Graph& graph) {
  EntryPoints entries;
  int starts = 0;
  for (const Node& n : graph.nodes()) {
    switch (n.kind) {
      case NodeKind::Start:
        entries.start = n.id;
        ++starts;
        break;
      case NodeKind::Bpr:
        entries.bprs.push_back(&n);
        break;
      case NodeKind::Saa:
        entries.saas.push_back(&n);
        break;
      case NodeKind::DiseaseGroup:
        entries.disease_groups.push_back(&n);
        break;
      default:
        break;
    }
  }
  if (starts != 1) {
    throw GraphError(GraphError::Code::InvalidField, "graph must have exactly one Start node");
  }
  auto by_name = [](const Node* a, const Node* b) {
    return std::tie(a->name, a->id) < std::tie(b->name, b->id);
  };
  std::sort(entries.bprs.begin(), entries.bprs.end(), by_name);
  std::sort(entries.saas.begin(), entries.saas.end(), by_name);
  std::sort(entries.disease_groups.begin(), entries.disease_groups.end(), by_name);
  return entries;
}

}  // namespace kirett

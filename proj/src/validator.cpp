#include "kirett/validator.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <tuple>

namespace kirett {
namespace {

Finding error(Check check, std::string node, std::string message,
              std::optional<std::size_t> edge = std::nullopt) {
  return {check, Severity::Error, std::move(node), edge, std::move(message)};
}

void check_unique_ids(const Graph& g, std::vector<Finding>& out) {
  std::set<std::string_view> seen;
  for (const Node& n : g.nodes()) {
    if (!seen.insert(n.id).second) out.push_back(error(Check::UniqueIds, n.id, "duplicate node id"));
  }
}

void check_start_stop(const Graph& g, std::vector<Finding>& out) {
  std::vector<const Node*> starts;
  std::size_t stops = 0;
  for (const Node& n : g.nodes()) {
    if (n.kind == NodeKind::Start) starts.push_back(&n);
    if (n.kind == NodeKind::Stop) ++stops;
  }
  if (starts.empty()) out.push_back(error(Check::StartStop, "", "graph has no Start node"));
  if (starts.size() > 1) {
    for (const Node* s : starts) {
      out.push_back(error(Check::StartStop, s->id,
                          "one of " + std::to_string(starts.size()) + " Start nodes"));
    }
  }
  if (stops == 0) out.push_back(error(Check::StartStop, "", "graph has no Stop node"));
}

void check_connectivity(const Graph& g, std::vector<Finding>& out) {
  for (const std::string& id : weakly_unreachable(g)) {
    out.push_back(error(Check::WeakConnectivity, id, "not reachable from Start ignoring direction"));
  }
}

void check_decisions(const Graph& g, std::vector<Finding>& out) {
  for (const Node& n : g.nodes()) {
    std::size_t yes = 0, no = 0, priority = 0;
    for (std::size_t i : g.out_edges(n.id)) {
      const Edge& e = g.edges()[i];
      yes += e.kind == EdgeKind::Yes;
      no += e.kind == EdgeKind::No;
      priority += e.kind == EdgeKind::Priority;
      if (n.kind != NodeKind::DecisionYN && (e.kind == EdgeKind::Yes || e.kind == EdgeKind::No)) {
        out.push_back(error(Check::YesNoSource, n.id,
                            std::string(to_string(e.kind)) + " edge from a " +
                                std::string(to_string(n.kind)) + " node",
                            i));
      }
    }
    if (n.kind == NodeKind::DecisionYN && (yes != 1 || no != 1 || priority != 0)) {
      out.push_back(error(Check::BinaryDecision, n.id,
                          "DecisionYN needs exactly one yes and one no edge and no priority "
                          "edges (has yes=" + std::to_string(yes) + ", no=" + std::to_string(no) +
                              ", R=" + std::to_string(priority) + ")"));
    }
  }
}

void check_ranks(const Graph& g, std::vector<Finding>& out) {
  for (const Node& n : g.nodes()) {
    std::set<PriorityRank> seen;
    std::set<PriorityRank> reported;
    for (std::size_t i : g.out_edges(n.id)) {
      const Edge& e = g.edges()[i];
      if (e.kind != EdgeKind::Priority || !e.rank) continue;
      if (!seen.insert(*e.rank).second && reported.insert(*e.rank).second) {
        out.push_back(error(Check::PriorityRanks, n.id,
                            "rank " + e.rank->label() + " used more than once", i));
      }
    }
  }
}

void check_values(const Graph& g, std::vector<Finding>& out) {
  for (const Node& n : g.nodes()) {
    if (n.min && n.max && *n.min > *n.max) {
      out.push_back(error(Check::ValueProperties, n.id, "min greater than max"));
    }
    if (n.d_type && !n.value) {
      out.push_back(error(Check::ValueProperties, n.id, "d_type set without value"));
    }
  }
}

void check_hubs(const Graph& g, std::vector<Finding>& out) {
  std::set<std::tuple<std::string_view, std::string_view, EdgeKind>> edges;
  for (const Edge& e : g.edges()) edges.emplace(e.from, e.to, e.kind);
  for (const Node& hub : g.nodes()) {
    auto target = hub_target(hub.kind);
    if (!target) continue;
    for (const Node& n : g.nodes()) {
      if (n.kind != target->target) continue;
      const bool forward = edges.count({hub.id, n.id, target->link}) > 0;
      const bool backward = edges.count({n.id, hub.id, target->link}) > 0;
      if (!forward || !backward) {
        out.push_back(error(Check::JumpHubPairs, hub.id,
                            "missing " + std::string(to_string(target->link)) + " edge " +
                                (forward ? n.id + " -> " + hub.id : hub.id + " -> " + n.id)));
      }
    }
  }
}

bool is_path_node(NodeKind kind) {
  switch (kind) {
    case NodeKind::Bpr:
    case NodeKind::Saa:
    case NodeKind::DecisionYN:
    case NodeKind::DecisionOR:
    case NodeKind::Procedure:
    case NodeKind::InvasiveProcedure:
    case NodeKind::Action:
      return true;
    default:
      return false;
  }
}

void check_membership(const Graph& g, std::vector<Finding>& out) {
  for (const Node& n : g.nodes()) {
    if (is_path_node(n.kind) && !n.bpr && !n.saa) {
      out.push_back({Check::PathMembership, Severity::Warning, n.id, std::nullopt,
                     "path node carries neither a bpr nor a saa label"});
    }
  }
}

void check_dangling(const Graph& g, std::vector<Finding>& out) {
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const Edge& e = g.edges()[i];
    if (!g.contains(e.from) || !g.contains(e.to)) {
      out.push_back(error(Check::DanglingEdges, g.contains(e.from) ? e.from : "", "dangling edge", i));
    }
  }
}

}  // namespace

std::string code(Check check) { return "V" + std::to_string(static_cast<int>(check)); }

std::vector<std::string> weakly_unreachable(const Graph& g) {
  const Node* start = nullptr;
  for (const Node& n : g.nodes()) {
    if (n.kind == NodeKind::Start) {
      if (start) return {};
      start = &n;
    }
  }
  if (!start) return {};

  std::set<std::string_view> seen{start->id};
  std::deque<std::string_view> queue{start->id};
  while (!queue.empty()) {
    std::string_view id = queue.front();
    queue.pop_front();
    auto visit = [&](std::string_view next) {
      if (seen.insert(next).second) queue.push_back(next);
    };
    for (std::size_t i : g.out_edges(id)) visit(g.edges()[i].to);
    for (std::size_t i : g.in_edges(id)) visit(g.edges()[i].from);
  }

  std::vector<std::string> unreachable;
  for (const Node& n : g.nodes()) {
    if (!seen.count(n.id)) unreachable.push_back(n.id);
  }
  return unreachable;
}

std::vector<Finding> validate(const Graph& graph) {
  std::vector<Finding> findings;
  check_unique_ids(graph, findings);
  check_start_stop(graph, findings);
  check_connectivity(graph, findings);
  check_decisions(graph, findings);
  check_ranks(graph, findings);
  check_values(graph, findings);
  check_hubs(graph, findings);
  check_membership(graph, findings);
  check_dangling(graph, findings);
  std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.check, a.node, a.edge, a.message) < std::tie(b.check, b.node, b.edge, b.message);
  });
  return findings;
}

bool has_errors(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::Error; });
}

GraphStats stats(const Graph& graph) {
  GraphStats s;
  s.node_count = graph.nodes().size();
  s.edge_count = graph.edges().size();
  for (const Node& n : graph.nodes()) {
    ++s.nodes_by_kind[std::string(to_string(n.kind))];
    s.bpr_count += n.kind == NodeKind::Bpr;
    s.saa_count += n.kind == NodeKind::Saa;
  }
  for (const Edge& e : graph.edges()) ++s.edges_by_kind[std::string(to_string(e.kind))];
  return s;
}

void to_json(nlohmann::json& j, const GraphStats& s) {
  j = nlohmann::json{{"node_count", s.node_count},       {"edge_count", s.edge_count},
                     {"nodes_by_kind", s.nodes_by_kind}, {"edges_by_kind", s.edges_by_kind},
                     {"bpr_count", s.bpr_count},         {"saa_count", s.saa_count}};
}

void from_json(const nlohmann::json& j, GraphStats& s) {
  j.at("node_count").get_to(s.node_count);
  j.at("edge_count").get_to(s.edge_count);
  j.at("nodes_by_kind").get_to(s.nodes_by_kind);
  j.at("edges_by_kind").get_to(s.edges_by_kind);
  j.at("bpr_count").get_to(s.bpr_count);
  j.at("saa_count").get_to(s.saa_count);
}

void to_json(nlohmann::json& j, const Finding& f) {
  j = nlohmann::json{{"code", code(f.check)},
                     {"severity", f.severity == Severity::Error ? "error" : "warning"},
                     {"node", f.node},
                     {"message", f.message}};
  if (f.edge) j["edge"] = *f.edge;
}

}  // namespace kirett

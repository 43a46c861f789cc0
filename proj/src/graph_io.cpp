#include <fstream>
#include <sstream>

#include "kirett/graph.hpp"
#include "number_format.hpp"

namespace kirett {
namespace {

using ojson = nlohmann::ordered_json;
using Code = GraphError::Code;

constexpr std::string_view kNodeKeys[] = {"id",  "name", "kind", "bpr",  "saa",         "d_type",
                                          "value", "min", "max", "unit", "range_branch"};
constexpr std::string_view kEdgeKeys[] = {"from", "to", "kind", "rank"};

template <std::size_t N>
void reject_unknown_keys(const ojson& obj, const std::string_view (&allowed)[N],
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto key : allowed) known = known || key == item.key();
    if (!known) {
      throw GraphError(Code::InvalidField, "unknown field \"" + item.key() + "\"", where);
    }
  }
}

const ojson& require(const ojson& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw GraphError(Code::MissingField, std::string("missing field \"") + key + "\"", where);
  }
  return *it;
}

std::string require_string(const ojson& obj, const char* key, const std::string& where) {
  const ojson& v = require(obj, key, where);
  if (!v.is_string()) {
    throw GraphError(Code::InvalidField, std::string("field \"") + key + "\" must be a string",
                     where + "/" + key);
  }
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const ojson& obj, const char* key,
                                           const std::string& where) {
  if (!obj.contains(key)) return std::nullopt;
  return require_string(obj, key, where);
}

std::optional<double> optional_number(const ojson& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_number()) {
    throw GraphError(Code::InvalidField, std::string("field \"") + key + "\" must be a number",
                     where + "/" + key);
  }
  return it->get<double>();
}

Node parse_node(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw GraphError(Code::InvalidField, "node must be an object", where);
  reject_unknown_keys(j, kNodeKeys, where);
  Node n;
  n.id = require_string(j, "id", where);
  n.name = require_string(j, "name", where);
  const std::string kind = require_string(j, "kind", where);
  auto parsed = node_kind_from_string(kind);
  if (!parsed) throw GraphError(Code::UnknownKind, "unknown node kind \"" + kind + "\"", where);
  n.kind = *parsed;
  n.bpr = optional_string(j, "bpr", where);
  n.saa = optional_string(j, "saa", where);
  n.d_type = optional_string(j, "d_type", where);
  n.value = optional_string(j, "value", where);
  n.min = optional_number(j, "min", where);
  n.max = optional_number(j, "max", where);
  n.unit = optional_string(j, "unit", where);
  if (auto branch = optional_string(j, "range_branch", where)) {
    if (*branch == "yes") {
      n.range_branch = RangeBranch::Yes;
    } else if (*branch == "no") {
      n.range_branch = RangeBranch::No;
    } else {
      throw GraphError(Code::InvalidField, "range_branch must be \"yes\" or \"no\"",
                       where + "/range_branch");
    }
  }
  return n;
}

Edge parse_edge(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw GraphError(Code::InvalidField, "edge must be an object", where);
  reject_unknown_keys(j, kEdgeKeys, where);
  Edge e;
  e.from = require_string(j, "from", where);
  e.to = require_string(j, "to", where);
  const std::string kind = require_string(j, "kind", where);
  auto parsed = edge_kind_from_string(kind);
  if (!parsed) throw GraphError(Code::UnknownKind, "unknown edge kind \"" + kind + "\"", where);
  e.kind = *parsed;
  if (auto it = j.find("rank"); it != j.end()) {
    if (it->is_string() && it->get<std::string>() == "n") {
      e.rank = PriorityRank::last();
    } else if (it->is_number_unsigned() && it->get<std::uint64_t>() >= 1 &&
               it->get<std::uint64_t>() < UINT32_MAX) {
      e.rank = PriorityRank::numbered(static_cast<std::uint32_t>(it->get<std::uint64_t>()));
    } else {
      throw GraphError(Code::InvalidField, "rank must be a positive integer or \"n\"",
                       where + "/rank");
    }
  }
  return e;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view doc, std::size_t byte) {
  std::size_t line = 1, column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, doc.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (doc[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

// Compact single-line object with ", " and ": " separators.
std::string inline_object(const ojson& obj) {
  std::string out = "{";
  bool first = true;
  for (const auto& item : obj.items()) {
    if (!first) out += ", ";
    first = false;
    out += ojson(item.key()).dump();
    out += ": ";
    out += item.value().dump();
  }
  return out + "}";
}

ojson node_to_json(const Node& n) {
  ojson j = ojson::object();
  j["id"] = n.id;
  j["name"] = n.name;
  j["kind"] = std::string(to_string(n.kind));
  if (n.bpr) j["bpr"] = *n.bpr;
  if (n.saa) j["saa"] = *n.saa;
  if (n.d_type) j["d_type"] = *n.d_type;
  if (n.value) j["value"] = *n.value;
  if (n.min) j["min"] = ojson::parse(detail::format_number(*n.min));
  if (n.max) j["max"] = ojson::parse(detail::format_number(*n.max));
  if (n.unit) j["unit"] = *n.unit;
  if (n.range_branch) j["range_branch"] = *n.range_branch == RangeBranch::Yes ? "yes" : "no";
  return j;
}

ojson edge_to_json(const Edge& e) {
  ojson j = ojson::object();
  j["from"] = e.from;
  j["to"] = e.to;
  j["kind"] = std::string(to_string(e.kind));
  if (e.rank) {
    if (e.rank->is_last()) {
      j["rank"] = "n";
    } else {
      j["rank"] = e.rank->number();
    }
  }
  return j;
}

template <typename T, typename F>
void append_array(std::string& out, const char* key, const std::vector<T>& items, F to_json,
                  bool trailing_comma) {
  out += "  \"";
  out += key;
  out += "\": [\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += "    " + inline_object(to_json(items[i]));
    out += i + 1 < items.size() ? ",\n" : "\n";
  }
  out += trailing_comma ? "  ],\n" : "  ]\n";
}

}  // namespace

Graph parse_graph(std::string_view document) {
  ojson doc;
  try {
    doc = ojson::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, column] = line_column(document, e.byte);
    throw GraphError(Code::Syntax,
                     "syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(column),
                     {}, line, column);
  }
  if (!doc.is_object()) throw GraphError(Code::InvalidField, "document must be an object", "");

  const ojson& meta_json = require(doc, "meta", "");
  if (!meta_json.is_object()) throw GraphError(Code::InvalidField, "meta must be an object", "/meta");
  GraphMeta meta{require_string(meta_json, "name", "/meta"),
                 require_string(meta_json, "version", "/meta")};

  const ojson& nodes_json = require(doc, "nodes", "");
  const ojson& edges_json = require(doc, "edges", "");
  if (!nodes_json.is_array()) throw GraphError(Code::InvalidField, "nodes must be an array", "/nodes");
  if (!edges_json.is_array()) throw GraphError(Code::InvalidField, "edges must be an array", "/edges");

  std::vector<Node> nodes;
  nodes.reserve(nodes_json.size());
  for (std::size_t i = 0; i < nodes_json.size(); ++i) {
    nodes.push_back(parse_node(nodes_json[i], "/nodes/" + std::to_string(i)));
  }
  std::vector<Edge> edges;
  edges.reserve(edges_json.size());
  for (std::size_t i = 0; i < edges_json.size(); ++i) {
    edges.push_back(parse_edge(edges_json[i], "/edges/" + std::to_string(i)));
  }

  ojson extensions = ojson::object();
  for (const auto& item : doc.items()) {
    if (item.key() != "meta" && item.key() != "nodes" && item.key() != "edges") {
      extensions[item.key()] = item.value();
    }
  }
  return Graph::build(std::move(meta), std::move(nodes), std::move(edges), std::move(extensions));
}

Graph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GraphError(Code::Io, "cannot read graph file \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_graph(buffer.str());
}

std::string serialize_graph(const Graph& graph) {
  std::string out = "{\n";
  ojson meta = ojson::object();
  meta["name"] = graph.meta().name;
  meta["version"] = graph.meta().version;
  out += "  \"meta\": " + inline_object(meta) + ",\n";

  const std::vector<Node> nodes(graph.nodes().begin(), graph.nodes().end());
  const std::vector<Edge> edges(graph.edges().begin(), graph.edges().end());
  const bool has_ext = !graph.extensions().empty();
  append_array(out, "nodes", nodes, node_to_json, true);
  append_array(out, "edges", edges, edge_to_json, has_ext);

  std::size_t remaining = graph.extensions().size();
  for (const auto& item : graph.extensions().items()) {
    std::string body = item.value().dump(2);
    std::string indented;
    for (char c : body) {
      indented += c;
      if (c == '\n') indented += "  ";
    }
    out += "  " + ojson(item.key()).dump() + ": " + indented;
    out += --remaining > 0 ? ",\n" : "\n";
  }
  out += "}\n";
  return out;
}

}  // namespace kirett

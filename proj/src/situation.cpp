#include "kirett/situation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kirett {
namespace {

using Code = SituationError::Code;

SituationError malformed(const std::string& why) { return {Code::Malformed, "questionnaire: " + why}; }

Comparator comparator_from_string(const std::string& text) {
  if (text == "<") return Comparator::Less;
  if (text == "<=") return Comparator::LessEqual;
  if (text == ">") return Comparator::Greater;
  if (text == ">=") return Comparator::GreaterEqual;
  if (text == "==") return Comparator::Equal;
  throw malformed("unknown comparator " + text);
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

bool VitalsRule::matches(double reading) const {
  switch (comparator) {
    case Comparator::Less:
      return reading < threshold;
    case Comparator::LessEqual:
      return reading <= threshold;
    case Comparator::Greater:
      return reading > threshold;
    case Comparator::GreaterEqual:
      return reading >= threshold;
    case Comparator::Equal:
      return reading == threshold;
  }
  return false;
}

const Question* Questionnaire::find(std::string_view id) const {
  for (const Question& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

Questionnaire parse_questionnaire(const nlohmann::json& section) {
  Questionnaire q;
  try {
    section.at("groups").get_to(q.groups);
    if (q.groups.empty()) throw malformed("no groups");
    const std::set<std::string> groups(q.groups.begin(), q.groups.end());
    if (groups.size() != q.groups.size()) throw malformed("duplicate group id");

    std::set<std::string> ids;
    for (const auto& jq : section.at("questions")) {
      Question question;
      jq.at("id").get_to(question.id);
      question.text = jq.value("text", std::string{});
      if (!ids.insert(question.id).second) throw malformed("duplicate question " + question.id);
      const auto& domain = jq.at("domain");
      if (domain.is_string()) {
        if (domain.get<std::string>() != "boolean") throw malformed(question.id + ": unknown domain");
      } else {
        domain.get_to(question.values);
        if (question.values.empty()) throw malformed(question.id + ": empty domain");
        jq.at("positive").get_to(question.positive);
        for (const std::string& p : question.positive) {
          if (!contains(question.values, p)) throw malformed(question.id + ": positive answer outside domain");
        }
      }
      jq.at("weights").get_to(question.weights);
      if (question.weights.size() != groups.size()) throw malformed(question.id + ": weights must cover every group");
      for (const auto& [g, w] : question.weights) {
        if (!groups.count(g)) throw malformed(question.id + ": weight for unknown group " + g);
        if (w < 0) throw malformed(question.id + ": negative weight");
      }
      q.questions.push_back(std::move(question));
    }

    for (const auto& jr : section.value("vitals_rules", nlohmann::json::array())) {
      VitalsRule rule;
      jr.at("parameter").get_to(rule.parameter);
      rule.comparator = comparator_from_string(jr.at("comparator").get<std::string>());
      jr.at("threshold").get_to(rule.threshold);
      jr.at("group").get_to(rule.group);
      jr.at("bonus").get_to(rule.bonus);
      if (!groups.count(rule.group)) throw malformed("rule for unknown group " + rule.group);
      if (rule.bonus < 0) throw malformed("negative rule bonus");
      q.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw malformed(e.what());
  }
  return q;
}

Questionnaire questionnaire_from_graph(const Graph& graph) {
  const auto& ext = graph.extensions();
  if (!ext.contains("questionnaire")) throw malformed("graph has no questionnaire section");
  Questionnaire q = parse_questionnaire(nlohmann::json::parse(ext.at("questionnaire").dump()));
  for (const std::string& g : q.groups) {
    const Node* n = graph.find(g);
    if (!n || n->kind != NodeKind::DiseaseGroup) {
      throw SituationError(Code::UnknownGroup, "group " + g + " is not a DiseaseGroup node");
    }
  }
  return q;
}

Answers parse_answers(const nlohmann::json& answers) {
  if (!answers.is_object()) throw SituationError(Code::Malformed, "answers must be an object");
  Answers out;
  for (const auto& [id, value] : answers.items()) {
    if (value.is_boolean()) {
      out.emplace(id, value.get<bool>());
    } else if (value.is_string()) {
      out.emplace(id, value.get<std::string>());
    } else if (!value.is_null()) {
      throw SituationError(Code::OutOfDomain, "answer to " + id + " must be a boolean or a string");
    }
  }
  return out;
}

VitalsSnapshot parse_vitals_snapshot(const nlohmann::json& vitals) {
  if (vitals.is_null()) return {};
  if (!vitals.is_object()) throw SituationError(Code::Malformed, "vitals must be an object");
  VitalsSnapshot out;
  for (const auto& [parameter, value] : vitals.items()) {
    if (!value.is_number()) throw SituationError(Code::Malformed, "vital " + parameter + " is not a number");
    out.emplace(parameter, value.get<double>());
  }
  return out;
}

std::vector<std::string> SituationScore::ranking() const {
  std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  // Scores that differ only by rounding are ties, so scaled weights rank alike.
  auto tied = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
  };
  for (std::size_t begin = 0; begin < items.size();) {
    std::size_t end = begin + 1;
    while (end < items.size() && tied(items[end - 1].second, items[end].second)) ++end;
    std::sort(items.begin() + static_cast<std::ptrdiff_t>(begin),
              items.begin() + static_cast<std::ptrdiff_t>(end),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    begin = end;
  }
  std::vector<std::string> out;
  for (auto& [id, s] : items) out.push_back(id);
  return out;
}

SituationScore score(const Questionnaire& q, const Answers& answers, const VitalsSnapshot& vitals) {
  SituationScore s;
  for (const std::string& g : q.groups) s.scores[g] = 0;
  for (const auto& [id, answer] : answers) {
    const Question* question = q.find(id);
    if (!question) throw SituationError(Code::OutOfDomain, "unknown question " + id);
    bool positive = false;
    if (question->is_boolean()) {
      if (!std::holds_alternative<bool>(answer)) {
        throw SituationError(Code::OutOfDomain, id + " expects a boolean answer");
      }
      positive = std::get<bool>(answer);
    } else {
      const auto* text = std::get_if<std::string>(&answer);
      if (!text || !contains(question->values, *text)) {
        throw SituationError(Code::OutOfDomain, id + ": answer outside the domain");
      }
      positive = contains(question->positive, *text);
    }
    if (!positive) continue;
    for (const auto& [g, w] : question->weights) s.scores[g] += w;
  }
  for (const VitalsRule& rule : q.rules) {
    auto it = vitals.find(rule.parameter);
    if (it != vitals.end() && rule.matches(it->second)) s.scores[rule.group] += rule.bonus;
  }
  return s;
}

std::vector<EntryRecommendation> recommend_entry(const Graph& graph, const SituationScore& s,
                                                 std::size_t k) {
  if (s.scores.empty()) throw SituationError(Code::EmptyScore, "empty score");
  std::vector<EntryRecommendation> out;
  for (const std::string& id : s.ranking()) {
    const Node* group = graph.find(id);
    if (!group || group->kind != NodeKind::DiseaseGroup) {
      throw SituationError(Code::UnknownGroup, "score references unknown group " + id);
    }
    if (out.size() == k) continue;
    EntryRecommendation r{group, s.scores.at(id), {}};
    for (const OrderedEdge& oe : related_links(graph, id).bpr) r.bprs.push_back(oe.target);
    out.push_back(std::move(r));
  }
  return out;
}

void to_json(nlohmann::json& j, const SituationScore& s) {
  j = nlohmann::json{{"scores", s.scores}, {"ranking", s.ranking()}};
}

void to_json(nlohmann::json& j, const EntryRecommendation& r) {
  nlohmann::json bprs = nlohmann::json::array();
  for (const Node* b : r.bprs) bprs.push_back({{"id", b->id}, {"name", b->name}});
  j = nlohmann::json{{"group", r.group->id}, {"name", r.group->name}, {"score", r.score}, {"bprs", bprs}};
}

}  // namespace kirett

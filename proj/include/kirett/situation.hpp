#pragma once

// Deterministic situation detection: a linear score over questionnaire answers
// plus vitals rule bonuses, ranking disease groups as treatment entry points.
// Questions, weights and rules are data carried in the graph file's
// "questionnaire" section.

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "kirett/graph.hpp"

namespace kirett {

class SituationError : public std::runtime_error {
 public:
  enum class Code { Malformed, OutOfDomain, UnknownGroup, EmptyScore };
  SituationError(Code code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct Question {
  std::string id;
  std::string text;
  /// Empty for boolean questions; otherwise the enumerated answer domain.
  std::vector<std::string> values;
  /// Enumerated answers that count as a positive indicator.
  std::vector<std::string> positive;
  std::map<std::string, double> weights;

  bool is_boolean() const { return values.empty(); }
};

enum class Comparator { Less, LessEqual, Greater, GreaterEqual, Equal };

struct VitalsRule {
  std::string parameter;
  Comparator comparator = Comparator::Less;
  double threshold = 0;
  std::string group;
  double bonus = 0;

  bool matches(double reading) const;
};

struct Questionnaire {
  std::vector<std::string> groups;
  std::vector<Question> questions;
  std::vector<VitalsRule> rules;

  const Question* find(std::string_view id) const;
};

/// Parses and checks the section: weight vectors cover exactly the groups,
/// weights and bonuses are non-negative, positive answers lie in the domain.
Questionnaire parse_questionnaire(const nlohmann::json& section);
/// Reads the "questionnaire" extension and checks every group is a
/// DiseaseGroup node of the graph.
Questionnaire questionnaire_from_graph(const Graph& graph);

using Answer = std::variant<bool, std::string>;
using Answers = std::map<std::string, Answer, std::less<>>;
using VitalsSnapshot = std::map<std::string, double, std::less<>>;

/// Accepts booleans for boolean questions and strings for enumerated ones.
Answers parse_answers(const nlohmann::json& answers);
VitalsSnapshot parse_vitals_snapshot(const nlohmann::json& vitals);

struct SituationScore {
  std::map<std::string, double> scores;

  /// Descending score, ties by group id.
  std::vector<std::string> ranking() const;
};

/// Unanswered questions contribute nothing. Throws OutOfDomain for an answer
/// outside its question's domain or for an unknown question id.
SituationScore score(const Questionnaire& q, const Answers& answers, const VitalsSnapshot& vitals);

struct EntryRecommendation {
  const Node* group;
  double score;
  std::vector<const Node*> bprs;
};

/// Top-k groups by ranking, each with the BPRs it links to.
std::vector<EntryRecommendation> recommend_entry(const Graph& graph, const SituationScore& s,
                                                 std::size_t k);

void to_json(nlohmann::json& j, const SituationScore& s);
void to_json(nlohmann::json& j, const EntryRecommendation& r);

}  // namespace kirett

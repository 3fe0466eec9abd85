// Copyright 2026 The tadbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tadbench/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace tadbench {

namespace {

std::string describe(const std::vector<StructureViolation>& violations) {
  std::string out = "problem does not match its task schema";
  for (const auto& v : violations) out += "; " + v.detail;
  return out;
}

// End of the balanced object starting at text[open] (which is '{'), honoring
// JSON string literals. npos if unbalanced.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

Json require_object(std::string_view text) {
  auto obj = extract_json_object(text);
  if (!obj) throw NoJsonFound();
  return std::move(*obj);
}

std::optional<std::vector<std::string>> string_list(const Json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) return std::nullopt;
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Integer answers: JSON integers, or strings carrying exactly one integer
// ("4", "Option 4", "Sentence 4").
std::optional<int> lenient_index(const Json& j) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d == static_cast<int>(d)) return static_cast<int>(d);
    return std::nullopt;
  }
  if (!j.is_string()) return std::nullopt;
  static const std::regex digits("[0-9]+");
  const auto& s = j.get_ref<const std::string&>();
  auto begin = std::sregex_iterator(s.begin(), s.end(), digits);
  auto end = std::sregex_iterator();
  if (std::distance(begin, end) != 1) return std::nullopt;
  return std::stoi(begin->str());
}

std::optional<bool> lenient_flag(const Json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (!j.is_string()) return std::nullopt;
  const std::string s = lower(trim(j.get<std::string>()));
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}

std::optional<std::string> text_of(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_null()) return std::nullopt;
  // Models sometimes return structured feedback; keep it as compact JSON text.
  return j.dump();
}

}  // namespace

SchemaMismatch::SchemaMismatch(std::vector<StructureViolation> violations)
    : ParseError(describe(violations)), violations_(std::move(violations)) {}

std::optional<Json> extract_json_object(std::string_view text) {
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    const std::size_t close = matching_brace(text, pos);
    if (close != std::string_view::npos) {
      Json parsed = Json::parse(text.substr(pos, close - pos + 1), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    ++pos;
  }
  return std::nullopt;
}

ProblemInstance parse_problem(std::string_view text, const ProblemOrigin& origin) {
  const Json j = require_object(text);
  const TaskSchema& schema = schema_for(origin.task);
  std::vector<StructureViolation> missing;

  ProblemInstance inst;
  inst.task = origin.task;
  inst.instance_id = origin.instance_id;
  inst.lineage_id = origin.lineage_id;
  inst.meta.difficulty = origin.tier;

  if (auto ctx = j.contains("context") ? string_list(j["context"]) : std::nullopt) {
    inst.context = std::move(*ctx);
  } else {
    missing.push_back({ViolationKind::ContextArity, "\"context\" must be an array of strings"});
  }

  if (j.contains("choices") && !j["choices"].is_null()) {
    if (auto choices = string_list(j["choices"])) {
      inst.choices = std::move(*choices);
    } else {
      missing.push_back({ViolationKind::ChoiceArity, "\"choices\" must be an array of strings"});
    }
  }

  const std::string field(schema.answer_field());
  const Json* answer = j.contains(field) ? &j[field] : nullptr;
  if (schema.answer_form == AnswerForm::Flag) {
    if (answer != nullptr && answer->is_boolean()) {
      inst.answer_key = AnswerKey::flag(answer->get<bool>());
    } else {
      missing.push_back({ViolationKind::AnswerForm, "\"" + field + "\" must be a boolean"});
    }
  } else {
    if (answer != nullptr && answer->is_number_integer()) {
      inst.answer_key = AnswerKey::index(answer->get<int>());
    } else {
      missing.push_back({ViolationKind::AnswerForm, "\"" + field + "\" must be an integer"});
    }
  }

  if (j.contains("meta") && j["meta"].is_object()) {
    const Json& meta = j["meta"];
    if (meta.contains("source") && meta["source"].is_string()) {
      inst.meta.source = meta["source"].get<std::string>();
    }
    if (meta.contains("topic") && meta["topic"].is_string()) {
      inst.meta.topic = meta["topic"].get<std::string>();
    }
    if (meta.contains("anomaly_type") && meta["anomaly_type"].is_string()) {
      inst.meta.anomaly_type = meta["anomaly_type"].get<std::string>();
    }
  } else {
    missing.push_back({ViolationKind::TopicNotPermitted, "\"meta\" object is missing"});
  }

  if (!missing.empty()) throw SchemaMismatch(std::move(missing));
  if (auto violations = validate_structure(inst); !violations.empty()) {
    throw SchemaMismatch(std::move(violations));
  }
  return inst;
}

ValidationReport parse_validation(std::string_view text, ValidationPhase phase) {
  const Json j = require_object(text);
  if (!j.contains("approved") || !j["approved"].is_boolean()) throw MissingApprovedField();
  const bool approved = j["approved"].get<bool>();

  std::optional<std::string> feedback;
  if (j.contains("feedback")) feedback = text_of(j["feedback"]);
  if (feedback && trim(*feedback).empty()) feedback.reset();

  ValidationReport report;
  if (approved) {
    // Praise attached to an approval is not feedback in the protocol sense.
    report = ValidationReport::approve(phase);
  } else {
    if (!feedback) throw InconsistentReport("rejection without feedback");
    report = ValidationReport::reject(phase, *feedback);
  }
  if (j.contains("scores") && j["scores"].is_object()) {
    report.scores = parse_quality_scores(j["scores"].dump());
  }
  return report;
}

EscalationFeedback parse_feedback(std::string_view text) {
  const Json j = require_object(text);
  EscalationFeedback fb;
  if (!j.contains("analysis") || !j["analysis"].is_string()) throw MissingField("analysis");
  fb.analysis = j["analysis"].get<std::string>();
  auto suggestions = j.contains("suggestions") ? string_list(j["suggestions"]) : std::nullopt;
  if (!suggestions || suggestions->empty()) throw MissingField("suggestions");
  fb.suggestions = std::move(*suggestions);
  if (!j.contains("difficulty_increase") || !j["difficulty_increase"].is_string()) {
    throw MissingField("difficulty_increase");
  }
  fb.difficulty_increase = j["difficulty_increase"].get<std::string>();
  return fb;
}

StudentAnswer parse_student_answer(std::string_view text, TaskType task) {
  auto j = extract_json_object(text);
  if (!j || !j->contains("answer")) return StudentAnswer::unparsable(std::string(text));
  const Json& raw = (*j)["answer"];
  std::string explanation;
  if (j->contains("explanation") && (*j)["explanation"].is_string()) {
    explanation = (*j)["explanation"].get<std::string>();
  }
  if (schema_for(task).answer_form == AnswerForm::Flag) {
    if (auto flag = lenient_flag(raw)) {
      return StudentAnswer::parsed(AnswerKey::flag(*flag), std::move(explanation));
    }
  } else if (auto index = lenient_index(raw)) {
    return StudentAnswer::parsed(AnswerKey::index(*index), std::move(explanation));
  }
  return StudentAnswer::unparsable(std::string(text));
}

QualityScores parse_quality_scores(std::string_view text) {
  const Json j = require_object(text);
  auto axis = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_number_integer()) throw MissingField(name);
    const int v = j[name].get<int>();
    if (v < 1 || v > 5) {
      throw InconsistentReport(std::string(name) + " score " + std::to_string(v) +
                               " outside 1..5");
    }
    return v;
  };
  return QualityScores{axis("validity"), axis("coherence"), axis("fairness")};
}

}  // namespace tadbench

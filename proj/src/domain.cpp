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

#include "tadbench/domain.hpp"

#include <algorithm>
#include <cctype>

namespace tadbench {

namespace {

constexpr std::array<std::string_view, 7> kTaskNames = {"T1", "T2", "T3", "T4",
                                                        "T5", "T6", "T7"};
constexpr std::array<std::string_view, 4> kTierNames = {"easy", "hard",
                                                        "extreme", "impossible"};

template <typename Enum, std::size_t N>
Enum enum_from_json(const Json& j,
                    const std::array<std::string_view, N>& names,
                    std::string_view what) {
  const auto& text = j.get_ref<const std::string&>();
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  throw InvariantError("unknown " + std::string(what) + " '" + text + "'");
}

constexpr std::array<std::string_view, 2> kPhaseNames = {"initial", "scaled"};
constexpr std::array<std::string_view, 3> kOutcomeNames = {"solved", "failed",
                                                           "not_attempted"};
constexpr std::array<std::string_view, 3> kStopNames = {
    "student_failed", "student_loop_cap_reached", "regeneration_exhausted"};

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::string_view to_string(TaskType task) {
  return kTaskNames[static_cast<std::size_t>(task)];
}

std::optional<TaskType> parse_task(std::string_view text) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
    if (kTaskNames[i] == text) return static_cast<TaskType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Tier tier) {
  return kTierNames[static_cast<std::size_t>(tier)];
}

std::optional<Tier> parse_tier(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (std::size_t i = 0; i < kTierNames.size(); ++i) {
    if (kTierNames[i] == lower) return static_cast<Tier>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ValidationPhase phase) {
  return kPhaseNames[static_cast<std::size_t>(phase)];
}
std::string_view to_string(StageOutcome outcome) {
  return kOutcomeNames[static_cast<std::size_t>(outcome)];
}
std::string_view to_string(StopReason reason) {
  return kStopNames[static_cast<std::size_t>(reason)];
}

std::string AnswerKey::to_display() const {
  if (is_flag()) return flag() ? "True" : "False";
  return "Option " + std::to_string(index());
}

ValidationReport ValidationReport::approve(ValidationPhase phase) {
  ValidationReport r;
  r.approved = true;
  r.phase = phase;
  return r;
}

ValidationReport ValidationReport::reject(ValidationPhase phase,
                                          std::string feedback) {
  if (feedback.empty()) {
    throw InvariantError("a rejected validation report needs feedback");
  }
  ValidationReport r;
  r.approved = false;
  r.feedback = std::move(feedback);
  r.phase = phase;
  return r;
}

StudentAnswer StudentAnswer::parsed(AnswerKey answer, std::string explanation) {
  return StudentAnswer{answer, std::move(explanation), true};
}

StudentAnswer StudentAnswer::unparsable(std::string raw_text) {
  return StudentAnswer{std::nullopt, std::move(raw_text), false};
}

std::vector<BenchmarkItem> Trajectory::items() const {
  std::vector<BenchmarkItem> out;
  out.reserve(stages.size());
  for (const auto& stage : stages) {
    if (stage.instance.instance_id == finalized.instance.instance_id) {
      out.push_back(finalized);
      continue;
    }
    BenchmarkItem item = finalized;
    item.instance = stage.instance;
    item.final = false;
    item.validation = stage.validation;
    item.provenance.timestamps.generated_at_call = stage.generated_at_call;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<std::string> trajectory_violations(const Trajectory& t) {
  std::vector<std::string> out;
  if (t.stages.empty()) {
    out.emplace_back("trajectory has no stages");
    return out;
  }
  if (t.stages.front().instance.meta.difficulty != Tier::Easy) {
    out.emplace_back("first stage is not easy");
  }
  for (std::size_t i = 0; i < t.stages.size(); ++i) {
    const auto& s = t.stages[i];
    if (!s.validation.approved) {
      out.push_back("stage " + std::to_string(i) + " is not approved");
    }
    if (s.instance.lineage_id != t.lineage_id) {
      out.push_back("stage " + std::to_string(i) + " belongs to another lineage");
    }
    if (i > 0) {
      int prev = tier_ordinal(t.stages[i - 1].instance.meta.difficulty);
      int cur = tier_ordinal(s.instance.meta.difficulty);
      if (cur != prev + 1) {
        out.push_back("tiers are not consecutive at stage " + std::to_string(i));
      }
    }
  }
  if (!t.finalized.final) out.emplace_back("finalized item is not marked final");
  auto found = std::find_if(t.stages.begin(), t.stages.end(), [&](const Stage& s) {
    return s.instance.instance_id == t.finalized.instance.instance_id;
  });
  if (found == t.stages.end()) {
    out.emplace_back("finalized instance is not one of the stages");
  }
  if (t.finalized.stop_reason != t.stop_reason) {
    out.emplace_back("finalized item disagrees on stop reason");
  }
  return out;
}

// --- JSON ------------------------------------------------------------------

void to_json(Json& j, TaskType v) { j = std::string(to_string(v)); }
void from_json(const Json& j, TaskType& v) {
  v = enum_from_json<TaskType>(j, kTaskNames, "task");
}
void to_json(Json& j, Tier v) { j = std::string(to_string(v)); }
void from_json(const Json& j, Tier& v) {
  v = enum_from_json<Tier>(j, kTierNames, "tier");
}
void to_json(Json& j, ValidationPhase v) { j = std::string(to_string(v)); }
void from_json(const Json& j, ValidationPhase& v) {
  v = enum_from_json<ValidationPhase>(j, kPhaseNames, "validation phase");
}
void to_json(Json& j, StageOutcome v) { j = std::string(to_string(v)); }
void from_json(const Json& j, StageOutcome& v) {
  v = enum_from_json<StageOutcome>(j, kOutcomeNames, "stage outcome");
}
void to_json(Json& j, StopReason v) { j = std::string(to_string(v)); }
void from_json(const Json& j, StopReason& v) {
  v = enum_from_json<StopReason>(j, kStopNames, "stop reason");
}

void to_json(Json& j, const AnswerKey& v) {
  if (v.is_flag()) {
    j = Json{{"flag", v.flag()}};
  } else {
    j = Json{{"index", v.index()}};
  }
}

void from_json(const Json& j, AnswerKey& v) {
  if (j.contains("index")) {
    v = AnswerKey::index(j.at("index").get<int>());
  } else if (j.contains("flag")) {
    v = AnswerKey::flag(j.at("flag").get<bool>());
  } else {
    throw InvariantError("answer key needs 'index' or 'flag'");
  }
}

void to_json(Json& j, const ProblemMeta& v) {
  j = Json{{"source", v.source},
           {"topic", v.topic},
           {"anomaly_type", v.anomaly_type},
           {"difficulty", v.difficulty}};
}

void from_json(const Json& j, ProblemMeta& v) {
  j.at("source").get_to(v.source);
  j.at("topic").get_to(v.topic);
  j.at("anomaly_type").get_to(v.anomaly_type);
  j.at("difficulty").get_to(v.difficulty);
}

void to_json(Json& j, const ProblemInstance& v) {
  j = Json{{"task", v.task},
           {"context", v.context},
           {"choices", v.choices ? Json(*v.choices) : Json(nullptr)},
           {"answer_key", v.answer_key},
           {"meta", v.meta},
           {"instance_id", v.instance_id},
           {"lineage_id", v.lineage_id}};
}

void from_json(const Json& j, ProblemInstance& v) {
  j.at("task").get_to(v.task);
  j.at("context").get_to(v.context);
  v.choices = optional_field<std::vector<std::string>>(j, "choices");
  j.at("answer_key").get_to(v.answer_key);
  j.at("meta").get_to(v.meta);
  j.at("instance_id").get_to(v.instance_id);
  j.at("lineage_id").get_to(v.lineage_id);
}

void to_json(Json& j, const QualityScores& v) {
  j = Json{{"validity", v.validity},
           {"coherence", v.coherence},
           {"fairness", v.fairness}};
}

void from_json(const Json& j, QualityScores& v) {
  j.at("validity").get_to(v.validity);
  j.at("coherence").get_to(v.coherence);
  j.at("fairness").get_to(v.fairness);
  for (int s : {v.validity, v.coherence, v.fairness}) {
    if (s < 1 || s > 5) throw InvariantError("quality score outside 1..5");
  }
}

void to_json(Json& j, const ValidationReport& v) {
  j = Json{{"approved", v.approved},
           {"feedback", v.feedback ? Json(*v.feedback) : Json(nullptr)},
           {"scores", v.scores ? Json(*v.scores) : Json(nullptr)},
           {"phase", v.phase}};
}

void from_json(const Json& j, ValidationReport& v) {
  j.at("approved").get_to(v.approved);
  v.feedback = optional_field<std::string>(j, "feedback");
  v.scores = optional_field<QualityScores>(j, "scores");
  j.at("phase").get_to(v.phase);
  if (v.approved && v.feedback) {
    throw InvariantError("approved report carries feedback");
  }
  if (!v.approved && (!v.feedback || v.feedback->empty())) {
    throw InvariantError("rejected report has no feedback");
  }
}

void to_json(Json& j, const StudentAnswer& v) {
  j = Json{{"answer", v.answer ? Json(*v.answer) : Json(nullptr)},
           {"explanation", v.explanation},
           {"parse_ok", v.parse_ok}};
}

void from_json(const Json& j, StudentAnswer& v) {
  v.answer = optional_field<AnswerKey>(j, "answer");
  j.at("explanation").get_to(v.explanation);
  j.at("parse_ok").get_to(v.parse_ok);
  if (!v.parse_ok && v.answer) {
    throw InvariantError("unparsable student answer carries an answer");
  }
}

void to_json(Json& j, const EscalationFeedback& v) {
  j = Json{{"analysis", v.analysis},
           {"suggestions", v.suggestions},
           {"difficulty_increase", v.difficulty_increase}};
}

void from_json(const Json& j, EscalationFeedback& v) {
  j.at("analysis").get_to(v.analysis);
  j.at("suggestions").get_to(v.suggestions);
  j.at("difficulty_increase").get_to(v.difficulty_increase);
}

void to_json(Json& j, const Stage& v) {
  j = Json{{"instance", v.instance},
           {"validation", v.validation},
           {"student", v.student ? Json(*v.student) : Json(nullptr)},
           {"outcome", v.outcome},
           {"generated_at_call", v.generated_at_call}};
}

void from_json(const Json& j, Stage& v) {
  j.at("instance").get_to(v.instance);
  j.at("validation").get_to(v.validation);
  v.student = optional_field<StudentAnswer>(j, "student");
  j.at("outcome").get_to(v.outcome);
  j.at("generated_at_call").get_to(v.generated_at_call);
}

void to_json(Json& j, const Provenance& v) {
  j = Json{{"teacher_model", v.teacher_model},
           {"student_model", v.student_model},
           {"orchestrator_model", v.orchestrator_model},
           {"timestamps",
            {{"generated_at_call", v.timestamps.generated_at_call},
             {"finalized_at_call", v.timestamps.finalized_at_call}}},
           {"attempt_counts",
            {{"init_attempts", v.attempt_counts.init_attempts},
             {"regen_attempts", v.attempt_counts.regen_attempts},
             {"student_calls", v.attempt_counts.student_calls}}}};
}

void from_json(const Json& j, Provenance& v) {
  j.at("teacher_model").get_to(v.teacher_model);
  j.at("student_model").get_to(v.student_model);
  j.at("orchestrator_model").get_to(v.orchestrator_model);
  const auto& ts = j.at("timestamps");
  ts.at("generated_at_call").get_to(v.timestamps.generated_at_call);
  ts.at("finalized_at_call").get_to(v.timestamps.finalized_at_call);
  const auto& ac = j.at("attempt_counts");
  ac.at("init_attempts").get_to(v.attempt_counts.init_attempts);
  ac.at("regen_attempts").get_to(v.attempt_counts.regen_attempts);
  ac.at("student_calls").get_to(v.attempt_counts.student_calls);
}

void to_json(Json& j, const BenchmarkItem& v) {
  j = Json{{"instance", v.instance},
           {"lineage_id", v.lineage_id},
           {"final", v.final},
           {"validation", v.validation},
           {"provenance", v.provenance},
           {"stop_reason", v.stop_reason}};
}

void from_json(const Json& j, BenchmarkItem& v) {
  j.at("instance").get_to(v.instance);
  j.at("lineage_id").get_to(v.lineage_id);
  j.at("final").get_to(v.final);
  j.at("validation").get_to(v.validation);
  j.at("provenance").get_to(v.provenance);
  j.at("stop_reason").get_to(v.stop_reason);
}

void to_json(Json& j, const Trajectory& v) {
  j = Json{{"lineage_id", v.lineage_id},
           {"task", v.task},
           {"stages", v.stages},
           {"finalized", v.finalized},
           {"stop_reason", v.stop_reason}};
}

void from_json(const Json& j, Trajectory& v) {
  j.at("lineage_id").get_to(v.lineage_id);
  j.at("task").get_to(v.task);
  j.at("stages").get_to(v.stages);
  j.at("finalized").get_to(v.finalized);
  j.at("stop_reason").get_to(v.stop_reason);
}

}  // namespace tadbench

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

#include "tadbench/scripted.hpp"

#include <algorithm>
#include <climits>
#include <cstdint>
#include <regex>

#include "tadbench/taskspec.hpp"

namespace tadbench {

namespace {

// FNV-1a: stable across platforms and standard libraries, unlike std::hash.
std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t context_hash(const CallContext& ctx) {
  return fnv1a(ctx.lineage_id + "|" + std::string(to_string(ctx.task)) + "|" +
               std::string(to_string(ctx.tier)) + "|" + std::to_string(ctx.attempt) + "|" +
               std::to_string(ctx.lineage_index));
}

template <typename T, typename Parse>
std::optional<T> optional_field(const Json& j, const char* key, Parse parse) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  auto parsed = parse(j[key].template get<std::string>());
  if (!parsed) {
    throw std::invalid_argument(std::string("script: bad value for \"") + key + "\"");
  }
  return parsed;
}

std::optional<int> optional_int(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<int>();
}

std::optional<ValidationPhase> parse_phase(std::string_view text) {
  if (text == "initial") return ValidationPhase::Initial;
  if (text == "scaled") return ValidationPhase::Scaled;
  return std::nullopt;
}

AnswerKey wrong_answer(const ProblemInstance& inst) {
  if (inst.answer_key.is_flag()) return AnswerKey::flag(!inst.answer_key.flag());
  const int arity = schema_for(inst.task).answer_arity(static_cast<int>(inst.context.size()));
  return AnswerKey::index(inst.answer_key.index() % arity + 1);
}

std::string answer_reply(const AnswerKey& key, const std::string& explanation) {
  Json j;
  if (key.is_flag()) {
    j["answer"] = key.flag();
  } else {
    j["answer"] = key.index();
  }
  j["explanation"] = explanation;
  return j.dump();
}

}  // namespace

std::optional<StudentBehavior> parse_student_behavior(std::string_view text) {
  if (text == "correct") return StudentBehavior::Correct;
  if (text == "wrong") return StudentBehavior::Wrong;
  if (text == "refuse") return StudentBehavior::Refuse;
  if (text == "key_even") return StudentBehavior::KeyEven;
  return std::nullopt;
}

std::string to_string(const TraceEntry& e) {
  return std::string(to_string(e.role)) + ":" + std::string(to_string(e.purpose)) + ":" +
         std::string(to_string(e.task)) + ":" + std::string(to_string(e.tier)) + ":" +
         e.lineage_id + ":" + std::to_string(e.attempt);
}

ProblemInstance synthesize_instance(const CallContext& ctx) {
  const TaskSchema& schema = schema_for(ctx.task);
  const std::uint64_t h = context_hash(ctx);
  const std::string tier(to_string(ctx.tier));
  const std::string tag = ctx.lineage_id + ", " + tier + ", draft " + std::to_string(ctx.attempt);

  ProblemInstance inst;
  inst.task = ctx.task;
  inst.meta.topic = ctx.topic;
  inst.meta.anomaly_type = ctx.factor.value_or("unspecified");
  inst.meta.difficulty = ctx.tier;

  int n_context = schema.context_arity.min;
  if (schema.context_arity.max > schema.context_arity.min) {
    n_context += static_cast<int>((h >> 8) % static_cast<std::uint64_t>(
                                      schema.context_arity.max - schema.context_arity.min + 1));
  }
  const int arity = schema.answer_arity(n_context);
  const int anomaly = 1 + static_cast<int>(h % static_cast<std::uint64_t>(arity));

  if (ctx.task == TaskType::T3) {
    inst.context = {"Scholars of " + ctx.topic + " describe the argument as ___ (" + tag + ")."};
  } else if (ctx.task == TaskType::T4) {
    inst.context = {"First paragraph on " + ctx.topic + " (" + tag + ").",
                    "Second paragraph on " + ctx.topic + " (" + tag + ")."};
  } else {
    for (int i = 1; i <= n_context; ++i) {
      const bool odd_one = schema.answer_form == AnswerForm::Index && i == anomaly;
      inst.context.push_back(odd_one ? "An unrelated remark on the weather (" + tag + ")."
                                     : "Point " + std::to_string(i) + " on " + ctx.topic +
                                           " (" + tag + ").");
    }
  }
  if (schema.choice_arity) {
    std::vector<std::string> choices;
    for (int i = 1; i <= *schema.choice_arity; ++i) {
      choices.push_back(i == anomaly ? "an ill-fitting option" : "fitting option " +
                                                                      std::to_string(i));
    }
    inst.choices = std::move(choices);
  }
  if (schema.answer_form == AnswerForm::Flag) {
    inst.answer_key = AnswerKey::flag(ctx.order_consistent_target.value_or(((h >> 16) & 1U) != 0));
  } else {
    inst.answer_key = AnswerKey::index(anomaly);
  }
  return inst;
}

std::shared_ptr<Script> Script::from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("script must be a JSON object");
  auto s = std::make_shared<Script>();
  try {
    s->id_ = j.value("script_id", std::string("scripted"));

    if (j.contains("teacher")) {
      for (const auto& o : j["teacher"].value("overrides", Json::array())) {
        TeacherOverride t;
        t.task = optional_field<TaskType>(o, "task", parse_task);
        t.difficulty = optional_field<Tier>(o, "difficulty", parse_tier);
        t.attempt = optional_int(o, "attempt");
        t.lineage_index = optional_int(o, "lineage_index");
        t.text = o.at("text").get<std::string>();
        s->teacher_overrides_.push_back(std::move(t));
      }
    }

    s->canned_feedback_ = EscalationFeedback{
        "The solver spotted the anomaly because it was lexically distinct from its "
        "neighbours.",
        {"Keep the anomalous segment on-topic at the surface level.",
         "Make the inconsistency depend on a detail introduced earlier."},
        "Hide the anomaly behind shared vocabulary so it requires inference to detect."};
    if (j.contains("orchestrator")) {
      const Json& o = j["orchestrator"];
      const std::string def = o.value("default", std::string("approve"));
      if (def != "approve" && def != "reject") {
        throw std::invalid_argument("orchestrator default must be approve or reject");
      }
      s->orchestrator_default_approve_ = def == "approve";
      for (const auto& r : o.value("rules", Json::array())) {
        OrchestratorRule rule;
        rule.task = optional_field<TaskType>(r, "task", parse_task);
        rule.lineage_index = optional_int(r, "lineage_index");
        rule.phase = optional_field<ValidationPhase>(r, "phase", parse_phase);
        rule.tier = optional_field<Tier>(r, "tier", parse_tier);
        const Json& n = r.at("reject_attempts");
        rule.reject_attempts = n.is_string() && n.get<std::string>() == "all" ? INT_MAX
                                                                              : n.get<int>();
        if (r.contains("feedback")) rule.feedback = r["feedback"].get<std::string>();
        s->orchestrator_rules_.push_back(std::move(rule));
      }
      if (o.contains("feedback")) s->canned_feedback_ = o["feedback"].get<EscalationFeedback>();
    }

    if (j.contains("student")) {
      const Json& st = j["student"];
      if (st.contains("default")) {
        auto b = parse_student_behavior(st["default"].get<std::string>());
        if (!b) throw std::invalid_argument("unknown student behavior");
        s->student_default_ = *b;
      }
      s->student_fail_from_ = optional_field<Tier>(st, "fail_from_tier", parse_tier);
      for (const auto& r : st.value("rules", Json::array())) {
        StudentRule rule;
        rule.task = optional_field<TaskType>(r, "task", parse_task);
        rule.lineage_index = optional_int(r, "lineage_index");
        rule.behavior = optional_field<StudentBehavior>(r, "behavior", parse_student_behavior);
        rule.fail_from_tier = optional_field<Tier>(r, "fail_from_tier", parse_tier);
        s->student_rules_.push_back(std::move(rule));
      }
      for (const auto& e : st.value("solve_table", Json::array())) {
        SolveEntry entry{e.at("pattern").get<std::string>(), e.at("text").get<std::string>()};
        std::regex check(entry.pattern);  // reject bad patterns up front
        s->solve_table_.push_back(std::move(entry));
      }
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed script: ") + e.what());
  } catch (const std::regex_error& e) {
    throw std::invalid_argument(std::string("bad solve_table pattern: ") + e.what());
  }
  return s;
}

std::string Script::respond(Role role, const CallContext& ctx) {
  {
    std::lock_guard lock(mu_);
    trace_.push_back(TraceEntry{role, ctx.purpose, ctx.task, ctx.tier, ctx.lineage_id,
                                ctx.attempt});
  }
  switch (role) {
    case Role::Teacher: return teacher_reply(ctx);
    case Role::Orchestrator: return orchestrator_reply(ctx);
    case Role::Student: return student_reply(ctx);
  }
  return {};
}

std::string Script::teacher_reply(const CallContext& ctx) const {
  for (const auto& o : teacher_overrides_) {
    if (o.task && *o.task != ctx.task) continue;
    if (o.difficulty && *o.difficulty != ctx.tier) continue;
    if (o.attempt && *o.attempt != ctx.attempt) continue;
    if (o.lineage_index && *o.lineage_index != ctx.lineage_index) continue;
    return o.text;
  }
  return "```json\n" + render_problem_json(synthesize_instance(ctx)) + "\n```";
}

std::string Script::orchestrator_reply(const CallContext& ctx) const {
  if (ctx.purpose == CallPurpose::Feedback) return Json(canned_feedback_).dump();
  if (ctx.purpose == CallPurpose::QualityReview) {
    return R"({"validity": 5, "coherence": 4, "fairness": 5})";
  }
  const ValidationPhase phase = ctx.purpose == CallPurpose::ValidateScaled
                                    ? ValidationPhase::Scaled
                                    : ValidationPhase::Initial;
  for (const auto& r : orchestrator_rules_) {
    if (r.task && *r.task != ctx.task) continue;
    if (r.lineage_index && *r.lineage_index != ctx.lineage_index) continue;
    if (r.phase && *r.phase != phase) continue;
    if (r.tier && *r.tier != ctx.tier) continue;
    if (ctx.attempt <= r.reject_attempts) {
      return Json{{"approved", false}, {"feedback", r.feedback}}.dump();
    }
    return R"({"approved": true, "feedback": null})";
  }
  if (orchestrator_default_approve_) return R"({"approved": true, "feedback": null})";
  return R"({"approved": false, "feedback": "Rejected by script default."})";
}

std::string Script::student_reply(const CallContext& ctx) const {
  if (!ctx.instance) return "I need a problem to solve.";
  const ProblemInstance& inst = *ctx.instance;
  for (const auto& e : solve_table_) {
    if (std::regex_search(inst.instance_id, std::regex(e.pattern))) return e.text;
  }

  StudentBehavior behavior = student_default_;
  std::optional<Tier> fail_from = student_fail_from_;
  for (const auto& r : student_rules_) {
    if (r.task && *r.task != ctx.task) continue;
    if (r.lineage_index && *r.lineage_index != ctx.lineage_index) continue;
    if (r.behavior) behavior = *r.behavior;
    if (r.fail_from_tier) fail_from = r.fail_from_tier;
    break;
  }
  if (fail_from && tier_ordinal(inst.meta.difficulty) >= tier_ordinal(*fail_from)) {
    behavior = StudentBehavior::Wrong;
  }

  switch (behavior) {
    case StudentBehavior::Correct:
      return answer_reply(inst.answer_key, "The marked segment breaks the passage's pattern.");
    case StudentBehavior::Wrong:
      return answer_reply(wrong_answer(inst), "A guess.");
    case StudentBehavior::Refuse:
      return "I'm sorry, but I can't determine an answer for this one.";
    case StudentBehavior::KeyEven: {
      const bool knows = inst.answer_key.is_flag() ? inst.answer_key.flag()
                                                   : inst.answer_key.index() % 2 == 0;
      return knows ? answer_reply(inst.answer_key, "Even keys are easy for me.")
                   : answer_reply(wrong_answer(inst), "Odd keys confuse me.");
    }
  }
  return {};
}

std::vector<TraceEntry> Script::trace() const {
  std::lock_guard lock(mu_);
  return trace_;
}

std::vector<TraceEntry> Script::trace_for(const std::string& lineage_id) const {
  std::lock_guard lock(mu_);
  std::vector<TraceEntry> out;
  std::copy_if(trace_.begin(), trace_.end(), std::back_inserter(out),
               [&](const TraceEntry& e) { return e.lineage_id == lineage_id; });
  return out;
}

std::size_t Script::count(Role role, CallPurpose purpose) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      trace_.begin(), trace_.end(),
      [&](const TraceEntry& e) { return e.role == role && e.purpose == purpose; }));
}

std::string ScriptedBackend::complete(const PromptText& prompt, const CallContext& ctx,
                                      const DecodeParams&) {
  if (prompt.messages.empty()) throw RequestError("empty prompt");
  return script_->respond(role_, ctx);
}

AgentHandle scripted_agent(Role role, std::shared_ptr<Script> script, std::string model_name) {
  if (model_name.empty()) model_name = "scripted-" + std::string(to_string(role));
  return AgentHandle(role, std::move(model_name),
                     std::make_shared<ScriptedBackend>(role, std::move(script)));
}

}  // namespace tadbench

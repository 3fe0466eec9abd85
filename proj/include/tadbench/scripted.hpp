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

// Deterministic offline test doubles for all three roles.
//
// A script is plain JSON:
//
//   {
//     "script_id": "ladder",
//     "teacher": {
//       "overrides": [{"task": "T1", "difficulty": "easy", "attempt": 1,
//                      "lineage_index": 0, "text": "..."}]
//     },
//     "orchestrator": {
//       "default": "approve",
//       "rules": [{"task": "T1", "lineage_index": 0, "phase": "scaled",
//                  "tier": "hard", "reject_attempts": "all",
//                  "feedback": "..."}],
//       "feedback": {"analysis": "...", "suggestions": ["..."],
//                    "difficulty_increase": "..."}
//     },
//     "student": {
//       "default": "correct",          // correct | wrong | refuse | key_even
//       "fail_from_tier": "extreme",   // optional
//       "rules": [{"task": "T1", "lineage_index": 0, "behavior": "wrong",
//                  "fail_from_tier": "hard"}],
//       "solve_table": [{"pattern": "^T3-", "text": "..."}]
//     }
//   }
//
// Without an override the Teacher synthesizes a structurally valid instance
// from the call context, so every reply is a pure function of that context.

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tadbench/agent.hpp"

namespace tadbench {

enum class StudentBehavior { Correct, Wrong, Refuse, KeyEven };

std::optional<StudentBehavior> parse_student_behavior(std::string_view text);

struct TraceEntry {
  Role role = Role::Teacher;
  CallPurpose purpose = CallPurpose::Generate;
  TaskType task = TaskType::T1;
  Tier tier = Tier::Easy;
  std::string lineage_id;
  int attempt = 1;

  bool operator==(const TraceEntry&) const = default;
};

std::string to_string(const TraceEntry& entry);

/// Parsed script plus the shared call trace of every backend built from it.
class Script {
 public:
  // Throws std::invalid_argument on malformed scripts.
  static std::shared_ptr<Script> from_json(const Json& script);

  const std::string& id() const { return id_; }

  std::string respond(Role role, const CallContext& ctx);

  std::vector<TraceEntry> trace() const;
  // Trace restricted to one lineage; sequential regardless of concurrency.
  std::vector<TraceEntry> trace_for(const std::string& lineage_id) const;
  std::size_t count(Role role, CallPurpose purpose) const;

  struct TeacherOverride {
    std::optional<TaskType> task;
    std::optional<Tier> difficulty;
    std::optional<int> attempt;
    std::optional<int> lineage_index;
    std::string text;
  };
  struct OrchestratorRule {
    std::optional<TaskType> task;
    std::optional<int> lineage_index;
    std::optional<ValidationPhase> phase;
    std::optional<Tier> tier;
    int reject_attempts = 0;  // INT_MAX for "all"
    std::string feedback = "The anomaly is ambiguous; make exactly one segment anomalous.";
  };
  struct StudentRule {
    std::optional<TaskType> task;
    std::optional<int> lineage_index;
    std::optional<StudentBehavior> behavior;
    std::optional<Tier> fail_from_tier;
  };
  struct SolveEntry {
    std::string pattern;
    std::string text;
  };

 private:
  std::string teacher_reply(const CallContext& ctx) const;
  std::string orchestrator_reply(const CallContext& ctx) const;
  std::string student_reply(const CallContext& ctx) const;

  std::string id_ = "scripted";
  std::vector<TeacherOverride> teacher_overrides_;
  bool orchestrator_default_approve_ = true;
  std::vector<OrchestratorRule> orchestrator_rules_;
  EscalationFeedback canned_feedback_;
  StudentBehavior student_default_ = StudentBehavior::Correct;
  std::optional<Tier> student_fail_from_;
  std::vector<StudentRule> student_rules_;
  std::vector<SolveEntry> solve_table_;

  mutable std::mutex mu_;
  std::vector<TraceEntry> trace_;
};

class ScriptedBackend : public CompletionBackend {
 public:
  ScriptedBackend(Role role, std::shared_ptr<Script> script)
      : role_(role), script_(std::move(script)) {}

  std::string complete(const PromptText& prompt, const CallContext& ctx,
                       const DecodeParams& params) override;
  bool offline() const override { return true; }

 private:
  Role role_;
  std::shared_ptr<Script> script_;
};

AgentHandle scripted_agent(Role role, std::shared_ptr<Script> script,
                           std::string model_name = "");

// The instance the synthetic Teacher produces for a generation context.
// Exposed so tests can predict generated content.
ProblemInstance synthesize_instance(const CallContext& ctx);

}  // namespace tadbench

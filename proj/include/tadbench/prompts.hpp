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

// Prompt builders for the three agent roles. Every builder is a pure function
// of its inputs: identical arguments give byte-identical prompts.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadbench/domain.hpp"
#include "tadbench/taskspec.hpp"

namespace tadbench {

enum class MessageRole { System, User };

std::string_view to_string(MessageRole role);

struct Message {
  MessageRole role = MessageRole::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

/// Ordered chat messages. Holds at least one non-empty user message.
struct PromptText {
  std::vector<Message> messages;

  // Contents joined with blank lines; what scripted backends and transcripts see.
  std::string flatten() const;

  bool operator==(const PromptText&) const = default;
};

/// Throws PromptPrecondition if user_content is empty.
PromptText make_user_prompt(std::string user_content);

/// A builder was called outside its documented precondition.
class PromptPrecondition : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rejection feedback carried into a regeneration attempt.
struct RevisionNote {
  std::string feedback;
  // Escalated tiers only: ask for a slightly easier variant, same tier label.
  bool soften = false;
};

struct GenerationRequest {
  TaskType task = TaskType::T1;
  std::string topic;
  std::optional<ChallengeFactor> factor;
  Tier difficulty = Tier::Easy;
  std::optional<EscalationFeedback> escalation;
  // The solved instance being escalated; shown to the Teacher when present.
  std::optional<ProblemInstance> previous;
  std::optional<RevisionNote> revision;
  // T2 only: which answer the generated paragraph must carry.
  std::optional<bool> order_consistent_target;
};

PromptText build_generation_prompt(const GenerationRequest& request);
PromptText build_generation_prompt(TaskType task, const std::string& topic,
                                   const std::optional<ChallengeFactor>& factor,
                                   Tier difficulty,
                                   const std::optional<EscalationFeedback>& escalation);

PromptText build_initial_validation_prompt(const ProblemInstance& inst);
// Precondition: tier > Easy.
PromptText build_scaled_validation_prompt(const ProblemInstance& inst, Tier tier);
// Precondition: the answer parsed and grades Correct against inst.
PromptText build_feedback_prompt(const ProblemInstance& inst, const StudentAnswer& student);
PromptText build_solve_prompt(const ProblemInstance& inst);
// Post-hoc audit path producing 1-5 quality scores; not part of the protocol loop.
PromptText build_quality_review_prompt(const ProblemInstance& inst);

// The generator's JSON contract for an instance, keys in schema order.
// With include_difficulty the meta block also carries the tier string.
std::string render_problem_json(const ProblemInstance& inst, bool include_difficulty = false);

}  // namespace tadbench

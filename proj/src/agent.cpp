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

#include "tadbench/agent.hpp"

#include <cstdlib>

#include "tadbench/parsing.hpp"

namespace tadbench {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Teacher: return "teacher";
    case Role::Orchestrator: return "orchestrator";
    case Role::Student: return "student";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "teacher") return Role::Teacher;
  if (text == "orchestrator") return Role::Orchestrator;
  if (text == "student") return Role::Student;
  return std::nullopt;
}

DecodeParams default_decode_params(Role role) {
  return DecodeParams{role == Role::Teacher ? 0.8 : 0.0, 2048};
}

std::string_view to_string(CallPurpose purpose) {
  switch (purpose) {
    case CallPurpose::Generate: return "generate";
    case CallPurpose::ValidateInitial: return "validate_initial";
    case CallPurpose::ValidateScaled: return "validate_scaled";
    case CallPurpose::Feedback: return "feedback";
    case CallPurpose::Solve: return "solve";
    case CallPurpose::QualityReview: return "quality_review";
  }
  return "unknown";
}

AgentHandle::AgentHandle(Role role, std::string model_name,
                         std::shared_ptr<CompletionBackend> backend,
                         std::optional<DecodeParams> params)
    : role_(role),
      model_name_(std::move(model_name)),
      backend_(std::move(backend)),
      params_(params.value_or(default_decode_params(role))) {
  if (!backend_) throw std::invalid_argument("agent handle requires a backend");
  if (params_.temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (params_.max_output_tokens <= 0) {
    throw std::invalid_argument("max_output_tokens must be positive");
  }
}

std::string AgentHandle::complete(const PromptText& prompt, const CallContext& ctx) const {
  if (!backend_) throw std::logic_error("agent handle has no backend");
  return backend_->complete(prompt, ctx, params_);
}

StudentAnswer solve(const AgentHandle& student, const ProblemInstance& inst) {
  CallContext ctx;
  ctx.task = inst.task;
  ctx.tier = inst.meta.difficulty;
  ctx.lineage_id = inst.lineage_id;
  ctx.topic = inst.meta.topic;
  return solve(student, inst, std::move(ctx));
}

StudentAnswer solve(const AgentHandle& student, const ProblemInstance& inst, CallContext ctx) {
  if (student.role() != Role::Student) {
    throw RoleMismatch("solve requires a student handle, got " +
                       std::string(to_string(student.role())));
  }
  ctx.purpose = CallPurpose::Solve;
  ctx.instance = inst;
  const std::string raw = student.complete(build_solve_prompt(inst), ctx);
  return parse_student_answer(raw, inst.task);
}

std::string resolve_credential(const std::string& env_name) {
  if (env_name.empty()) throw CredentialError("no credential variable configured");
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr || *value == '\0') {
    throw CredentialError("environment variable " + env_name + " is not set");
  }
  return value;
}

}  // namespace tadbench

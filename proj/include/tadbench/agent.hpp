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

// Role-bound agent handles over pluggable completion backends.

#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "tadbench/domain.hpp"
#include "tadbench/prompts.hpp"

namespace tadbench {

enum class Role { Teacher, Orchestrator, Student };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct DecodeParams {
  double temperature = 0.0;
  int max_output_tokens = 2048;
};

// Teacher 0.8, Orchestrator 0.0, Student 0.0.
DecodeParams default_decode_params(Role role);

enum class CallPurpose { Generate, ValidateInitial, ValidateScaled, Feedback, Solve, QualityReview };

std::string_view to_string(CallPurpose purpose);

/// Structured description of why a call is made. Wire backends ignore it
/// (they only see the prompt); scripted backends decide from it alone, which
/// keeps their output independent of scheduling.
struct CallContext {
  CallPurpose purpose = CallPurpose::Generate;
  TaskType task = TaskType::T1;
  Tier tier = Tier::Easy;
  std::string lineage_id;
  int lineage_index = 0;
  // 1-based attempt number within the current generation/validation loop.
  int attempt = 1;
  std::string topic;
  std::optional<std::string> factor;
  // The instance under validation, feedback or solving.
  std::optional<ProblemInstance> instance;
  std::optional<bool> order_consistent_target;
};

// --- errors ----------------------------------------------------------------

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network failure or 5xx; retryable.
class TransportError : public AgentError {
 public:
  using AgentError::AgentError;
};

/// HTTP 429; retryable, optionally with a server-provided delay.
class RateLimited : public AgentError {
 public:
  explicit RateLimited(std::string what,
                       std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
      : AgentError(std::move(what)), retry_after_(retry_after) {}
  std::optional<std::chrono::milliseconds> retry_after() const { return retry_after_; }

 private:
  std::optional<std::chrono::milliseconds> retry_after_;
};

/// HTTP 401/403; never retried.
class AuthError : public AgentError {
 public:
  using AgentError::AgentError;
};

/// Any other 4xx or an unreadable response body; not retried.
class RequestError : public AgentError {
 public:
  using AgentError::AgentError;
};

class EmptyCompletion : public AgentError {
 public:
  using AgentError::AgentError;
};

/// A configured credential environment variable is unset or empty.
class CredentialError : public AgentError {
 public:
  using AgentError::AgentError;
};

// --- backends --------------------------------------------------------------

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const PromptText& prompt, const CallContext& ctx,
                               const DecodeParams& params) = 0;
  // True if the backend never touches the network.
  virtual bool offline() const = 0;
};

/// A backend bound to one role. Copies share the backend.
class AgentHandle {
 public:
  AgentHandle() = default;
  AgentHandle(Role role, std::string model_name, std::shared_ptr<CompletionBackend> backend,
              std::optional<DecodeParams> params = std::nullopt);

  Role role() const { return role_; }
  const std::string& model_name() const { return model_name_; }
  const DecodeParams& params() const { return params_; }
  bool valid() const { return backend_ != nullptr; }
  bool offline() const { return backend_ && backend_->offline(); }

  std::string complete(const PromptText& prompt, const CallContext& ctx) const;

 private:
  Role role_ = Role::Student;
  std::string model_name_;
  std::shared_ptr<CompletionBackend> backend_;
  DecodeParams params_;
};

/// Thrown when a handle is used in a role it was not built for.
class RoleMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Builds the solve prompt, calls the Student and parses its reply. Parse
// failures become unparsable answers; transport errors propagate.
StudentAnswer solve(const AgentHandle& student, const ProblemInstance& inst);
StudentAnswer solve(const AgentHandle& student, const ProblemInstance& inst, CallContext ctx);

// Reads the named environment variable. Throws CredentialError when unset.
std::string resolve_credential(const std::string& env_name);

}  // namespace tadbench

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

// Shared vocabulary of the benchmarking protocol: task identities, difficulty
// tiers, problem instances, validator verdicts and problem lineages.
//
// Every type here is a plain value. The canonical on-disk encoding is a JSON
// object with snake_case field names; enumerations are encoded as strings
// ("T1".."T7", "easy".."impossible"). Indices are 1-based everywhere.

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace tadbench {

using Json = nlohmann::json;

enum class TaskType { T1, T2, T3, T4, T5, T6, T7 };

inline constexpr std::array<TaskType, 7> kAllTasks = {
    TaskType::T1, TaskType::T2, TaskType::T3, TaskType::T4,
    TaskType::T5, TaskType::T6, TaskType::T7};

std::string_view to_string(TaskType task);
std::optional<TaskType> parse_task(std::string_view text);
// 0-based position of the task in kAllTasks.
constexpr int task_ordinal(TaskType task) { return static_cast<int>(task); }

// Easy < Hard < Extreme < Impossible.
enum class Tier { Easy, Hard, Extreme, Impossible };

inline constexpr std::array<Tier, 4> kAllTiers = {Tier::Easy, Tier::Hard,
                                                  Tier::Extreme,
                                                  Tier::Impossible};

std::string_view to_string(Tier tier);
std::optional<Tier> parse_tier(std::string_view text);
constexpr int tier_ordinal(Tier tier) { return static_cast<int>(tier); }

// Absent above Impossible; escalating past the top tier stops the protocol.
constexpr std::optional<Tier> next_tier(Tier tier) {
  switch (tier) {
    case Tier::Easy:
      return Tier::Hard;
    case Tier::Hard:
      return Tier::Extreme;
    case Tier::Extreme:
      return Tier::Impossible;
    case Tier::Impossible:
      return std::nullopt;
  }
  return std::nullopt;
}

/// Thrown when a value would violate a domain invariant.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The correct answer of a problem: a 1-based position, or a boolean for
/// tasks whose output is True/False.
class AnswerKey {
 public:
  AnswerKey() = default;
  static AnswerKey index(int one_based) { return AnswerKey(one_based); }
  static AnswerKey flag(bool value) { return AnswerKey(value); }

  bool is_index() const { return std::holds_alternative<int>(value_); }
  bool is_flag() const { return std::holds_alternative<bool>(value_); }
  // Precondition: is_index().
  int index() const { return std::get<int>(value_); }
  // Precondition: is_flag().
  bool flag() const { return std::get<bool>(value_); }

  std::string to_display() const;

  bool operator==(const AnswerKey&) const = default;

 private:
  explicit AnswerKey(int v) : value_(v) {}
  explicit AnswerKey(bool v) : value_(v) {}
  std::variant<int, bool> value_{1};
};

struct ProblemMeta {
  std::string source = "GRE";
  std::string topic;
  std::string anomaly_type;
  Tier difficulty = Tier::Easy;

  bool operator==(const ProblemMeta&) const = default;
};

struct ProblemInstance {
  TaskType task = TaskType::T1;
  std::vector<std::string> context;
  std::optional<std::vector<std::string>> choices;
  AnswerKey answer_key = AnswerKey::index(1);
  ProblemMeta meta;
  std::string instance_id;
  std::string lineage_id;

  bool operator==(const ProblemInstance&) const = default;
};

enum class ValidationPhase { Initial, Scaled };

std::string_view to_string(ValidationPhase phase);

struct QualityScores {
  int validity = 0;
  int coherence = 0;
  int fairness = 0;

  bool operator==(const QualityScores&) const = default;
};

/// Validator verdict. approved == true iff feedback is absent.
struct ValidationReport {
  bool approved = false;
  std::optional<std::string> feedback;
  std::optional<QualityScores> scores;
  ValidationPhase phase = ValidationPhase::Initial;

  static ValidationReport approve(ValidationPhase phase);
  static ValidationReport reject(ValidationPhase phase, std::string feedback);

  bool operator==(const ValidationReport&) const = default;
};

/// A solver's reply. parse_ok == false implies answer is absent; the raw text
/// is then kept in explanation.
struct StudentAnswer {
  std::optional<AnswerKey> answer;
  std::string explanation;
  bool parse_ok = false;

  static StudentAnswer parsed(AnswerKey answer, std::string explanation);
  static StudentAnswer unparsable(std::string raw_text);

  bool operator==(const StudentAnswer&) const = default;
};

struct EscalationFeedback {
  std::string analysis;
  std::vector<std::string> suggestions;
  std::string difficulty_increase;

  bool operator==(const EscalationFeedback&) const = default;
};

enum class StageOutcome { Solved, Failed, NotAttempted };
enum class StopReason { StudentFailed, StudentLoopCapReached, RegenerationExhausted };

std::string_view to_string(StageOutcome outcome);
std::string_view to_string(StopReason reason);

struct Stage {
  ProblemInstance instance;
  ValidationReport validation;
  std::optional<StudentAnswer> student;
  StageOutcome outcome = StageOutcome::NotAttempted;
  // Lineage-local ordinal of the teacher call that produced the instance.
  int generated_at_call = 0;

  bool operator==(const Stage&) const = default;
};

// Logical clock: ordinal of the model call (within the lineage) that produced
// the instance and the one after which it was finalized.
struct ProvenanceTimestamps {
  int generated_at_call = 0;
  int finalized_at_call = 0;

  bool operator==(const ProvenanceTimestamps&) const = default;
};

struct AttemptCounts {
  int init_attempts = 0;
  int regen_attempts = 0;
  int student_calls = 0;

  bool operator==(const AttemptCounts&) const = default;
};

struct Provenance {
  std::string teacher_model;
  std::string student_model;
  std::string orchestrator_model;
  ProvenanceTimestamps timestamps;
  AttemptCounts attempt_counts;

  bool operator==(const Provenance&) const = default;
};

struct BenchmarkItem {
  ProblemInstance instance;
  std::string lineage_id;
  // True only for the escalation endpoint of the lineage.
  bool final = false;
  ValidationReport validation;
  Provenance provenance;
  StopReason stop_reason = StopReason::StudentFailed;

  const std::string& id() const { return instance.instance_id; }

  bool operator==(const BenchmarkItem&) const = default;
};

struct Trajectory {
  std::string lineage_id;
  TaskType task = TaskType::T1;
  std::vector<Stage> stages;
  BenchmarkItem finalized;
  StopReason stop_reason = StopReason::StudentFailed;

  // One item per stage; exactly the finalized stage carries final == true.
  std::vector<BenchmarkItem> items() const;

  bool operator==(const Trajectory&) const = default;
};

// Human-readable list of broken lineage invariants; empty when valid.
std::vector<std::string> trajectory_violations(const Trajectory& trajectory);

// JSON encoding (ADL hooks for nlohmann::json). from_json throws
// InvariantError or nlohmann::json::exception on malformed input.
void to_json(Json& j, TaskType v);
void from_json(const Json& j, TaskType& v);
void to_json(Json& j, Tier v);
void from_json(const Json& j, Tier& v);
void to_json(Json& j, ValidationPhase v);
void from_json(const Json& j, ValidationPhase& v);
void to_json(Json& j, StageOutcome v);
void from_json(const Json& j, StageOutcome& v);
void to_json(Json& j, StopReason v);
void from_json(const Json& j, StopReason& v);
void to_json(Json& j, const AnswerKey& v);
void from_json(const Json& j, AnswerKey& v);
void to_json(Json& j, const ProblemMeta& v);
void from_json(const Json& j, ProblemMeta& v);
void to_json(Json& j, const ProblemInstance& v);
void from_json(const Json& j, ProblemInstance& v);
void to_json(Json& j, const QualityScores& v);
void from_json(const Json& j, QualityScores& v);
void to_json(Json& j, const ValidationReport& v);
void from_json(const Json& j, ValidationReport& v);
void to_json(Json& j, const StudentAnswer& v);
void from_json(const Json& j, StudentAnswer& v);
void to_json(Json& j, const EscalationFeedback& v);
void from_json(const Json& j, EscalationFeedback& v);
void to_json(Json& j, const Stage& v);
void from_json(const Json& j, Stage& v);
void to_json(Json& j, const Provenance& v);
void from_json(const Json& j, Provenance& v);
void to_json(Json& j, const BenchmarkItem& v);
void from_json(const Json& j, BenchmarkItem& v);
void to_json(Json& j, const Trajectory& v);
void from_json(const Json& j, Trajectory& v);

}  // namespace tadbench

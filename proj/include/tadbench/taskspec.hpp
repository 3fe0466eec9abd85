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

// Per-task structure, grading, challenge factors and topic mapping.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tadbench/domain.hpp"

namespace tadbench {

enum class AnswerForm { Index, Flag };

struct ArityRange {
  int min = 0;
  int max = 0;
  constexpr bool contains(int n) const { return n >= min && n <= max; }
};

struct TaskSchema {
  TaskType task = TaskType::T1;
  std::string name;
  ArityRange context_arity;
  std::optional<int> choice_arity;
  AnswerForm answer_form = AnswerForm::Index;
  // Text injected into prompts; loaded from the versioned task catalog.
  std::string description;
  std::string generation_instruction;  // contains a {topic} placeholder
  std::vector<std::pair<std::string, std::string>> structure;
  std::string solve_instruction;
  std::string answer_instruction;

  // JSON field that carries the answer in generated problems.
  std::string_view answer_field() const {
    return answer_form == AnswerForm::Flag ? "order_consistent" : "anomaly_index";
  }
  // Number of positions an Index answer ranges over for an instance with the
  // given number of context segments.
  int answer_arity(int context_size) const {
    return choice_arity ? *choice_arity : context_size;
  }
};

// Total over all seven tasks.
const TaskSchema& schema_for(TaskType task);
std::string_view task_catalog_version();

enum class ViolationKind {
  ContextArity,
  ChoiceArity,
  UnexpectedChoices,
  AnswerForm,
  AnswerOutOfRange,
  TopicNotPermitted,
  EmptySegment,
  MissingBlank,
  TaskMismatch,
};

std::string_view to_string(ViolationKind kind);

struct StructureViolation {
  ViolationKind kind;
  std::string detail;

  bool operator==(const StructureViolation&) const = default;
};

// One violation per broken rule; empty iff the instance fits its task schema.
std::vector<StructureViolation> validate_structure(const ProblemInstance& inst);

enum class Verdict { Correct, Incorrect, Unparsable };

std::string_view to_string(Verdict verdict);
void to_json(Json& j, Verdict v);
void from_json(const Json& j, Verdict& v);

/// Thrown by grade() when the instance is structurally invalid.
class MalformedInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Verdict grade(const ProblemInstance& inst, const StudentAnswer& answer);

// --- topics & challenge factors -------------------------------------------

enum class Domain { Science, Philosophy, PoliticsSociety, Psychology, Economics, Literature };

std::string_view to_string(Domain domain);
// The domain a topic label belongs to ("society", "politics" and "policy" all
// map to PoliticsSociety). Absent for unknown labels.
std::optional<Domain> domain_of(std::string_view topic);

struct TopicSet {
  TaskType task;
  std::vector<std::string> topics;

  bool contains(std::string_view topic) const;
};

const TopicSet& topics_for(TaskType task);

struct ChallengeFactor {
  TaskType task;
  std::string name;

  bool operator==(const ChallengeFactor&) const = default;
};

const std::vector<std::string>& challenge_factors_for(TaskType task);

// Portable seeded source: std::mt19937_64 output is fixed by the standard, and
// all draws below use integer arithmetic only.
using SeededRandom = std::mt19937_64;

// Unbiased draw from [0, n). Precondition: n > 0.
std::size_t uniform_index(SeededRandom& rng, std::size_t n);
// True with probability numerator / denominator.
bool bernoulli(SeededRandom& rng, std::uint64_t numerator, std::uint64_t denominator);

// Absent with probability 1/2, otherwise a factor drawn uniformly from the
// task's list.
std::optional<ChallengeFactor> sample_challenge_factor(TaskType task, SeededRandom& rng);

}  // namespace tadbench

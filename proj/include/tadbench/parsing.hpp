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

// Strict parsers for agent output. Extraction is lenient (prose and code
// fences around the JSON are ignored); field checking after extraction is not.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tadbench/domain.hpp"
#include "tadbench/taskspec.hpp"

namespace tadbench {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoJsonFound : public ParseError {
 public:
  NoJsonFound() : ParseError("no JSON object found in model output") {}
};

class SchemaMismatch : public ParseError {
 public:
  explicit SchemaMismatch(std::vector<StructureViolation> violations);
  const std::vector<StructureViolation>& violations() const { return violations_; }

 private:
  std::vector<StructureViolation> violations_;
};

class MissingApprovedField : public ParseError {
 public:
  MissingApprovedField() : ParseError("verdict lacks a boolean \"approved\" field") {}
};

class InconsistentReport : public ParseError {
 public:
  using ParseError::ParseError;
};

class MissingField : public ParseError {
 public:
  explicit MissingField(const std::string& field)
      : ParseError("missing or invalid field \"" + field + "\""), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// First balanced {...} span in text that parses as a JSON object.
std::optional<Json> extract_json_object(std::string_view text);

// Identity the parsed instance is stamped with; the model never chooses it.
struct ProblemOrigin {
  TaskType task = TaskType::T1;
  std::string lineage_id;
  Tier tier = Tier::Easy;
  std::string instance_id;
};

// Throws NoJsonFound or SchemaMismatch.
ProblemInstance parse_problem(std::string_view text, const ProblemOrigin& origin);

// Throws NoJsonFound, MissingApprovedField or InconsistentReport.
ValidationReport parse_validation(std::string_view text, ValidationPhase phase);

// Throws NoJsonFound or MissingField.
EscalationFeedback parse_feedback(std::string_view text);

// Never throws: failures yield StudentAnswer::unparsable(text).
StudentAnswer parse_student_answer(std::string_view text, TaskType task);

// Throws NoJsonFound, MissingField or InconsistentReport (score outside 1..5).
QualityScores parse_quality_scores(std::string_view text);

}  // namespace tadbench

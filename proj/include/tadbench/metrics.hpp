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

// Evaluation records and the analyses computed over them. All ratios are
// exact; decimal rendering happens only in report output.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "tadbench/agent.hpp"
#include "tadbench/domain.hpp"
#include "tadbench/store.hpp"
#include "tadbench/taskspec.hpp"

namespace tadbench {

// Compare a Ratio only with another Ratio: boost 1.74's mixed-type operator==
// recurses forever under C++20 rewritten comparisons.
using Ratio = boost::rational<std::int64_t>;

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class EmptyGroup : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class KeyMismatch : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class EmptyFamily : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class MismatchedTaskSets : public MetricsError {
 public:
  using MetricsError::MetricsError;
};
class UnknownModel : public MetricsError {
 public:
  using MetricsError::MetricsError;
};

struct EvalRecord {
  std::string model;
  ItemId item_id;
  std::string lineage_id;
  TaskType task = TaskType::T1;
  Tier tier = Tier::Easy;
  std::string generator;         // store tag of the benchmark
  std::string generator_family;  // from the store manifest
  bool final = false;
  Verdict verdict = Verdict::Incorrect;
  std::optional<AnswerKey> raw_answer;
  std::optional<std::string> error;  // set when the call failed past retries

  bool operator==(const EvalRecord&) const = default;
};

void to_json(Json& j, const EvalRecord& r);
void from_json(const Json& j, EvalRecord& r);

// One solve call per item, in item order. Failed calls are recorded as
// Unparsable with an error note rather than thrown.
std::vector<EvalRecord> evaluate_model(const AgentHandle& model, const BenchmarkSet& set,
                                       int concurrency = 1);

struct Tally {
  std::int64_t correct = 0;
  std::int64_t n = 0;
  std::int64_t unparsable = 0;

  void add(Verdict v);
  // Throws EmptyGroup when n == 0.
  Ratio accuracy() const;

  bool operator==(const Tally&) const = default;
};

enum class Grouping { ByTask, ByTier, Overall, ByGenerator };

std::string_view to_string(Grouping grouping);
// "T3", "hard", "all" or the generator tag.
std::string group_of(const EvalRecord& record, Grouping grouping);

struct CellKey {
  std::string model;
  std::string group;

  auto operator<=>(const CellKey&) const = default;
};

struct AccuracyTable {
  Grouping grouping = Grouping::Overall;
  std::map<CellKey, Tally> cells;

  // Throws KeyMismatch for an absent cell.
  const Tally& cell(const std::string& model, const std::string& group) const;
  Ratio accuracy(const std::string& model, const std::string& group) const;
  std::vector<std::string> models() const;
  std::vector<std::string> groups() const;
};

// Throws EmptyGroup when records is empty.
AccuracyTable accuracy(const std::vector<EvalRecord>& records, Grouping grouping);

using RatioTable = std::map<CellKey, Ratio>;

// 1 - accuracy per cell.
RatioTable difficulty_of(const AccuracyTable& table);

struct DeltaTable {
  RatioTable base;
  RatioTable final;
  RatioTable delta;  // base - final
  Ratio mean_delta;  // unweighted mean over cells
};

// Throws KeyMismatch unless both tables have the same cells.
DeltaTable base_final_delta(const AccuracyTable& base, const AccuracyTable& final);

// Model name -> family name ("GPT", "Gemini", ...).
using FamilyMap = std::map<std::string, std::string>;

const std::string& family_of(const FamilyMap& families, const std::string& model);

// Per generator family G: mean accuracy of same-family models on G's benchmark
// minus the mean over all other models. Input: family -> (model -> accuracy).
// Throws EmptyFamily if either side is empty, UnknownModel for unmapped models.
std::map<std::string, Ratio> bias_index(
    const std::map<std::string, std::map<std::string, Ratio>>& per_generator,
    const FamilyMap& families);
// Same, from Overall-grouped tables keyed by generator family.
std::map<std::string, Ratio> bias_index(const std::map<std::string, AccuracyTable>& per_generator,
                                        const FamilyMap& families);

struct TierRow {
  std::string label;
  std::array<std::optional<Ratio>, 4> cells;  // indexed by tier_ordinal

  // Present cells never increase from easier to harder tiers.
  bool monotone_nonincreasing() const;
};

struct TierTable {
  std::vector<TierRow> per_model;
  TierRow mean;  // mean across models of per-model tier accuracy
  std::size_t lineages = 0;
};

// Restricted to lineages with an Impossible-tier record. Throws EmptyGroup if
// none qualify.
TierTable tier_table(const std::vector<EvalRecord>& records);

struct Round {
  std::int64_t sample_count = 0;
  std::map<std::string, Ratio> accuracy;  // per task
};

struct CurvePoint {
  std::int64_t sample_count = 0;
  Ratio mean_accuracy;
  Ratio mean_gap;        // mean over tasks of (round - reference)
  Ratio band_variance;   // population variance of those deviations
  double band = 0.0;     // sqrt(band_variance)
};

// Throws MismatchedTaskSets or std::out_of_range for a bad reference index.
std::vector<CurvePoint> consistency_curve(const std::vector<Round>& rounds,
                                          std::size_t reference_round);

// Rounded half away from zero to `decimals` places of ratio * scale.
std::string format_decimal(const Ratio& value, int decimals = 2, std::int64_t scale = 100);
// Exact value of a decimal literal such as "-0.53" or "83.94".
Ratio parse_decimal(const std::string& text);
double to_double(const Ratio& value);

}  // namespace tadbench

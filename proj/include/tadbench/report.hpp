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

// CSV fixtures in, CSV tables and a combined JSON document out.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tadbench/metrics.hpp"

namespace tadbench {

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws FixtureError when absent.
  std::size_t column(const std::string& name) const;

  bool operator==(const CsvDocument&) const = default;
};

class FixtureError : public MetricsError {
 public:
  using MetricsError::MetricsError;
};

// Lines starting with '#' and blank lines are skipped. Double-quoted fields
// may contain commas and doubled quotes.
CsvDocument parse_csv(const std::string& text);
CsvDocument read_csv(const std::filesystem::path& path);
std::string render_csv(const CsvDocument& doc);

// Columns: generator, generator_family, model, model_family, task, correct, n.
// Expands each row into n graded records (correct of them Correct).
std::vector<EvalRecord> records_from_count_fixture(const CsvDocument& doc);
// model -> model_family column of the same fixture.
FamilyMap families_from_count_fixture(const CsvDocument& doc);
// Columns: model, family.
FamilyMap family_map_from_csv(const CsvDocument& doc);

struct BaseFinalTables {
  AccuracyTable base;   // grouped by generator
  AccuracyTable final;  // grouped by generator
};

// Columns: model, generator, base, final, n (percentages). Each percentage
// must correspond to a whole count out of n within rounding (0.005);
// otherwise FixtureError.
BaseFinalTables base_final_from_fixture(const CsvDocument& doc);

// Columns: regime (label) and easy, hard, extreme, impossible (percentages).
std::vector<TierRow> tier_rows_from_fixture(const CsvDocument& doc);

// Two named columns read as label -> exact decimal.
std::map<std::string, Ratio> decimal_column(const CsvDocument& doc, const std::string& key,
                                            const std::string& value);

// {"reference": k, "rounds": [{"sample_count": n, "accuracy": {"T1": 0.61, ...}}]}
// Accuracies may be JSON numbers or decimal strings; both are read exactly
// from their shortest decimal representation.
std::vector<Round> rounds_from_json(const Json& j);

// --- table builders (percentages rendered with two decimals) -------------

// model, T1..T7 (tasks present), Avg. Avg is the unweighted mean of the task
// cells.
CsvDocument accuracy_matrix(const AccuracyTable& by_task);
// model, group, correct, n, unparsable, accuracy.
CsvDocument accuracy_long(const AccuracyTable& table);
// model, group, accuracy, difficulty.
CsvDocument difficulty_csv(const AccuracyTable& table);
// model, group, base, final, delta; last row "mean".
CsvDocument delta_csv(const DeltaTable& table);
// family, bias_index[, reported].
CsvDocument bias_csv(const std::map<std::string, Ratio>& bias,
                     const std::map<std::string, Ratio>& reported = {});
// label, easy, hard, extreme, impossible, monotone_nonincreasing.
CsvDocument tier_csv(const std::vector<TierRow>& rows);
// sample_count, mean_accuracy, mean_gap, band.
CsvDocument consistency_csv(const std::vector<CurvePoint>& curve);

// `reported_mean` is in percentage points, as quoted elsewhere.
std::string mean_delta_footnote(const DeltaTable& table, std::optional<Ratio> reported_mean);

struct Report {
  std::map<std::string, CsvDocument> tables;
  std::vector<std::string> footnotes;

  Json to_json() const;
  // Writes <name>.csv per table plus report.json; byte-stable for equal input.
  void write(const std::filesystem::path& dir) const;
};

}  // namespace tadbench

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

#include "tadbench/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <set>
#include <thread>

namespace tadbench {

namespace {

Ratio mean_of(const std::vector<Ratio>& values) {
  Ratio sum(0);
  for (const auto& v : values) sum += v;
  return sum / static_cast<std::int64_t>(values.size());
}

int lineage_index_of(const std::string& lineage_id) {
  const auto dash = lineage_id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoi(lineage_id.substr(dash + 1));
  } catch (const std::exception&) {
    return 0;
  }
}

}  // namespace

void to_json(Json& j, const EvalRecord& r) {
  j = Json{{"model", r.model},
           {"item_id", r.item_id},
           {"lineage_id", r.lineage_id},
           {"task", r.task},
           {"tier", r.tier},
           {"generator", r.generator},
           {"generator_family", r.generator_family},
           {"final", r.final},
           {"verdict", r.verdict},
           {"raw_answer", r.raw_answer ? Json(*r.raw_answer) : Json(nullptr)},
           {"error", r.error ? Json(*r.error) : Json(nullptr)}};
}

void from_json(const Json& j, EvalRecord& r) {
  r.model = j.at("model").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.lineage_id = j.value("lineage_id", std::string());
  r.task = j.at("task").get<TaskType>();
  r.tier = j.at("tier").get<Tier>();
  r.generator = j.value("generator", std::string());
  r.generator_family = j.value("generator_family", std::string());
  r.final = j.value("final", false);
  r.verdict = j.at("verdict").get<Verdict>();
  r.raw_answer.reset();
  if (j.contains("raw_answer") && !j["raw_answer"].is_null()) {
    r.raw_answer = j["raw_answer"].get<AnswerKey>();
  }
  r.error.reset();
  if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
}

std::vector<EvalRecord> evaluate_model(const AgentHandle& model, const BenchmarkSet& set,
                                       int concurrency) {
  if (model.role() != Role::Student) {
    throw RoleMismatch("evaluation reuses the solve path and needs a student handle");
  }
  std::vector<EvalRecord> records(set.items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < set.items.size(); k = next++) {
      const StoredItem& stored = set.items[k];
      const BenchmarkItem& item = stored.item;
      EvalRecord& r = records[k];
      r.model = model.model_name();
      r.item_id = item.id();
      r.lineage_id = item.lineage_id;
      r.task = item.instance.task;
      r.tier = item.instance.meta.difficulty;
      r.generator = stored.generator;
      if (auto m = set.manifests.find(stored.generator); m != set.manifests.end()) {
        r.generator_family = m->second.generator_family;
      }
      r.final = item.final;
      CallContext ctx;
      ctx.task = item.instance.task;
      ctx.tier = item.instance.meta.difficulty;
      ctx.lineage_id = item.lineage_id;
      ctx.lineage_index = lineage_index_of(item.lineage_id);
      ctx.topic = item.instance.meta.topic;
      try {
        const StudentAnswer answer = solve(model, item.instance, ctx);
        r.verdict = grade(item.instance, answer);
        r.raw_answer = answer.answer;
      } catch (const AgentError& e) {
        r.verdict = Verdict::Unparsable;
        r.error = e.what();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(std::max(1, concurrency), set.items.size());
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

void Tally::add(Verdict v) {
  ++n;
  if (v == Verdict::Correct) ++correct;
  if (v == Verdict::Unparsable) ++unparsable;
}

Ratio Tally::accuracy() const {
  if (n == 0) throw EmptyGroup("accuracy of an empty cell");
  return Ratio(correct, n);
}

std::string_view to_string(Grouping grouping) {
  switch (grouping) {
    case Grouping::ByTask: return "by_task";
    case Grouping::ByTier: return "by_tier";
    case Grouping::Overall: return "overall";
    case Grouping::ByGenerator: return "by_generator";
  }
  return "unknown";
}

std::string group_of(const EvalRecord& r, Grouping grouping) {
  switch (grouping) {
    case Grouping::ByTask: return std::string(to_string(r.task));
    case Grouping::ByTier: return std::string(to_string(r.tier));
    case Grouping::Overall: return "all";
    case Grouping::ByGenerator: return r.generator;
  }
  return {};
}

const Tally& AccuracyTable::cell(const std::string& model, const std::string& group) const {
  auto it = cells.find(CellKey{model, group});
  if (it == cells.end()) throw KeyMismatch("no cell (" + model + ", " + group + ")");
  return it->second;
}

Ratio AccuracyTable::accuracy(const std::string& model, const std::string& group) const {
  return cell(model, group).accuracy();
}

std::vector<std::string> AccuracyTable::models() const {
  std::set<std::string> s;
  for (const auto& [k, _] : cells) s.insert(k.model);
  return {s.begin(), s.end()};
}

std::vector<std::string> AccuracyTable::groups() const {
  std::set<std::string> s;
  for (const auto& [k, _] : cells) s.insert(k.group);
  return {s.begin(), s.end()};
}

AccuracyTable accuracy(const std::vector<EvalRecord>& records, Grouping grouping) {
  if (records.empty()) throw EmptyGroup("no records to aggregate");
  AccuracyTable table;
  table.grouping = grouping;
  for (const auto& r : records) table.cells[CellKey{r.model, group_of(r, grouping)}].add(r.verdict);
  return table;
}

RatioTable difficulty_of(const AccuracyTable& table) {
  RatioTable out;
  for (const auto& [key, tally] : table.cells) out[key] = Ratio(1) - tally.accuracy();
  return out;
}

DeltaTable base_final_delta(const AccuracyTable& base, const AccuracyTable& final) {
  DeltaTable out;
  for (const auto& [key, tally] : base.cells) {
    auto it = final.cells.find(key);
    if (it == final.cells.end()) {
      throw KeyMismatch("final table lacks (" + key.model + ", " + key.group + ")");
    }
    out.base[key] = tally.accuracy();
    out.final[key] = it->second.accuracy();
    out.delta[key] = out.base[key] - out.final[key];
  }
  if (final.cells.size() != base.cells.size()) {
    throw KeyMismatch("final table has cells absent from the base table");
  }
  if (out.delta.empty()) throw EmptyGroup("no cells to compare");
  std::vector<Ratio> deltas;
  for (const auto& [_, d] : out.delta) deltas.push_back(d);
  out.mean_delta = mean_of(deltas);
  return out;
}

const std::string& family_of(const FamilyMap& families, const std::string& model) {
  auto it = families.find(model);
  if (it == families.end()) throw UnknownModel("no family recorded for model " + model);
  return it->second;
}

std::map<std::string, Ratio> bias_index(
    const std::map<std::string, std::map<std::string, Ratio>>& per_generator,
    const FamilyMap& families) {
  std::map<std::string, Ratio> out;
  for (const auto& [family, by_model] : per_generator) {
    std::vector<Ratio> same;
    std::vector<Ratio> other;
    for (const auto& [model, acc] : by_model) {
      (family_of(families, model) == family ? same : other).push_back(acc);
    }
    if (same.empty() || other.empty()) {
      throw EmptyFamily("generator family " + family + " needs both same-family and "
                        "other-family models");
    }
    out[family] = mean_of(same) - mean_of(other);
  }
  return out;
}

std::map<std::string, Ratio> bias_index(const std::map<std::string, AccuracyTable>& per_generator,
                                        const FamilyMap& families) {
  std::map<std::string, std::map<std::string, Ratio>> flat;
  for (const auto& [family, table] : per_generator) {
    for (const auto& [key, tally] : table.cells) {
      if (key.group != "all") {
        throw MetricsError("bias index expects overall-grouped tables");
      }
      flat[family][key.model] = tally.accuracy();
    }
  }
  return bias_index(flat, families);
}

bool TierRow::monotone_nonincreasing() const {
  std::optional<Ratio> prev;
  for (const auto& c : cells) {
    if (!c) continue;
    if (prev && *c > *prev) return false;
    prev = c;
  }
  return true;
}

TierTable tier_table(const std::vector<EvalRecord>& records) {
  std::set<std::pair<std::string, std::string>> reached;
  for (const auto& r : records) {
    if (r.tier == Tier::Impossible) reached.emplace(r.generator, r.lineage_id);
  }
  std::map<std::string, std::array<Tally, 4>> per_model;
  for (const auto& r : records) {
    if (reached.count({r.generator, r.lineage_id}) == 0) continue;
    per_model[r.model][tier_ordinal(r.tier)].add(r.verdict);
  }
  if (per_model.empty()) throw EmptyGroup("no lineage reached the impossible tier");

  TierTable out;
  out.lineages = reached.size();
  std::array<std::vector<Ratio>, 4> columns;
  for (const auto& [model, tallies] : per_model) {
    TierRow row;
    row.label = model;
    for (int t = 0; t < 4; ++t) {
      if (tallies[t].n == 0) continue;
      row.cells[t] = tallies[t].accuracy();
      columns[t].push_back(*row.cells[t]);
    }
    out.per_model.push_back(std::move(row));
  }
  out.mean.label = "mean";
  for (int t = 0; t < 4; ++t) {
    if (!columns[t].empty()) out.mean.cells[t] = mean_of(columns[t]);
  }
  return out;
}

std::vector<CurvePoint> consistency_curve(const std::vector<Round>& rounds,
                                          std::size_t reference_round) {
  if (reference_round >= rounds.size()) {
    throw std::out_of_range("reference round " + std::to_string(reference_round) +
                            " is out of range");
  }
  const auto& ref = rounds[reference_round].accuracy;
  if (ref.empty()) throw MismatchedTaskSets("reference round has no tasks");
  std::vector<CurvePoint> out;
  for (const auto& round : rounds) {
    if (round.accuracy.size() != ref.size() ||
        !std::equal(round.accuracy.begin(), round.accuracy.end(), ref.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw MismatchedTaskSets("round with " + std::to_string(round.sample_count) +
                               " samples covers a different task set");
    }
    std::vector<Ratio> values;
    std::vector<Ratio> deviations;
    for (const auto& [task, acc] : round.accuracy) {
      values.push_back(acc);
      deviations.push_back(acc - ref.at(task));
    }
    CurvePoint p;
    p.sample_count = round.sample_count;
    p.mean_accuracy = mean_of(values);
    p.mean_gap = mean_of(deviations);
    std::vector<Ratio> squares;
    for (const auto& d : deviations) squares.push_back((d - p.mean_gap) * (d - p.mean_gap));
    p.band_variance = mean_of(squares);
    p.band = std::sqrt(to_double(p.band_variance));
    out.push_back(p);
  }
  return out;
}

std::string format_decimal(const Ratio& value, int decimals, std::int64_t scale) {
  std::int64_t pow10 = 1;
  for (int i = 0; i < decimals; ++i) pow10 *= 10;
  const Ratio scaled = value * scale * pow10;
  const bool negative = scaled < 0;
  const Ratio magnitude = negative ? -scaled : scaled;
  // floor(|x| + 1/2) == round half away from zero.
  const Ratio shifted = magnitude + Ratio(1, 2);
  const std::int64_t rounded = shifted.numerator() / shifted.denominator();
  std::string digits = std::to_string(rounded / pow10);
  if (decimals > 0) {
    std::string frac = std::to_string(rounded % pow10);
    frac.insert(0, static_cast<std::size_t>(decimals) - frac.size(), '0');
    digits += "." + frac;
  }
  return (negative && rounded != 0 ? "-" : "") + digits;
}

Ratio parse_decimal(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) negative = text[i++] == '-';
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.' && !seen_point) {
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c)) || num > INT64_MAX / 10) {
      throw std::invalid_argument("not a decimal number: '" + text + "'");
    }
    num = num * 10 + (c - '0');
    if (seen_point) den *= 10;
    seen_digit = true;
  }
  if (!seen_digit) throw std::invalid_argument("not a decimal number: '" + text + "'");
  return Ratio(negative ? -num : num, den);
}

double to_double(const Ratio& value) {
  return static_cast<double>(value.numerator()) / static_cast<double>(value.denominator());
}

}  // namespace tadbench

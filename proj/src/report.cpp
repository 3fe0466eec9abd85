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

#include "tadbench/report.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace tadbench {

namespace {

std::string pct(const Ratio& r) { return format_decimal(r, 2, 100); }

std::int64_t to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FixtureError("expected an integer for " + what + ", got '" + s + "'");
  }
}

Ratio round_to_integer(const Ratio& r) {
  const Ratio shifted = r + Ratio(1, 2);
  std::int64_t q = shifted.numerator() / shifted.denominator();
  if (shifted.numerator() < 0 && shifted.numerator() % shifted.denominator() != 0) --q;
  return Ratio(q);
}

// Quoted when it would otherwise split, or when it leads a record and would
// read back as a comment or blank line.
std::string csv_field(const std::string& s, bool leading, bool alone) {
  const bool needs = s.find_first_of(",\"\n\r") != std::string::npos ||
                     (leading && !s.empty() && s[0] == '#') || (alone && s.empty());
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Decimal literal possibly in exponent form ("1e-05").
Ratio parse_number_text(const std::string& text) {
  const auto e = text.find_first_of("eE");
  if (e == std::string::npos) return parse_decimal(text);
  Ratio mantissa = parse_decimal(text.substr(0, e));
  const int exponent = std::stoi(text.substr(e + 1));
  for (int i = 0; i < std::abs(exponent); ++i) {
    mantissa = exponent > 0 ? mantissa * 10 : mantissa / 10;
  }
  return mantissa;
}

}  // namespace

std::size_t CsvDocument::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FixtureError("missing column '" + name + "'");
}

CsvDocument parse_csv(const std::string& text) {
  CsvDocument doc;
  bool have_header = false;
  auto finish = [&](std::vector<std::string>&& fields) {
    if (!have_header) {
      doc.header = std::move(fields);
      have_header = true;
      return;
    }
    if (fields.size() != doc.header.size()) {
      throw FixtureError("CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(doc.header.size()));
    }
    doc.rows.push_back(std::move(fields));
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    // Record start: skip comment and blank lines.
    if (text[i] == '#' || text[i] == '\n' || (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n')) {
      const auto eol = text.find('\n', i);
      i = eol == std::string::npos ? n : eol + 1;
      continue;
    }
    const std::size_t record_start = i;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (; i < n; ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"' && i + 1 < n && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\n' || (c == '\r' && i + 1 < n && text[i + 1] == '\n')) {
        i += c == '\r' ? 2 : 1;
        break;
      } else {
        field += c;
      }
    }
    if (quoted) {
      throw FixtureError("unterminated quote in CSV record: " +
                         text.substr(record_start, std::min<std::size_t>(80, n - record_start)));
    }
    fields.push_back(std::move(field));
    finish(std::move(fields));
  }
  if (!have_header) throw FixtureError("CSV has no header");
  return doc;
}

CsvDocument read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string render_csv(const CsvDocument& doc) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += csv_field(fields[i], i == 0, fields.size() == 1);
    }
    out += '\n';
  };
  line(doc.header);
  for (const auto& r : doc.rows) line(r);
  return out;
}

std::vector<EvalRecord> records_from_count_fixture(const CsvDocument& doc) {
  const auto c_gen = doc.column("generator"), c_gfam = doc.column("generator_family"),
             c_model = doc.column("model"), c_task = doc.column("task"),
             c_correct = doc.column("correct"), c_n = doc.column("n");
  std::vector<EvalRecord> out;
  for (const auto& row : doc.rows) {
    const auto task = parse_task(row[c_task]);
    if (!task) throw FixtureError("unknown task '" + row[c_task] + "'");
    const std::int64_t correct = to_int(row[c_correct], "correct");
    const std::int64_t n = to_int(row[c_n], "n");
    if (n <= 0 || correct < 0 || correct > n) {
      throw FixtureError("invalid count " + row[c_correct] + "/" + row[c_n]);
    }
    for (std::int64_t i = 0; i < n; ++i) {
      EvalRecord r;
      r.model = row[c_model];
      r.generator = row[c_gen];
      r.generator_family = row[c_gfam];
      r.task = *task;
      r.item_id = row[c_gen] + "/" + row[c_task] + "/" + std::to_string(i);
      r.lineage_id = r.item_id;
      r.final = true;
      r.verdict = i < correct ? Verdict::Correct : Verdict::Incorrect;
      out.push_back(std::move(r));
    }
  }
  return out;
}

FamilyMap families_from_count_fixture(const CsvDocument& doc) {
  return family_map_from_csv(CsvDocument{{"model", "family"}, [&] {
    std::vector<std::vector<std::string>> rows;
    const auto c_model = doc.column("model"), c_fam = doc.column("model_family");
    for (const auto& row : doc.rows) rows.push_back({row[c_model], row[c_fam]});
    return rows;
  }()});
}

FamilyMap family_map_from_csv(const CsvDocument& doc) {
  const auto c_model = doc.column("model"), c_fam = doc.column("family");
  FamilyMap out;
  for (const auto& row : doc.rows) {
    auto [it, inserted] = out.emplace(row[c_model], row[c_fam]);
    if (!inserted && it->second != row[c_fam]) {
      throw FixtureError("model " + row[c_model] + " mapped to two families");
    }
  }
  return out;
}

BaseFinalTables base_final_from_fixture(const CsvDocument& doc) {
  const auto c_model = doc.column("model"), c_gen = doc.column("generator"),
             c_base = doc.column("base"), c_final = doc.column("final"), c_n = doc.column("n");
  BaseFinalTables out;
  out.base.grouping = Grouping::ByGenerator;
  out.final.grouping = Grouping::ByGenerator;
  for (const auto& row : doc.rows) {
    const std::int64_t n = to_int(row[c_n], "n");
    if (n <= 0) throw FixtureError("n must be positive");
    auto tally = [&](const std::string& text) {
      const Ratio percent = parse_decimal(text);
      const Ratio count = round_to_integer(percent * n / 100);
      const Ratio back = count / n * 100;
      const Ratio err = back > percent ? back - percent : percent - back;
      if (err > Ratio(5, 1000)) {
        throw FixtureError(text + "% is not a whole count out of " + std::to_string(n));
      }
      return Tally{count.numerator(), n, 0};
    };
    const CellKey key{row[c_model], row[c_gen]};
    if (out.base.cells.count(key) != 0) {
      throw FixtureError("duplicate row for (" + key.model + ", " + key.group + ")");
    }
    out.base.cells[key] = tally(row[c_base]);
    out.final.cells[key] = tally(row[c_final]);
  }
  return out;
}

std::vector<TierRow> tier_rows_from_fixture(const CsvDocument& doc) {
  const std::size_t c_label = doc.column("regime");
  std::array<std::size_t, 4> cols{};
  for (Tier t : kAllTiers) cols[tier_ordinal(t)] = doc.column(std::string(to_string(t)));
  std::vector<TierRow> out;
  for (const auto& row : doc.rows) {
    TierRow r;
    r.label = row[c_label];
    for (int t = 0; t < 4; ++t) {
      if (!row[cols[t]].empty()) r.cells[t] = parse_decimal(row[cols[t]]) / 100;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, Ratio> decimal_column(const CsvDocument& doc, const std::string& key,
                                            const std::string& value) {
  const auto ck = doc.column(key), cv = doc.column(value);
  std::map<std::string, Ratio> out;
  for (const auto& row : doc.rows) out[row[ck]] = parse_decimal(row[cv]);
  return out;
}

std::vector<Round> rounds_from_json(const Json& j) {
  std::vector<Round> out;
  for (const auto& r : j.at("rounds")) {
    Round round;
    round.sample_count = r.at("sample_count").get<std::int64_t>();
    for (const auto& [task, v] : r.at("accuracy").items()) {
      if (v.is_string()) {
        round.accuracy[task] = parse_number_text(v.get<std::string>());
      } else if (v.is_number()) {
        round.accuracy[task] = parse_number_text(v.dump());
      } else {
        throw FixtureError("accuracy for " + task + " is not a number");
      }
    }
    out.push_back(std::move(round));
  }
  return out;
}

CsvDocument accuracy_matrix(const AccuracyTable& by_task) {
  if (by_task.grouping != Grouping::ByTask) {
    throw MetricsError("accuracy matrix needs a by-task table");
  }
  // Task columns in canonical order, not lexicographic.
  std::vector<std::string> tasks;
  const auto groups = by_task.groups();
  for (TaskType t : kAllTasks) {
    const std::string name(to_string(t));
    if (std::find(groups.begin(), groups.end(), name) != groups.end()) tasks.push_back(name);
  }
  CsvDocument doc;
  doc.header.push_back("model");
  doc.header.insert(doc.header.end(), tasks.begin(), tasks.end());
  doc.header.push_back("Avg");
  for (const auto& model : by_task.models()) {
    std::vector<std::string> row{model};
    Ratio sum(0);
    std::int64_t present = 0;
    for (const auto& task : tasks) {
      auto it = by_task.cells.find(CellKey{model, task});
      if (it == by_task.cells.end()) {
        row.emplace_back();
        continue;
      }
      const Ratio acc = it->second.accuracy();
      sum += acc;
      ++present;
      row.push_back(pct(acc));
    }
    row.push_back(present > 0 ? pct(sum / present) : "");
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

CsvDocument accuracy_long(const AccuracyTable& table) {
  CsvDocument doc{{"model", "group", "correct", "n", "unparsable", "accuracy"}, {}};
  for (const auto& [key, t] : table.cells) {
    doc.rows.push_back({key.model, key.group, std::to_string(t.correct), std::to_string(t.n),
                        std::to_string(t.unparsable), pct(t.accuracy())});
  }
  return doc;
}

CsvDocument difficulty_csv(const AccuracyTable& table) {
  CsvDocument doc{{"model", "group", "accuracy", "difficulty"}, {}};
  const RatioTable difficulty = difficulty_of(table);
  for (const auto& [key, t] : table.cells) {
    doc.rows.push_back({key.model, key.group, pct(t.accuracy()), pct(difficulty.at(key))});
  }
  return doc;
}

CsvDocument delta_csv(const DeltaTable& table) {
  CsvDocument doc{{"model", "group", "base", "final", "delta"}, {}};
  for (const auto& [key, d] : table.delta) {
    doc.rows.push_back({key.model, key.group, pct(table.base.at(key)), pct(table.final.at(key)),
                        pct(d)});
  }
  doc.rows.push_back({"mean", "", "", "", pct(table.mean_delta)});
  return doc;
}

CsvDocument bias_csv(const std::map<std::string, Ratio>& bias,
                     const std::map<std::string, Ratio>& reported) {
  CsvDocument doc{{"family", "bias_index"}, {}};
  if (!reported.empty()) doc.header.push_back("reported");
  for (const auto& [family, value] : bias) {
    std::vector<std::string> row{family, pct(value)};
    if (!reported.empty()) {
      auto it = reported.find(family);
      row.push_back(it == reported.end() ? "" : format_decimal(it->second, 2, 1));
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

CsvDocument tier_csv(const std::vector<TierRow>& rows) {
  CsvDocument doc{{"label", "easy", "hard", "extreme", "impossible", "monotone_nonincreasing"},
                  {}};
  for (const auto& r : rows) {
    std::vector<std::string> row{r.label};
    for (const auto& c : r.cells) row.push_back(c ? pct(*c) : "");
    row.push_back(r.monotone_nonincreasing() ? "true" : "false");
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

CsvDocument consistency_csv(const std::vector<CurvePoint>& curve) {
  CsvDocument doc{{"sample_count", "mean_accuracy", "mean_gap", "band"}, {}};
  for (const auto& p : curve) {
    std::ostringstream band;
    band.precision(6);
    band << std::fixed << p.band * 100.0;
    doc.rows.push_back({std::to_string(p.sample_count), pct(p.mean_accuracy), pct(p.mean_gap),
                        band.str()});
  }
  return doc;
}

std::string mean_delta_footnote(const DeltaTable& table, std::optional<Ratio> reported_mean) {
  std::string note = "Mean base-to-final drop recomputed as the unweighted mean of " +
                     std::to_string(table.delta.size()) + " cells: " +
                     pct(table.mean_delta) + " percentage points.";
  if (reported_mean) {
    note += " A headline figure of " + format_decimal(*reported_mean, 1, 1) +
            " points has been quoted for this comparison; it does not equal the cell mean "
            "and no weighting was applied to reconcile the two.";
  }
  return note;
}

Json Report::to_json() const {
  Json j;
  j["footnotes"] = footnotes;
  Json tabs = Json::object();
  for (const auto& [name, doc] : tables) {
    Json rows = Json::array();
    for (const auto& row : doc.rows) {
      Json obj = Json::object();
      for (std::size_t i = 0; i < doc.header.size(); ++i) obj[doc.header[i]] = row[i];
      rows.push_back(std::move(obj));
    }
    tabs[name] = Json{{"columns", doc.header}, {"rows", std::move(rows)}};
  }
  j["tables"] = std::move(tabs);
  return j;
}

void Report::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, doc] : tables) {
    std::ofstream out(dir / (name + ".csv"), std::ios::binary | std::ios::trunc);
    out << render_csv(doc);
    if (!out) throw std::runtime_error("cannot write " + (dir / (name + ".csv")).string());
  }
  std::ofstream out(dir / "report.json", std::ios::binary | std::ios::trunc);
  out << to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
}

}  // namespace tadbench

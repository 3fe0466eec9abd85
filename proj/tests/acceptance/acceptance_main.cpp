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


// Acceptance run: one PASS/FAIL line per criterion. A criterion whose literal
// target contradicts its own definition still prints FAIL; the exit status
// tolerates that one check only, so every other check remains binding.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "tadbench/cli.hpp"
#include "tadbench/metrics.hpp"
#include "tadbench/parsing.hpp"
#include "tadbench/prompts.hpp"
#include "tadbench/protocol.hpp"
#include "tadbench/report.hpp"
#include "tadbench/scripted.hpp"
#include "tadbench/store.hpp"
#include "test_support.hpp"

namespace tadbench {
namespace {

namespace fs = std::filesystem;
using testing::data_dir;
using testing::ScratchDir;

struct Outcome {
  bool pass = true;
  bool only_unattainable_failed = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      only_unattainable_failed = false;
      notes.push_back("failed: " + what);
    }
  }
  // A literal target that contradicts its own definition. Fails the
  // criterion but is tolerated in the exit status.
  void target(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& text) { notes.push_back(text); }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within(const Ratio& a, const Ratio& b, const Ratio& tol) {
  const Ratio d = a - b;
  return (d < 0 ? -d : d) <= tol;
}

// ---- 1 ------------------------------------------------------------------

Outcome average_table_reconstruction() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto counts = read_csv(data_dir() / "table5_accuracy.csv");
  const auto expected = read_csv(data_dir() / "table1_average.csv");
  const auto got = accuracy_matrix(accuracy(records_from_count_fixture(counts), Grouping::ByTask));
  const double elapsed = seconds_since(t0);
  o.check(got.header == expected.header, "column set");
  std::map<std::string, std::vector<std::string>> rows;
  for (const auto& r : got.rows) rows[r[0]] = r;
  std::size_t cells = 0;
  for (const auto& r : expected.rows) {
    if (!rows.count(r[0])) {
      o.check(false, "missing model " + r[0]);
      continue;
    }
    for (std::size_t c = 1; c < r.size(); ++c, ++cells) {
      o.check(within(parse_decimal(rows[r[0]][c]), parse_decimal(r[c]), Ratio(5, 1000)),
              r[0] + " " + expected.header[c] + " " + rows[r[0]][c] + " vs " + r[c]);
    }
  }
  o.check(rows["GPT-3.5-Turbo"].back() == "54.18", "GPT-3.5-Turbo Avg 54.18");
  o.check(rows["Claude-3.5-Sonnet"].back() == "59.96", "Claude-3.5-Sonnet Avg 59.96");
  o.check(elapsed < 1.0, "runtime under 1 s");
  std::ostringstream s;
  s << cells << " cells, " << elapsed << " s";
  o.note(s.str());
  return o;
}

// ---- 2 ------------------------------------------------------------------

Outcome base_final_delta_check() {
  Outcome o;
  const auto doc = read_csv(data_dir() / "table2_base_final.csv");
  const auto tables = base_final_from_fixture(doc);
  const auto d = base_final_delta(tables.base, tables.final);
  const Ratio gpt = d.delta.at({"GPT-4o", "GPT-4o"});
  o.check(within(gpt * 100, parse_decimal("21.86"), Ratio(1, 100)), "GPT-4o/GPT-4o delta 21.86");
  // Oracle: each printed percentage is a whole count out of n; rebuild the
  // counts independently and difference them.
  auto count_of = [](const std::string& pct, std::int64_t n) {
    const double c = std::stod(pct) * static_cast<double>(n) / 100.0;
    return static_cast<std::int64_t>(std::llround(c));
  };
  Ratio sum = 0;
  for (const auto& row : doc.rows) {
    const std::int64_t n = std::stoll(row[doc.column("n")]);
    const Ratio exact(count_of(row[doc.column("base")], n) - count_of(row[doc.column("final")], n),
                      n);
    const CellKey key{row[doc.column("model")], row[doc.column("generator")]};
    o.check(d.delta.at(key) == exact, "exact delta for " + key.model + "/" + key.group);
    const Ratio printed =
        parse_decimal(row[doc.column("base")]) - parse_decimal(row[doc.column("final")]);
    o.check(within(exact * 100, printed, Ratio(1, 100)), "printed delta for " + key.model);
    sum += exact;
  }
  o.check(d.mean_delta == sum / static_cast<std::int64_t>(doc.rows.size()), "exact mean");
  const std::string note = mean_delta_footnote(d, parse_decimal("37.3"));
  o.check(note.find("37.3") != std::string::npos && note.find(format_decimal(d.mean_delta)) !=
                                                         std::string::npos,
          "footnote names both figures");
  o.note("mean delta " + format_decimal(d.mean_delta) + " over " + std::to_string(d.delta.size()) +
         " cells; 37.3 footnoted");
  return o;
}

// ---- 3 ------------------------------------------------------------------

Outcome difficulty_identity() {
  Outcome o;
  std::size_t cells = 0;
  const auto records = records_from_count_fixture(read_csv(data_dir() / "table5_accuracy.csv"));
  for (Grouping g : {Grouping::ByTask, Grouping::ByGenerator, Grouping::ByTier, Grouping::Overall}) {
    const auto table = accuracy(records, g);
    for (const auto& [key, diff] : difficulty_of(table)) {
      ++cells;
      o.check(diff + table.cells.at(key).accuracy() == Ratio(1), "identity " + key.model + "/" + key.group);
    }
  }
  const auto rows = tier_rows_from_fixture(read_csv(data_dir() / "table8_tiers.csv"));
  for (const auto& r : rows) o.check(r.monotone_nonincreasing(), "monotone " + r.label);
  o.check(!rows.empty() && rows[0].cells[0] == parse_decimal("83.94") / 100 &&
              rows[0].cells[3] == parse_decimal("70.94") / 100,
          "GPT-4o family 83.94 -> 70.94");
  o.note(std::to_string(cells) + " cells; " + std::to_string(rows.size()) + " tier rows monotone");
  return o;
}

// ---- 4 ------------------------------------------------------------------

Outcome bias_index_check() {
  Outcome o;
  const FamilyMap fam{{"s1", "S"}, {"s2", "S"}, {"d1", "D"}, {"d2", "D"}};
  std::map<std::string, std::map<std::string, Ratio>> uniform;
  for (const auto& g : {"S", "D"}) {
    for (const auto& [m, f] : fam) uniform[g][m] = Ratio(13, 20);
  }
  bool all_zero = true;
  for (const auto& [g, b] : bias_index(uniform, fam)) all_zero = all_zero && b == Ratio(0);
  o.check(all_zero, "(a) uniform fixture gives 0");

  std::map<std::string, std::map<std::string, Ratio>> synthetic{
      {"S", {{"s1", Ratio(8, 10)}, {"s2", Ratio(9, 10)}, {"d1", Ratio(6, 10)}, {"d2", Ratio(7, 10)}}}};
  const Ratio b = bias_index(synthetic, fam).at("S");
  // Independent oracle: mean of same-family minus mean of the rest.
  const Ratio oracle = (Ratio(8, 10) + Ratio(9, 10)) / 2 - (Ratio(6, 10) + Ratio(7, 10)) / 2;
  o.check(b == oracle, "(b) definition oracle 0.20");
  o.target(b == Ratio(15, 100), "(b) literal target +0.15 (got " + format_decimal(b, 2, 1) + ")");

  bool invariant = true;
  SeededRandom rng(4);
  for (int round = 0; round < 100; ++round) {
    const Ratio shift(static_cast<std::int64_t>(uniform_index(rng, 41)) - 20, 100);
    std::map<std::string, std::map<std::string, Ratio>> acc, shifted;
    for (const auto& g : {"S", "D"}) {
      for (const auto& [m, f] : fam) {
        acc[g][m] = Ratio(static_cast<std::int64_t>(uniform_index(rng, 101)), 100);
        shifted[g][m] = acc[g][m] + shift;
      }
    }
    invariant = invariant && bias_index(acc, fam) == bias_index(shifted, fam);
  }
  o.check(invariant, "(c) constant-shift invariance");
  o.note("the stated definition yields 0.20 on {0.8,0.9} vs {0.6,0.7}; 0.15 is not reachable");
  return o;
}

// ---- 5 ------------------------------------------------------------------

ProtocolConfig scripted_config(const std::shared_ptr<Script>& script) {
  ProtocolConfig cfg;
  cfg.tasks = {TaskType::T1};
  cfg.seed = 42;
  cfg.agents = {scripted_agent(Role::Teacher, script, "teacher"),
                scripted_agent(Role::Orchestrator, script, "orchestrator"),
                scripted_agent(Role::Student, script, "student")};
  return cfg;
}

TraceEntry E(Role r, CallPurpose p, Tier t, int attempt = 1) {
  return TraceEntry{r, p, TaskType::T1, t, "T1-0000", attempt};
}

std::vector<Tier> tiers_of(const Trajectory& t) {
  std::vector<Tier> out;
  for (const auto& s : t.stages) out.push_back(s.instance.meta.difficulty);
  return out;
}

Outcome protocol_state_machine() {
  Outcome o;
  using R = Role;
  using P = CallPurpose;
  const auto t0 = std::chrono::steady_clock::now();
  {
    auto script = Script::from_json({{"student", {{"default", "wrong"}}}});
    const auto t = *run_trajectory(scripted_config(script), TaskType::T1, 0).trajectory;
    o.check(tiers_of(t) == std::vector<Tier>{Tier::Easy} &&
                t.finalized.instance.meta.difficulty == Tier::Easy,
            "(a) one Easy stage");
    o.check(script->trace() == std::vector<TraceEntry>{E(R::Teacher, P::Generate, Tier::Easy),
                                                       E(R::Orchestrator, P::ValidateInitial,
                                                         Tier::Easy),
                                                       E(R::Student, P::Solve, Tier::Easy)},
            "(a) trace");
  }
  {
    auto script = Script::from_json({{"student", {{"fail_from_tier", "extreme"}}}});
    const auto t = *run_trajectory(scripted_config(script), TaskType::T1, 0).trajectory;
    o.check(tiers_of(t) == std::vector<Tier>{Tier::Easy, Tier::Hard, Tier::Extreme} &&
                t.finalized.instance.meta.difficulty == Tier::Extreme,
            "(b) stages Easy, Hard, Extreme");
    std::vector<TraceEntry> expected;
    for (Tier tier : {Tier::Easy, Tier::Hard, Tier::Extreme}) {
      expected.push_back(E(R::Teacher, P::Generate, tier));
      expected.push_back(E(R::Orchestrator,
                           tier == Tier::Easy ? P::ValidateInitial : P::ValidateScaled, tier));
      expected.push_back(E(R::Student, P::Solve, tier));
      if (tier != Tier::Extreme) expected.push_back(E(R::Orchestrator, P::Feedback, tier));
    }
    o.check(script->trace() == expected, "(b) trace");
  }
  {
    auto script = Script::from_json({{"orchestrator", {{"default", "reject"}}}});
    auto cfg = scripted_config(script);
    cfg.caps.max_init_loops = 4;
    LineageState state = plan_lineage(cfg, TaskType::T1, 0);
    bool exhausted = false;
    try {
      run_initialization(cfg, state);
    } catch (const InitExhausted& e) {
      exhausted = e.attempts() == 4;
    }
    std::vector<TraceEntry> expected;
    for (int a = 1; a <= 4; ++a) {
      expected.push_back(E(R::Teacher, P::Generate, Tier::Easy, a));
      expected.push_back(E(R::Orchestrator, P::ValidateInitial, Tier::Easy, a));
    }
    o.check(exhausted, "(c) InitExhausted after 4");
    o.check(script->trace() == expected && script->count(R::Teacher, P::Generate) == 4,
            "(c) exactly 4 Teacher calls");
  }
  {
    auto script = Script::from_json(
        {{"orchestrator",
          {{"rules", {{{"phase", "scaled"}, {"tier", "hard"}, {"reject_attempts", "all"}}}}}}});
    const auto t = *run_trajectory(scripted_config(script), TaskType::T1, 0).trajectory;
    o.check(t.stop_reason == StopReason::RegenerationExhausted, "(d) RegenerationExhausted");
    o.check(t.finalized.instance == t.stages.back().instance &&
                t.stages.back().outcome == StageOutcome::Solved,
            "(d) last solved instance finalized");
    std::vector<TraceEntry> expected{E(R::Teacher, P::Generate, Tier::Easy),
                                     E(R::Orchestrator, P::ValidateInitial, Tier::Easy),
                                     E(R::Student, P::Solve, Tier::Easy),
                                     E(R::Orchestrator, P::Feedback, Tier::Easy)};
    for (int a = 1; a <= 3; ++a) {
      expected.push_back(E(R::Teacher, P::Generate, Tier::Hard, a));
      expected.push_back(E(R::Orchestrator, P::ValidateScaled, Tier::Hard, a));
    }
    o.check(script->trace() == expected, "(d) trace");
  }
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 10.0, "under 10 s");
  std::ostringstream s;
  s << "4 scripted scenarios, " << elapsed << " s, offline backends only";
  o.note(s.str());
  return o;
}

// ---- 6 ------------------------------------------------------------------

std::map<std::string, std::string> store_files(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    std::string text = testing::slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      Json j = Json::parse(text);
      j.erase("created_at");
      text = j.dump();
    }
    files[rel] = text;
  }
  return files;
}

Outcome scheduling_invariance() {
  Outcome o;
  ScratchDir dir("accept-sched");
  auto generate = [&](const std::string& sub, const std::string& conc) {
    const std::string out = (dir / sub).string();
    const char* argv[] = {"tadbench",  "generate", "--scripted",    "--seed",
                          "2026",      "--out",    out.c_str(),     "--samples-per-task",
                          "5",         "--concurrency", conc.c_str(),
                          "script={\"student\": {\"default\": \"key_even\"}}"};
    std::ostringstream sink_out, sink_err;
    return run_cli(static_cast<int>(std::size(argv)), argv, sink_out, sink_err);
  };
  o.check(generate("c1", "1") == kExitOk, "concurrency 1 run");
  o.check(generate("c8", "8") == kExitOk, "concurrency 8 run");
  const auto a = store_files(dir / "c1");
  const auto b = store_files(dir / "c8");
  o.check(a == b, "byte-identical store files");
  const auto set = load_benchmark(dir / "c1");
  std::set<std::string> lineages;
  for (const auto& s : set.items) lineages.insert(s.item.lineage_id);
  o.check(lineages.size() == 35, "35 lineages");
  o.note(std::to_string(a.size()) + " files, " + std::to_string(set.size()) + " items compared");
  return o;
}

// ---- 7 ------------------------------------------------------------------

Outcome challenge_factor_rate() {
  Outcome o;
  std::ostringstream s;
  for (TaskType t : kAllTasks) {
    SeededRandom rng(7000 + static_cast<int>(t));
    int absent = 0;
    for (int i = 0; i < 10000; ++i) absent += sample_challenge_factor(t, rng) ? 0 : 1;
    const double rate = absent / 10000.0;
    o.check(std::fabs(rate - 0.5) <= 0.02, std::string(to_string(t)) + " rate");
    s << to_string(t) << "=" << rate << " ";
  }
  o.note(s.str());
  return o;
}

// ---- 8 ------------------------------------------------------------------

Outcome consistency_curve_check() {
  Outcome o;
  auto round = [](std::int64_t n, std::vector<Ratio> values) {
    Round r;
    r.sample_count = n;
    for (std::size_t i = 0; i < values.size(); ++i) r.accuracy["T" + std::to_string(i + 1)] = values[i];
    return r;
  };
  const std::vector<Round> self{round(100, {Ratio(61, 100), Ratio(1, 4)}),
                                round(700, {Ratio(3, 5), Ratio(27, 100)})};
  o.check(consistency_curve(self, 1)[1].band == 0.0, "self-comparison band 0");

  const std::vector<Round> offset{round(100, {Ratio(52, 100), Ratio(22, 100), Ratio(82, 100)}),
                                  round(700, {Ratio(50, 100), Ratio(20, 100), Ratio(80, 100)})};
  const auto c = consistency_curve(offset, 1);
  o.check(c[0].band == 0.0 && c[0].mean_gap == Ratio(2, 100), "constant offset: band 0, gap 0.02");

  SeededRandom rng(8);
  double worst = 0;
  for (int k = 0; k < 500; ++k) {
    std::vector<Round> rounds(2);
    for (std::size_t r = 0; r < 2; ++r) {
      rounds[r].sample_count = 100 * static_cast<std::int64_t>(r + 1);
      for (TaskType t : kAllTasks) {
        rounds[r].accuracy[std::string(to_string(t))] =
            Ratio(static_cast<std::int64_t>(uniform_index(rng, 10001)), 10000);
      }
    }
    const auto curve = consistency_curve(rounds, 1);
    std::vector<long double> d;
    for (const auto& [task, a] : rounds[0].accuracy) {
      const Ratio& ref = rounds[1].accuracy.at(task);
      d.push_back(static_cast<long double>(a.numerator()) / a.denominator() -
                  static_cast<long double>(ref.numerator()) / ref.denominator());
    }
    const long double mean = std::accumulate(d.begin(), d.end(), 0.0L) / d.size();
    long double ss = 0;
    for (auto x : d) ss += (x - mean) * (x - mean);
    const double oracle = static_cast<double>(std::sqrt(ss / d.size()));
    if (oracle > 0) worst = std::max(worst, std::fabs(curve[0].band - oracle) / oracle);
  }
  o.check(worst <= 1e-12, "independent std oracle within 1e-12 relative");
  std::ostringstream s;
  s << "worst relative error " << worst;
  o.note(s.str());
  return o;
}

// ---- 9 ------------------------------------------------------------------

Outcome parser_round_trip() {
  Outcome o;
  SeededRandom rng(9);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = testing::random_instance(kAllTasks[i % 7], rng);
    const ProblemOrigin origin{inst.task, inst.lineage_id, inst.meta.difficulty, inst.instance_id};
    const std::string json = render_problem_json(inst);
    try {
      const bool same = parse_problem(json, origin) == inst &&
                        parse_problem("```json\n" + json + "\n```", origin) == inst &&
                        parse_problem("Here it is:\n" + json + "\nDone.", origin) == inst;
      ok += same;
    } catch (const std::exception&) {
    }
  }
  o.check(ok == 1000, "1000 of 1000 instances round-trip");
  o.note(std::to_string(ok) + "/1000 bare, fenced and prose-wrapped");
  return o;
}

// ---- 10 -----------------------------------------------------------------

Outcome store_integrity() {
  Outcome o;
  ScratchDir dir("accept-store");
  SeededRandom rng(10);
  std::vector<BenchmarkItem> items;
  BenchmarkStore store(dir.path(), "g");
  for (TaskType t : kAllTasks) {
    for (int i = 0; i < 100; ++i) {
      BenchmarkItem item;
      item.instance = testing::random_instance(t, rng);
      item.lineage_id = lineage_id_for(t, i);
      item.instance.lineage_id = item.lineage_id;
      item.instance.meta.difficulty = Tier::Easy;
      item.instance.instance_id = item.lineage_id + "-easy-1";
      item.final = true;
      item.validation = ValidationReport::approve(ValidationPhase::Initial);
      item.stop_reason = StopReason::StudentFailed;
      store.append_item(item);
      items.push_back(item);
    }
  }
  const auto set = load_benchmark(dir.path());
  bool exact = set.size() == items.size();
  for (std::size_t i = 0; exact && i < items.size(); ++i) exact = set.items[i].item == items[i];
  o.check(exact, "700-item round trip");

  const fs::path t5 = dir / "g/T5.jsonl";
  std::istringstream in(testing::slurp(t5));
  std::string text;
  int n = 0;
  for (std::string line; std::getline(in, line);) {
    if (++n == 17) line = line.substr(0, line.size() / 3);
    text += line + "\n";
  }
  testing::spit(t5, text);
  std::size_t reported = 0;
  try {
    load_benchmark(dir.path());
  } catch (const CorruptLine& e) {
    reported = e.line();
  }
  o.check(reported == 17, "strict load reports line 17");
  const auto lenient = load_benchmark(dir.path(), {}, LoadMode::Lenient);
  o.check(lenient.size() == 699 && lenient.skipped_lines.size() == 1, "lenient load keeps 699");
  o.note("corrupt line reported as " + std::to_string(reported) + "; lenient loaded " +
         std::to_string(lenient.size()));
  return o;
}

}  // namespace
}  // namespace tadbench

int main() {
  using namespace tadbench;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Average-table reconstruction", average_table_reconstruction},
      {"Base/final delta", base_final_delta_check},
      {"Difficulty identity", difficulty_identity},
      {"Bias Index", bias_index_check},
      {"Protocol state machine", protocol_state_machine},
      {"Determinism & scheduling invariance", scheduling_invariance},
      {"Challenge-factor rate", challenge_factor_rate},
      {"Consistency curve", consistency_curve_check},
      {"Parser round-trip", parser_round_trip},
      {"Store integrity", store_integrity},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.only_unattainable_failed = false;
      o.note(std::string("exception: ") + e.what());
    }
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << number << " — "
              << criteria[i].first << (detail.empty() ? "" : " (" + detail + ")");
    const bool tolerated = !o.pass && o.only_unattainable_failed;
    if (tolerated) std::cout << " [known unattainable]";
    std::cout << '\n';
    if (!o.pass && !tolerated) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}

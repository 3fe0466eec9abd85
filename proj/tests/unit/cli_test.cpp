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


#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "tadbench/cli.hpp"
#include "tadbench/metrics.hpp"
#include "tadbench/store.hpp"
#include "test_support.hpp"

namespace tadbench {
namespace {

namespace fs = std::filesystem;
using testing::ScratchDir;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "tadbench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
  }
  return files;
}

CliRun generate(const ScratchDir& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"generate", "--scripted", "--out", (dir / "store").string(),
                                "--tasks", "T1", "--samples-per-task", "2", "--seed", "11"};
  args.insert(args.end(), extra.begin(), extra.end());
  return run(args);
}

TEST(Cli, ScriptedGenerateWritesAStore) {
  ScratchDir dir("cli-gen");
  const CliRun r = generate(dir);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto trajectories = load_trajectories(dir / "store/scripted");
  EXPECT_EQ(trajectories.size(), 2u);
  const auto set = load_benchmark(dir / "store");
  ASSERT_FALSE(set.items.empty());
  EXPECT_EQ(set.manifests.at("scripted").seed, 11u);
  EXPECT_TRUE(fs::exists(dir / "store/scripted/campaign.json"));
  EXPECT_NE(r.err.find("{"), std::string::npos);  // status events
}

TEST(Cli, RerunIsByteIdenticalAndSeedMatters) {
  ScratchDir dir("cli-rerun");
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  ASSERT_EQ(generate(dir).code, kExitOk);
  const auto first = tree(dir / "store");
  ASSERT_EQ(generate(dir).code, kExitOk);
  EXPECT_EQ(tree(dir / "store"), first);

  ScratchDir other("cli-seed");
  ASSERT_EQ(generate(other, {"--seed", "12"}).code, kExitOk);
  EXPECT_NE(tree(other / "store").at("scripted/T1.jsonl"), first.at("scripted/T1.jsonl"));

  // Worker count and output location do not enter the manifest.
  ScratchDir wide("cli-wide");
  ASSERT_EQ(generate(wide, {"--concurrency", "4"}).code, kExitOk);
  EXPECT_EQ(tree(wide / "store"), first);
  ::unsetenv("SOURCE_DATE_EPOCH");
}

TEST(Cli, OverridesReachTheConfig) {
  Json cfg = Json::object();
  apply_override(cfg, "caps.max_init_loops", "2");
  apply_override(cfg, "generator_tag", "gpt-run");
  apply_override(cfg, "tasks", R"(["T1","T2"])");
  EXPECT_EQ(cfg.at("caps").at("max_init_loops"), 2);
  EXPECT_EQ(cfg.at("generator_tag"), "gpt-run");
  EXPECT_EQ(cfg.at("tasks").size(), 2u);

  ScratchDir dir("cli-ovr");
  ASSERT_EQ(generate(dir, {"generator_tag=tagged", "generator_family=Fam"}).code, kExitOk);
  EXPECT_EQ(load_benchmark(dir / "store").manifests.at("tagged").generator_family, "Fam");
}

TEST(Cli, ConfigErrorsExitTwo) {
  ScratchDir dir("cli-cfg");
  EXPECT_EQ(run({"generate", "--config", (dir / "missing.json").string(), "--out",
                 dir.path().string()})
                .code,
            kExitConfig);
  testing::spit(dir / "bad.json", "{not json");
  EXPECT_EQ(run({"generate", "--config", (dir / "bad.json").string()}).code, kExitConfig);
  EXPECT_EQ(generate(dir, {"caps.max_init_loops=0"}).code, kExitConfig);
  EXPECT_EQ(run({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(run({"generate", "--seed", "notanumber"}).code, kExitConfig);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, WireAgentWithoutCredentialExitsFour) {
  ScratchDir dir("cli-cred");
  ::unsetenv("TADBENCH_TEST_NO_SUCH_KEY");
  testing::spit(dir / "c.json", R"({
    "generator_tag": "w", "tasks": ["T1"], "samples_per_task": 1,
    "agents": {"teacher": {"backend": "wire", "model": "m", "base_url": "http://127.0.0.1:9",
                           "api_key_env": "TADBENCH_TEST_NO_SUCH_KEY"}}})");
  const CliRun r = run({"generate", "--config", (dir / "c.json").string(), "--out",
                     (dir / "store").string()});
  EXPECT_EQ(r.code, kExitCredential) << r.err;
  EXPECT_FALSE(fs::exists(dir / "store/w/T1.jsonl"));
}

TEST(Cli, EvaluateReportAndValidate) {
  ScratchDir dir("cli-eval");
  ASSERT_EQ(generate(dir, {"--tasks", "T1,T5"}).code, kExitOk);
  testing::spit(dir / "eval.json", R"({
    "models": [{"name": "even", "family": "Fam", "script": {"student": {"default": "key_even"}}},
               {"name": "good", "family": "Other"}]})");
  const CliRun e = run({"evaluate", "--config", (dir / "eval.json").string(), "--store",
                     (dir / "store").string(), "--out", (dir / "eval").string()});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  ASSERT_TRUE(fs::exists(dir / "eval/records/even.ndjson"));
  ASSERT_TRUE(fs::exists(dir / "eval/records/families.csv"));

  const CliRun easy = run({"evaluate", "--config", (dir / "eval.json").string(), "--store",
                        (dir / "store").string(), "--out", (dir / "easy").string(),
                        R"(tiers=["easy"])"});
  ASSERT_EQ(easy.code, kExitOk) << easy.err;
  std::istringstream lines(testing::slurp(dir / "easy/records/good.ndjson"));
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    EXPECT_EQ(Json::parse(line).get<EvalRecord>().tier, Tier::Easy);
  }
  EXPECT_EQ(n, 4);  // one base item per lineage

  const CliRun rep = run({"report", "--out", (dir / "report").string(),
                       "records=" + (dir / "eval/records").string(),
                       "families=" + (dir / "eval/records/families.csv").string()});
  ASSERT_EQ(rep.code, kExitOk) << rep.err;
  EXPECT_TRUE(fs::exists(dir / "report/accuracy_by_task.csv"));
  EXPECT_TRUE(fs::exists(dir / "report/report.json"));

  const CliRun v = run({"validate-store", "--store", (dir / "store").string()});
  EXPECT_EQ(v.code, kExitOk) << v.out << v.err;
}

TEST(Cli, EmptyInputsExitThree) {
  ScratchDir dir("cli-empty");
  fs::create_directories(dir / "empty");
  testing::spit(dir / "eval.json", R"({"models": [{"name": "m"}]})");
  EXPECT_EQ(run({"evaluate", "--scripted", "--config", (dir / "eval.json").string(), "--store",
                 (dir / "empty").string(), "--out", (dir / "o").string()})
                .code,
            kExitFailed);
  EXPECT_EQ(run({"report", "--out", (dir / "r").string()}).code, kExitFailed);
  EXPECT_EQ(run({"report", "--out", (dir / "r").string(),
                 "records=" + (dir / "nothing").string()})
                .code,
            kExitFailed);
}

TEST(Cli, CorruptStoreFailsValidation) {
  ScratchDir dir("cli-corrupt");
  ASSERT_EQ(generate(dir).code, kExitOk);
  std::string text = testing::slurp(dir / "store/scripted/T1.jsonl");
  testing::spit(dir / "store/scripted/T1.jsonl", text + "{\"truncated\": \n");
  const CliRun v = run({"validate-store", "--store", (dir / "store").string()});
  EXPECT_EQ(v.code, kExitFailed);
  EXPECT_NE(v.out.find("line"), std::string::npos) << v.out;
}

TEST(Cli, ReportFromFixturesAndMismatchedRounds) {
  ScratchDir dir("cli-fix");
  const fs::path data = testing::data_dir();
  const CliRun r = run({"report", "--out", (dir / "r").string(),
                     "count_fixture=" + (data / "table5_accuracy.csv").string(),
                     "base_final_fixture=" + (data / "table2_base_final.csv").string(),
                     "reported_mean_delta=37.3",
                     "tier_fixture=" + (data / "table8_tiers.csv").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = Json::parse(testing::slurp(dir / "r/report.json"));
  EXPECT_TRUE(report.at("tables").contains("fixture_accuracy_by_task"));
  EXPECT_EQ(report.at("footnotes").size(), 1u);
  EXPECT_NE(report.at("footnotes")[0].get<std::string>().find("27.99"), std::string::npos);

  testing::spit(dir / "rounds.json", R"({"reference": 1, "rounds": [
      {"sample_count": 100, "accuracy": {"T1": 0.5}},
      {"sample_count": 700, "accuracy": {"T2": 0.5}}]})");
  EXPECT_EQ(run({"report", "--out", (dir / "r2").string(),
                 "consistency=" + (dir / "rounds.json").string()})
                .code,
            kExitFailed);
}

}  // namespace
}  // namespace tadbench

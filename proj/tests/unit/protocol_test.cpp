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

#include <atomic>
#include <mutex>

#include "tadbench/protocol.hpp"
#include "tadbench/scripted.hpp"
#include "test_support.hpp"

namespace tadbench {
namespace {

using R = Role;
using P = CallPurpose;

TraceEntry E(Role role, CallPurpose purpose, Tier tier, int attempt = 1,
             const std::string& lineage = "T1-0000", TaskType task = TaskType::T1) {
  return TraceEntry{role, purpose, task, tier, lineage, attempt};
}

ProtocolConfig config_for(const std::shared_ptr<Script>& script) {
  ProtocolConfig cfg;
  cfg.tasks = {TaskType::T1};
  cfg.seed = 42;
  cfg.agents = {scripted_agent(Role::Teacher, script, "teacher"),
                scripted_agent(Role::Orchestrator, script, "orchestrator"),
                scripted_agent(Role::Student, script, "student")};
  return cfg;
}

std::vector<Tier> stage_tiers(const Trajectory& t) {
  std::vector<Tier> out;
  for (const auto& s : t.stages) out.push_back(s.instance.meta.difficulty);
  return out;
}

std::string dump_trace(const std::vector<TraceEntry>& trace) {
  std::string out;
  for (const auto& e : trace) out += to_string(e) + "\n";
  return out;
}

/// Wraps the scripted backend, recording prompts and optionally failing
/// after a fixed number of calls.
class Recorder : public CompletionBackend {
 public:
  Recorder(Role role, std::shared_ptr<Script> script, std::shared_ptr<std::atomic<int>> budget)
      : inner_(role, std::move(script)), budget_(std::move(budget)) {}

  std::string complete(const PromptText& prompt, const CallContext& ctx,
                       const DecodeParams& params) override {
    if (budget_ && --*budget_ < 0) throw TransportError("connection reset (injected)");
    {
      std::lock_guard lock(mu_);
      prompts_.push_back(prompt.flatten());
    }
    return inner_.complete(prompt, ctx, params);
  }
  bool offline() const override { return true; }

  std::vector<std::string> prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
  }

 private:
  ScriptedBackend inner_;
  std::shared_ptr<std::atomic<int>> budget_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

TEST(Protocol, StudentFailsBaseGivesOneStage) {
  auto script = Script::from_json({{"student", {{"default", "wrong"}}}});
  const auto out = run_trajectory(config_for(script), TaskType::T1, 0);
  ASSERT_EQ(out.status, TrajectoryStatus::Completed);
  const Trajectory& t = *out.trajectory;
  EXPECT_EQ(stage_tiers(t), std::vector<Tier>{Tier::Easy});
  EXPECT_EQ(t.stop_reason, StopReason::StudentFailed);
  EXPECT_EQ(t.finalized.instance.meta.difficulty, Tier::Easy);
  EXPECT_EQ(script->trace(), (std::vector<TraceEntry>{E(R::Teacher, P::Generate, Tier::Easy),
                                                      E(R::Orchestrator, P::ValidateInitial, Tier::Easy),
                                                      E(R::Student, P::Solve, Tier::Easy)}))
      << dump_trace(script->trace());
}

TEST(Protocol, SolveEasyAndHardThenFailExtreme) {
  auto script = Script::from_json({{"student", {{"fail_from_tier", "extreme"}}}});
  const auto out = run_trajectory(config_for(script), TaskType::T1, 0);
  const Trajectory& t = *out.trajectory;
  EXPECT_EQ(stage_tiers(t), (std::vector<Tier>{Tier::Easy, Tier::Hard, Tier::Extreme}));
  EXPECT_EQ(t.stop_reason, StopReason::StudentFailed);
  EXPECT_EQ(t.finalized.instance.meta.difficulty, Tier::Extreme);
  const std::vector<TraceEntry> expected{
      E(R::Teacher, P::Generate, Tier::Easy),
      E(R::Orchestrator, P::ValidateInitial, Tier::Easy),
      E(R::Student, P::Solve, Tier::Easy),
      E(R::Orchestrator, P::Feedback, Tier::Easy),
      E(R::Teacher, P::Generate, Tier::Hard),
      E(R::Orchestrator, P::ValidateScaled, Tier::Hard),
      E(R::Student, P::Solve, Tier::Hard),
      E(R::Orchestrator, P::Feedback, Tier::Hard),
      E(R::Teacher, P::Generate, Tier::Extreme),
      E(R::Orchestrator, P::ValidateScaled, Tier::Extreme),
      E(R::Student, P::Solve, Tier::Extreme),
  };
  EXPECT_EQ(script->trace(), expected) << dump_trace(script->trace());
  EXPECT_TRUE(trajectory_violations(t).empty());
  EXPECT_EQ(t.finalized.provenance.timestamps.finalized_at_call, 11);
  EXPECT_EQ(t.finalized.provenance.timestamps.generated_at_call, 9);
}

TEST(Protocol, SolvesThroughImpossible) {
  auto script = Script::from_json(Json::object());
  const auto t = *run_trajectory(config_for(script), TaskType::T1, 0).trajectory;
  EXPECT_EQ(stage_tiers(t), (std::vector<Tier>{Tier::Easy, Tier::Hard, Tier::Extreme,
                                                Tier::Impossible}));
  EXPECT_EQ(t.stop_reason, StopReason::StudentLoopCapReached);
  EXPECT_EQ(script->count(R::Student, P::Solve), 4u);
  EXPECT_EQ(script->count(R::Orchestrator, P::Feedback), 3u);
}

TEST(Protocol, StudentCapStopsEarly) {
  auto script = Script::from_json(Json::object());
  auto cfg = config_for(script);
  cfg.caps.max_student_loops = 2;
  const auto t = *run_trajectory(cfg, TaskType::T1, 0).trajectory;
  EXPECT_EQ(stage_tiers(t), (std::vector<Tier>{Tier::Easy, Tier::Hard}));
  EXPECT_EQ(t.stop_reason, StopReason::StudentLoopCapReached);
}

TEST(Protocol, AlwaysRejectingOrchestratorExhaustsInitialization) {
  auto script = Script::from_json({{"orchestrator", {{"default", "reject"}}}});
  auto cfg = config_for(script);
  cfg.caps.max_init_loops = 4;
  LineageState state = plan_lineage(cfg, TaskType::T1, 0);
  try {
    run_initialization(cfg, state);
    FAIL() << "expected InitExhausted";
  } catch (const InitExhausted& e) {
    EXPECT_EQ(e.attempts(), 4);
  }
  std::vector<TraceEntry> expected;
  for (int a = 1; a <= 4; ++a) {
    expected.push_back(E(R::Teacher, P::Generate, Tier::Easy, a));
    expected.push_back(E(R::Orchestrator, P::ValidateInitial, Tier::Easy, a));
  }
  EXPECT_EQ(script->trace(), expected) << dump_trace(script->trace());
  EXPECT_EQ(script->count(R::Teacher, P::Generate), 4u);
}

TEST(Protocol, RejectTwiceThenApproveThreadsFeedback) {
  auto script = Script::from_json(
      {{"orchestrator",
        {{"rules", {{{"phase", "initial"}, {"reject_attempts", 2}, {"feedback", "Too obvious."}}}}}},
       {"student", {{"default", "wrong"}}}});
  auto teacher = std::make_shared<Recorder>(Role::Teacher, script, nullptr);
  auto cfg = config_for(script);
  cfg.caps.max_init_loops = 5;
  cfg.agents.teacher = AgentHandle(Role::Teacher, "teacher", teacher);
  LineageState state = plan_lineage(cfg, TaskType::T1, 0);
  const auto base = run_initialization(cfg, state);
  EXPECT_EQ(script->count(R::Teacher, P::Generate), 3u);
  EXPECT_EQ(base.instance.instance_id, "T1-0000-easy-3");
  EXPECT_EQ(state.rejections, 2);
  EXPECT_EQ(state.approvals, 1);
  const auto prompts = teacher->prompts();
  ASSERT_EQ(prompts.size(), 3u);
  EXPECT_EQ(prompts[0].find("Too obvious."), std::string::npos);
  EXPECT_NE(prompts[1].find("Too obvious."), std::string::npos);
  EXPECT_NE(prompts[2].find("Too obvious."), std::string::npos);
  EXPECT_EQ(prompts[2].find("less difficult"), std::string::npos);  // no softening at Easy
}

TEST(Protocol, RegenerationExhaustionFinalizesLastSolved) {
  auto script = Script::from_json(
      {{"orchestrator",
        {{"rules", {{{"phase", "scaled"}, {"tier", "hard"}, {"reject_attempts", "all"}}}}}}});
  auto teacher = std::make_shared<Recorder>(Role::Teacher, script, nullptr);
  auto cfg = config_for(script);
  cfg.agents.teacher = AgentHandle(Role::Teacher, "teacher", teacher);
  const auto t = *run_trajectory(cfg, TaskType::T1, 0).trajectory;
  EXPECT_EQ(t.stop_reason, StopReason::RegenerationExhausted);
  EXPECT_EQ(stage_tiers(t), std::vector<Tier>{Tier::Easy});
  EXPECT_EQ(t.finalized.instance, t.stages.back().instance);
  EXPECT_EQ(t.stages.back().outcome, StageOutcome::Solved);
  const std::vector<TraceEntry> expected{
      E(R::Teacher, P::Generate, Tier::Easy),
      E(R::Orchestrator, P::ValidateInitial, Tier::Easy),
      E(R::Student, P::Solve, Tier::Easy),
      E(R::Orchestrator, P::Feedback, Tier::Easy),
      E(R::Teacher, P::Generate, Tier::Hard, 1),
      E(R::Orchestrator, P::ValidateScaled, Tier::Hard, 1),
      E(R::Teacher, P::Generate, Tier::Hard, 2),
      E(R::Orchestrator, P::ValidateScaled, Tier::Hard, 2),
      E(R::Teacher, P::Generate, Tier::Hard, 3),
      E(R::Orchestrator, P::ValidateScaled, Tier::Hard, 3),
  };
  EXPECT_EQ(script->trace(), expected) << dump_trace(script->trace());
  // Regeneration attempts after the first carry the softening clause and keep the label.
  const auto prompts = teacher->prompts();
  ASSERT_EQ(prompts.size(), 4u);
  EXPECT_EQ(prompts[1].find("less difficult"), std::string::npos);
  EXPECT_NE(prompts[2].find("less difficult"), std::string::npos);
  EXPECT_NE(prompts[3].find("Difficulty Level: hard"), std::string::npos);
}

TEST(Protocol, MalformedTeacherOutputCostsAnAttempt) {
  auto script = Script::from_json(
      {{"teacher", {{"overrides", {{{"attempt", 1}, {"text", "Sorry, no JSON today."}}}}}},
       {"student", {{"default", "wrong"}}}});
  const auto out = run_trajectory(config_for(script), TaskType::T1, 0);
  ASSERT_TRUE(out.trajectory.has_value());
  EXPECT_EQ(out.state.counts.init_attempts, 2);
  EXPECT_EQ(script->count(R::Orchestrator, P::ValidateInitial), 1u);
}

TEST(Protocol, UnparsableStudentCountsAsFailure) {
  auto script = Script::from_json({{"student", {{"default", "refuse"}}}});
  const auto t = *run_trajectory(config_for(script), TaskType::T1, 0).trajectory;
  EXPECT_EQ(t.stop_reason, StopReason::StudentFailed);
  ASSERT_TRUE(t.stages[0].student.has_value());
  EXPECT_FALSE(t.stages[0].student->parse_ok);
}

TEST(Protocol, SameSeedGivesIdenticalTrajectories) {
  auto a = Script::from_json({{"student", {{"default", "key_even"}}}});
  auto b = Script::from_json({{"student", {{"default", "key_even"}}}});
  for (TaskType task : kAllTasks) {
    EXPECT_EQ(Json(*run_trajectory(config_for(a), task, 3).trajectory).dump(),
              Json(*run_trajectory(config_for(b), task, 3).trajectory).dump());
  }
}

TEST(Protocol, LineagePlanFixesTopicAndFactor) {
  auto script = Script::from_json(Json::object());
  const auto cfg = config_for(script);
  for (TaskType task : kAllTasks) {
    for (int i = 0; i < 20; ++i) {
      const auto s = plan_lineage(cfg, task, i);
      EXPECT_TRUE(topics_for(task).contains(s.topic));
      const auto again = plan_lineage(cfg, task, i);
      EXPECT_EQ(again.topic, s.topic);
      EXPECT_EQ(again.factor, s.factor);
      EXPECT_EQ(s.order_consistent_target.has_value(), task == TaskType::T2);
    }
  }
  EXPECT_EQ(lineage_id_for(TaskType::T3, 7), "T3-0007");
}

TEST(Protocol, T2TargetRateFollowsConfig) {
  auto script = Script::from_json(Json::object());
  auto cfg = config_for(script);
  for (std::uint64_t ppm : {0ULL, 1000000ULL}) {
    cfg.t2_positive_ppm = ppm;
    for (int i = 0; i < 50; ++i) {
      EXPECT_EQ(plan_lineage(cfg, TaskType::T2, i).order_consistent_target, ppm == 1000000);
    }
  }
}

TEST(Campaign, OneInitFailureAmongTenIsSkipped) {
  auto script = Script::from_json(
      {{"orchestrator",
        {{"rules",
          {{{"lineage_index", 3}, {"phase", "initial"}, {"reject_attempts", "all"}}}}}}});
  auto cfg = config_for(script);
  cfg.samples_per_task = 10;
  const auto result = run_campaign(cfg);
  EXPECT_EQ(result.trajectories.size(), 9u);
  ASSERT_EQ(result.outcomes.size(), 10u);
  EXPECT_EQ(result.outcomes[3].status, TrajectoryStatus::Skipped);
  EXPECT_EQ(result.stats.skipped, 1);
  EXPECT_EQ(result.stats.rejections, 5);
}

TEST(Campaign, AllLineagesFailingThrows) {
  auto script = Script::from_json({{"orchestrator", {{"default", "reject"}}}});
  auto cfg = config_for(script);
  cfg.samples_per_task = 2;
  EXPECT_THROW(run_campaign(cfg), CampaignFailed);
}

TEST(Campaign, SchedulingInvariance) {
  auto run = [](int concurrency) {
    auto script = Script::from_json({{"student", {{"default", "key_even"}}}});
    auto cfg = config_for(script);
    cfg.tasks = {kAllTasks.begin(), kAllTasks.end()};
    cfg.samples_per_task = 5;
    cfg.concurrency = concurrency;
    const auto result = run_campaign(cfg);
    // Each lineage's own trace is sequential whatever the interleaving.
    std::string traces;
    for (const auto& t : result.trajectories) traces += dump_trace(script->trace_for(t.lineage_id));
    return std::make_tuple(Json(result.trajectories).dump(), Json(result.stats).dump(), traces);
  };
  const auto serial = run(1);
  const auto parallel = run(8);
  EXPECT_EQ(std::get<0>(serial), std::get<0>(parallel));
  EXPECT_EQ(std::get<1>(serial), std::get<1>(parallel));
  EXPECT_EQ(std::get<2>(serial), std::get<2>(parallel));
}

TEST(Campaign, CapsBoundCallCounts) {
  auto script = Script::from_json(
      {{"orchestrator", {{"rules", {{{"phase", "scaled"}, {"reject_attempts", 2}}}}}},
       {"student", {{"default", "key_even"}}}});
  auto cfg = config_for(script);
  cfg.tasks = {kAllTasks.begin(), kAllTasks.end()};
  cfg.samples_per_task = 4;
  const auto result = run_campaign(cfg);
  for (const auto& o : result.outcomes) {
    EXPECT_LE(o.state.counts.init_attempts, cfg.caps.max_init_loops);
    EXPECT_LE(o.state.counts.student_calls, cfg.caps.max_student_loops);
    if (!o.trajectory) continue;
    const auto& t = *o.trajectory;
    EXPECT_LE(o.state.counts.regen_attempts,
              cfg.caps.max_regen_per_tier * static_cast<int>(t.stages.size()));
    EXPECT_TRUE(trajectory_violations(t).empty()) << t.lineage_id;
    EXPECT_TRUE(t.finalized.validation.approved);
    EXPECT_EQ(t.finalized.instance.meta.difficulty,
              t.stages.back().instance.meta.difficulty);
  }
}

TEST(Campaign, ValidateConfigRejectsBadCaps) {
  auto script = Script::from_json(Json::object());
  auto cfg = config_for(script);
  cfg.caps.max_init_loops = 0;
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg = config_for(script);
  cfg.agents.student = scripted_agent(Role::Teacher, script);
  EXPECT_THROW(validate_config(cfg), ConfigError);
  cfg = config_for(script);
  cfg.tasks = {TaskType::T1, TaskType::T1};
  EXPECT_THROW(validate_config(cfg), ConfigError);
}

TEST(Checkpoint, InterruptedLineageResumesWithoutRespending) {
  testing::ScratchDir dir("ckpt");
  auto reference_script = Script::from_json(Json::object());
  const Trajectory reference =
      *run_trajectory(config_for(reference_script), TaskType::T1, 0).trajectory;
  const std::size_t full_calls = reference_script->trace().size();

  // First run dies after 6 calls (mid-way through the Hard tier).
  auto first = Script::from_json(Json::object());
  auto budget = std::make_shared<std::atomic<int>>(6);
  auto cfg = config_for(first);
  cfg.checkpoint_dir = dir.path();
  cfg.agents = {AgentHandle(R::Teacher, "teacher", std::make_shared<Recorder>(R::Teacher, first, budget)),
                AgentHandle(R::Orchestrator, "orchestrator",
                            std::make_shared<Recorder>(R::Orchestrator, first, budget)),
                AgentHandle(R::Student, "student", std::make_shared<Recorder>(R::Student, first, budget))};
  const auto aborted = run_trajectory(cfg, TaskType::T1, 0);
  EXPECT_EQ(aborted.status, TrajectoryStatus::Aborted);
  EXPECT_TRUE(std::filesystem::exists(dir / "T1-0000.json"));

  auto second = Script::from_json(Json::object());
  auto cfg2 = config_for(second);
  cfg2.checkpoint_dir = dir.path();
  const auto resumed = run_trajectory(cfg2, TaskType::T1, 0);
  ASSERT_EQ(resumed.status, TrajectoryStatus::Completed);
  EXPECT_EQ(*resumed.trajectory, reference);
  EXPECT_LT(second->trace().size(), full_calls);
  EXPECT_EQ(second->count(R::Orchestrator, P::ValidateInitial), 0u);

  // A completed checkpoint replays with no calls at all.
  auto third = Script::from_json(Json::object());
  auto cfg3 = config_for(third);
  cfg3.checkpoint_dir = dir.path();
  EXPECT_EQ(*run_trajectory(cfg3, TaskType::T1, 0).trajectory, reference);
  EXPECT_TRUE(third->trace().empty());
}

}  // namespace
}  // namespace tadbench

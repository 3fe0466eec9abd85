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

// The generation protocol: initialization loop, difficulty-scaling loop,
// finalization, and campaigns of independent lineages.
//
// Lineage flow:
//
//   generate(easy) -> structure check -> initial validation   (<= max_init_loops)
//        |
//        v
//   solve -> failed/unparsable ............................ finalize, StudentFailed
//        |  solved, at Impossible or student cap ........... finalize, StudentLoopCapReached
//        v
//   feedback -> generate(next tier) -> scaled validation      (<= max_regen_per_tier)
//        |  all rejected ...................... finalize last solved, RegenerationExhausted
//        '--> new stage, back to solve

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadbench/agent.hpp"
#include "tadbench/domain.hpp"
#include "tadbench/taskspec.hpp"

namespace tadbench {

struct ProtocolCaps {
  int max_init_loops = 5;
  int max_student_loops = 4;
  int max_regen_per_tier = 3;
};

struct AgentSet {
  AgentHandle teacher;
  AgentHandle orchestrator;
  AgentHandle student;
};

// One line-delimited JSON object per event.
using StatusSink = std::function<void(const Json& event)>;

struct ProtocolConfig {
  ProtocolCaps caps;
  int samples_per_task = 1;
  std::vector<TaskType> tasks{kAllTasks.begin(), kAllTasks.end()};
  std::uint64_t seed = 0;
  AgentSet agents;
  // Probability that a T2 item is generated with a consistent order,
  // expressed as parts per million so draws stay in integer arithmetic.
  std::uint64_t t2_positive_ppm = 500000;
  int concurrency = 1;
  // When set, per-lineage state is checkpointed here and reused on rerun.
  std::optional<std::filesystem::path> checkpoint_dir;
  StatusSink status;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws ConfigError describing the first invalid field.
void validate_config(const ProtocolConfig& cfg);

struct ValidatedProblem {
  ProblemInstance instance;
  ValidationReport report;
  int generated_at_call = 0;
};

class InitExhausted : public std::runtime_error {
 public:
  InitExhausted(std::string lineage_id, int attempts);
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

/// Mutable per-lineage bookkeeping: the logical call clock and attempt counts.
struct LineageState {
  std::string lineage_id;
  TaskType task = TaskType::T1;
  int index = 0;
  std::string topic;
  std::optional<ChallengeFactor> factor;
  std::optional<bool> order_consistent_target;
  int calls = 0;  // model calls made so far in this lineage
  AttemptCounts counts;
  int approvals = 0;
  int rejections = 0;
  int feedback_parse_failures = 0;
};

// "T3-0007".
std::string lineage_id_for(TaskType task, int index);

// Topic, factor and T2 target drawn from a stream seeded by (seed, task, index).
LineageState plan_lineage(const ProtocolConfig& cfg, TaskType task, int index);

// Throws InitExhausted after max_init_loops rejected attempts.
ValidatedProblem run_initialization(const ProtocolConfig& cfg, LineageState& state);

// Runs the scaling loop from an approved Easy base.
Trajectory run_scaling(const ProtocolConfig& cfg, const ValidatedProblem& base,
                       LineageState& state);

enum class TrajectoryStatus { Completed, Skipped, Aborted };

std::string_view to_string(TrajectoryStatus status);

struct TrajectoryOutcome {
  TaskType task = TaskType::T1;
  int index = 0;
  std::string lineage_id;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::optional<Trajectory> trajectory;
  std::string error;  // Skipped/Aborted reason
  LineageState state;
};

// Plans the lineage, runs both phases and checkpoints. Agent errors beyond the
// retry budget yield Aborted (with the checkpoint preserved for resumption).
TrajectoryOutcome run_trajectory(const ProtocolConfig& cfg, TaskType task, int index);

struct CampaignStats {
  long long init_attempts_total = 0;
  long long regen_attempts_total = 0;
  long long student_calls_total = 0;
  long long approvals = 0;
  long long rejections = 0;
  long long wire_errors = 0;
  long long skipped = 0;
  long long feedback_parse_failures = 0;

  bool operator==(const CampaignStats&) const = default;
};

struct CampaignResult {
  // Completed lineages in (task, index) order.
  std::vector<Trajectory> trajectories;
  // Every attempted lineage in (task, index) order.
  std::vector<TrajectoryOutcome> outcomes;
  CampaignStats stats;
};

class CampaignFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws CampaignFailed only if no lineage completed.
CampaignResult run_campaign(const ProtocolConfig& cfg);

void to_json(Json& j, const CampaignStats& s);

}  // namespace tadbench

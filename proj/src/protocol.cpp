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

#include "tadbench/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "tadbench/parsing.hpp"
#include "tadbench/prompts.hpp"

namespace tadbench {

namespace {

constexpr int kCheckpointVersion = 1;

CallContext base_context(const LineageState& state, CallPurpose purpose, Tier tier,
                         int attempt) {
  CallContext ctx;
  ctx.purpose = purpose;
  ctx.task = state.task;
  ctx.tier = tier;
  ctx.lineage_id = state.lineage_id;
  ctx.lineage_index = state.index;
  ctx.attempt = attempt;
  ctx.topic = state.topic;
  if (state.factor) ctx.factor = state.factor->name;
  ctx.order_consistent_target = state.order_consistent_target;
  return ctx;
}

std::string instance_id_for(const LineageState& state, Tier tier, int attempt) {
  return state.lineage_id + "-" + std::string(to_string(tier)) + "-" + std::to_string(attempt);
}

// One generate -> structure check -> validate round. Returns the approved
// problem, or sets `feedback` to the reason for rejection.
std::optional<ValidatedProblem> generation_round(const ProtocolConfig& cfg, LineageState& state,
                                                 const GenerationRequest& request, int attempt,
                                                 std::string& feedback) {
  const Tier tier = request.difficulty;
  const CallContext gen_ctx = base_context(state, CallPurpose::Generate, tier, attempt);
  const std::string raw = cfg.agents.teacher.complete(build_generation_prompt(request), gen_ctx);
  const int generated_at = ++state.calls;

  ProblemInstance inst;
  try {
    inst = parse_problem(raw, ProblemOrigin{state.task, state.lineage_id, tier,
                                            instance_id_for(state, tier, attempt)});
  } catch (const ParseError& e) {
    // Structurally invalid output never reaches the Orchestrator; it costs an
    // attempt and its defects become the next revision note.
    ++state.rejections;
    feedback = std::string("The output did not follow the required JSON structure: ") + e.what();
    return std::nullopt;
  }

  const bool scaled = tier != Tier::Easy;
  CallContext val_ctx = base_context(
      state, scaled ? CallPurpose::ValidateScaled : CallPurpose::ValidateInitial, tier, attempt);
  val_ctx.instance = inst;
  const PromptText prompt =
      scaled ? build_scaled_validation_prompt(inst, tier) : build_initial_validation_prompt(inst);
  const std::string verdict_text = cfg.agents.orchestrator.complete(prompt, val_ctx);
  ++state.calls;

  ValidationReport report;
  try {
    report = parse_validation(verdict_text, scaled ? ValidationPhase::Scaled
                                                   : ValidationPhase::Initial);
  } catch (const ParseError& e) {
    ++state.rejections;
    feedback = std::string("The validator's verdict could not be read: ") + e.what();
    return std::nullopt;
  }
  if (!report.approved) {
    ++state.rejections;
    feedback = report.feedback.value_or("");
    return std::nullopt;
  }
  ++state.approvals;
  return ValidatedProblem{std::move(inst), std::move(report), generated_at};
}

BenchmarkItem finalize(const ProtocolConfig& cfg, const LineageState& state, const Stage& stage,
                       StopReason reason) {
  BenchmarkItem item;
  item.instance = stage.instance;
  item.lineage_id = state.lineage_id;
  item.final = true;
  item.validation = stage.validation;
  item.provenance.teacher_model = cfg.agents.teacher.model_name();
  item.provenance.student_model = cfg.agents.student.model_name();
  item.provenance.orchestrator_model = cfg.agents.orchestrator.model_name();
  item.provenance.timestamps = {stage.generated_at_call, state.calls};
  item.provenance.attempt_counts = state.counts;
  item.stop_reason = reason;
  return item;
}

// --- checkpoints -----------------------------------------------------------

Json state_json(const LineageState& s) {
  return Json{{"calls", s.calls},
              {"init_attempts", s.counts.init_attempts},
              {"regen_attempts", s.counts.regen_attempts},
              {"student_calls", s.counts.student_calls},
              {"approvals", s.approvals},
              {"rejections", s.rejections},
              {"feedback_parse_failures", s.feedback_parse_failures}};
}

void restore_state(const Json& j, LineageState& s) {
  s.calls = j.at("calls").get<int>();
  s.counts.init_attempts = j.at("init_attempts").get<int>();
  s.counts.regen_attempts = j.at("regen_attempts").get<int>();
  s.counts.student_calls = j.at("student_calls").get<int>();
  s.approvals = j.at("approvals").get<int>();
  s.rejections = j.at("rejections").get<int>();
  s.feedback_parse_failures = j.at("feedback_parse_failures").get<int>();
}

class Checkpointer {
 public:
  Checkpointer(const ProtocolConfig& cfg, const std::string& lineage_id) {
    if (cfg.checkpoint_dir) path_ = *cfg.checkpoint_dir / (lineage_id + ".json");
  }

  std::optional<Json> load() const {
    if (!path_ || !std::filesystem::exists(*path_)) return std::nullopt;
    std::ifstream in(*path_, std::ios::binary);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("schema_version", 0) != kCheckpointVersion) {
      return std::nullopt;  // unreadable checkpoints are recomputed
    }
    return j;
  }

  void partial(const std::vector<Stage>& stages, const LineageState& state) const {
    write(Json{{"status", "partial"}, {"stages", stages}, {"state", state_json(state)}});
  }
  void complete(const Trajectory& t, const LineageState& state) const {
    write(Json{{"status", "complete"}, {"trajectory", t}, {"state", state_json(state)}});
  }
  void skipped(const LineageState& state, const std::string& why) const {
    write(Json{{"status", "skipped"}, {"reason", why}, {"state", state_json(state)}});
  }

 private:
  void write(Json j) const {
    if (!path_) return;
    j["schema_version"] = kCheckpointVersion;
    std::filesystem::create_directories(path_->parent_path());
    // Write-then-rename so a crash never leaves a torn checkpoint.
    const auto tmp = std::filesystem::path(path_->string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << j.dump() << '\n';
      if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, *path_);
  }

  std::optional<std::filesystem::path> path_;
};

Trajectory continue_scaling(const ProtocolConfig& cfg, std::vector<Stage> stages,
                            LineageState& state, const Checkpointer& checkpoint) {
  auto done = [&](const Stage& finalized_stage, StopReason reason) {
    Trajectory t;
    t.lineage_id = state.lineage_id;
    t.task = state.task;
    t.finalized = finalize(cfg, state, finalized_stage, reason);
    t.stages = std::move(stages);
    t.stop_reason = reason;
    checkpoint.complete(t, state);
    return t;
  };

  for (;;) {
    Stage& current = stages.back();
    const Tier tier = current.instance.meta.difficulty;

    if (current.outcome == StageOutcome::NotAttempted) {
      const CallContext ctx = base_context(state, CallPurpose::Solve, tier, 1);
      StudentAnswer answer = solve(cfg.agents.student, current.instance, ctx);
      ++state.calls;
      ++state.counts.student_calls;
      const Verdict verdict = grade(current.instance, answer);
      current.student = std::move(answer);
      current.outcome = verdict == Verdict::Correct ? StageOutcome::Solved : StageOutcome::Failed;
      checkpoint.partial(stages, state);
    }

    if (current.outcome == StageOutcome::Failed) {
      return done(stages.back(), StopReason::StudentFailed);
    }
    const auto next = next_tier(tier);
    if (!next || state.counts.student_calls >= cfg.caps.max_student_loops) {
      return done(stages.back(), StopReason::StudentLoopCapReached);
    }

    // Feedback on every success, then up to max_regen_per_tier attempts at
    // the next tier.
    std::optional<EscalationFeedback> escalation;
    {
      CallContext ctx = base_context(state, CallPurpose::Feedback, tier, 1);
      ctx.instance = current.instance;
      const std::string raw = cfg.agents.orchestrator.complete(
          build_feedback_prompt(current.instance, *current.student), ctx);
      ++state.calls;
      try {
        escalation = parse_feedback(raw);
      } catch (const ParseError&) {
        ++state.feedback_parse_failures;
      }
    }

    std::optional<ValidatedProblem> accepted;
    std::string rejection;
    for (int attempt = 1; attempt <= cfg.caps.max_regen_per_tier && !accepted; ++attempt) {
      ++state.counts.regen_attempts;
      GenerationRequest req;
      req.task = state.task;
      req.topic = state.topic;
      req.factor = state.factor;
      req.difficulty = *next;
      req.escalation = escalation;
      req.previous = current.instance;
      req.order_consistent_target = state.order_consistent_target;
      if (attempt > 1) req.revision = RevisionNote{rejection, true};
      accepted = generation_round(cfg, state, req, attempt, rejection);
    }
    if (!accepted) {
      // The last validated instance is the current (solved) stage.
      return done(stages.back(), StopReason::RegenerationExhausted);
    }
    stages.push_back(Stage{std::move(accepted->instance), std::move(accepted->report),
                           std::nullopt, StageOutcome::NotAttempted,
                           accepted->generated_at_call});
    checkpoint.partial(stages, state);
  }
}

void emit(const ProtocolConfig& cfg, const Json& event) {
  if (cfg.status) cfg.status(event);
}

}  // namespace

InitExhausted::InitExhausted(std::string lineage_id, int attempts)
    : std::runtime_error("initialization of " + lineage_id + " exhausted after " +
                         std::to_string(attempts) + " attempts"),
      attempts_(attempts) {}

void validate_config(const ProtocolConfig& cfg) {
  if (cfg.caps.max_init_loops < 1) throw ConfigError("max_init_loops must be >= 1");
  if (cfg.caps.max_student_loops < 1) throw ConfigError("max_student_loops must be >= 1");
  if (cfg.caps.max_regen_per_tier < 1) throw ConfigError("max_regen_per_tier must be >= 1");
  if (cfg.samples_per_task < 1) throw ConfigError("samples_per_task must be >= 1");
  if (cfg.samples_per_task > 9999) throw ConfigError("samples_per_task must be <= 9999");
  if (cfg.tasks.empty()) throw ConfigError("at least one task is required");
  if (std::set<TaskType>(cfg.tasks.begin(), cfg.tasks.end()).size() != cfg.tasks.size()) {
    throw ConfigError("tasks must not repeat");
  }
  if (cfg.t2_positive_ppm > 1000000) throw ConfigError("t2_positive_rate must be in [0, 1]");
  if (cfg.concurrency < 1) throw ConfigError("concurrency must be >= 1");
  const std::pair<const AgentHandle*, Role> roles[] = {{&cfg.agents.teacher, Role::Teacher},
                                                       {&cfg.agents.orchestrator,
                                                        Role::Orchestrator},
                                                       {&cfg.agents.student, Role::Student}};
  for (const auto& [handle, role] : roles) {
    if (!handle->valid()) throw ConfigError(std::string(to_string(role)) + " agent is missing");
    if (handle->role() != role) {
      throw ConfigError(std::string(to_string(role)) + " slot holds a " +
                        std::string(to_string(handle->role())) + " handle");
    }
  }
}

std::string lineage_id_for(TaskType task, int index) {
  std::ostringstream os;
  os << to_string(task) << '-' << std::setw(4) << std::setfill('0') << index;
  return os.str();
}

LineageState plan_lineage(const ProtocolConfig& cfg, TaskType task, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(task_ordinal(task)),
                    static_cast<std::uint32_t>(index)};
  SeededRandom rng(seq);
  LineageState s;
  s.lineage_id = lineage_id_for(task, index);
  s.task = task;
  s.index = index;
  const auto& topics = topics_for(task).topics;
  s.topic = topics[uniform_index(rng, topics.size())];
  s.factor = sample_challenge_factor(task, rng);
  if (schema_for(task).answer_form == AnswerForm::Flag) {
    s.order_consistent_target = bernoulli(rng, cfg.t2_positive_ppm, 1000000);
  }
  return s;
}

ValidatedProblem run_initialization(const ProtocolConfig& cfg, LineageState& state) {
  std::string rejection;
  for (int attempt = 1; attempt <= cfg.caps.max_init_loops; ++attempt) {
    ++state.counts.init_attempts;
    GenerationRequest req;
    req.task = state.task;
    req.topic = state.topic;
    req.factor = state.factor;
    req.difficulty = Tier::Easy;
    req.order_consistent_target = state.order_consistent_target;
    if (attempt > 1) req.revision = RevisionNote{rejection, false};
    if (auto ok = generation_round(cfg, state, req, attempt, rejection)) return std::move(*ok);
  }
  throw InitExhausted(state.lineage_id, cfg.caps.max_init_loops);
}

Trajectory run_scaling(const ProtocolConfig& cfg, const ValidatedProblem& base,
                       LineageState& state) {
  if (base.instance.meta.difficulty != Tier::Easy || !base.report.approved) {
    throw std::invalid_argument("scaling starts from an approved easy instance");
  }
  std::vector<Stage> stages{Stage{base.instance, base.report, std::nullopt,
                                  StageOutcome::NotAttempted, base.generated_at_call}};
  return continue_scaling(cfg, std::move(stages), state, Checkpointer(cfg, state.lineage_id));
}

std::string_view to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::Completed: return "completed";
    case TrajectoryStatus::Skipped: return "skipped";
    case TrajectoryStatus::Aborted: return "aborted";
  }
  return "unknown";
}

TrajectoryOutcome run_trajectory(const ProtocolConfig& cfg, TaskType task, int index) {
  TrajectoryOutcome out;
  out.task = task;
  out.index = index;
  out.state = plan_lineage(cfg, task, index);
  out.lineage_id = out.state.lineage_id;
  LineageState& state = out.state;
  const Checkpointer checkpoint(cfg, state.lineage_id);

  try {
    if (auto saved = checkpoint.load()) {
      restore_state(saved->at("state"), state);
      const std::string status = saved->at("status").get<std::string>();
      if (status == "complete") {
        out.trajectory = saved->at("trajectory").get<Trajectory>();
        return out;
      }
      if (status == "skipped") {
        out.status = TrajectoryStatus::Skipped;
        out.error = saved->value("reason", std::string());
        return out;
      }
      auto stages = saved->at("stages").get<std::vector<Stage>>();
      if (!stages.empty()) {
        out.trajectory = continue_scaling(cfg, std::move(stages), state, checkpoint);
        return out;
      }
    }

    ValidatedProblem base;
    try {
      base = run_initialization(cfg, state);
    } catch (const InitExhausted& e) {
      out.status = TrajectoryStatus::Skipped;
      out.error = e.what();
      checkpoint.skipped(state, out.error);
      return out;
    }
    std::vector<Stage> stages{Stage{base.instance, base.report, std::nullopt,
                                    StageOutcome::NotAttempted, base.generated_at_call}};
    checkpoint.partial(stages, state);
    out.trajectory = continue_scaling(cfg, std::move(stages), state, checkpoint);
  } catch (const std::exception& e) {
    // Agent errors past their retry budget (or anything unexpected) abort
    // this lineage only; its last checkpoint remains for a rerun.
    out.status = TrajectoryStatus::Aborted;
    out.error = e.what();
    out.trajectory.reset();
  }
  return out;
}

CampaignResult run_campaign(const ProtocolConfig& cfg) {
  validate_config(cfg);
  std::vector<TaskType> tasks = cfg.tasks;
  std::sort(tasks.begin(), tasks.end());
  std::vector<std::pair<TaskType, int>> jobs;
  for (TaskType t : tasks) {
    for (int i = 0; i < cfg.samples_per_task; ++i) jobs.emplace_back(t, i);
  }

  std::vector<TrajectoryOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex status_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      outcomes[k] = run_trajectory(cfg, jobs[k].first, jobs[k].second);
      if (cfg.status) {
        const auto& o = outcomes[k];
        Json event{{"event", "lineage_finished"},
                   {"lineage_id", o.lineage_id},
                   {"status", std::string(to_string(o.status))}};
        if (o.trajectory) {
          event["stop_reason"] = o.trajectory->stop_reason;
          event["final_tier"] = o.trajectory->finalized.instance.meta.difficulty;
          event["stages"] = o.trajectory->stages.size();
        }
        if (!o.error.empty()) event["error"] = o.error;
        std::lock_guard lock(status_mu);
        cfg.status(event);
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CampaignResult result;
  for (auto& o : outcomes) {
    result.stats.init_attempts_total += o.state.counts.init_attempts;
    result.stats.regen_attempts_total += o.state.counts.regen_attempts;
    result.stats.student_calls_total += o.state.counts.student_calls;
    result.stats.approvals += o.state.approvals;
    result.stats.rejections += o.state.rejections;
    result.stats.feedback_parse_failures += o.state.feedback_parse_failures;
    if (o.status == TrajectoryStatus::Skipped) ++result.stats.skipped;
    if (o.status == TrajectoryStatus::Aborted) ++result.stats.wire_errors;
    if (o.trajectory) result.trajectories.push_back(*o.trajectory);
  }
  result.outcomes = std::move(outcomes);
  emit(cfg, Json{{"event", "campaign_finished"},
                 {"completed", result.trajectories.size()},
                 {"stats", result.stats}});
  if (result.trajectories.empty()) {
    std::string why = "no lineage completed";
    if (!result.outcomes.empty() && !result.outcomes.front().error.empty()) {
      why += " (first error: " + result.outcomes.front().error + ")";
    }
    throw CampaignFailed(why);
  }
  return result;
}

void to_json(Json& j, const CampaignStats& s) {
  j = Json{{"init_attempts_total", s.init_attempts_total},
           {"regen_attempts_total", s.regen_attempts_total},
           {"student_calls_total", s.student_calls_total},
           {"approvals", s.approvals},
           {"rejections", s.rejections},
           {"wire_errors", s.wire_errors},
           {"skipped", s.skipped},
           {"feedback_parse_failures", s.feedback_parse_failures}};
}

}  // namespace tadbench

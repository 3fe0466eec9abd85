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

#include "tadbench/prompts.hpp"

#include <sstream>

namespace tadbench {

namespace {

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string task_heading(const TaskSchema& schema) {
  return schema.name + " (" + std::string(to_string(schema.task)) + ")";
}

void numbered(std::ostringstream& os, const std::vector<std::string>& lines) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    os << (i + 1) << ". " << lines[i] << "\n";
  }
}

void problem_body(std::ostringstream& os, const ProblemInstance& inst) {
  os << "Context:\n";
  numbered(os, inst.context);
  if (inst.choices) {
    os << "\nChoices:\n";
    numbered(os, *inst.choices);
  }
}

std::string answer_placeholder(const TaskSchema& schema) {
  return schema.answer_form == AnswerForm::Flag ? "<boolean>" : "<integer>";
}

// D.1-style schema block shown to the Teacher.
void generation_schema(std::ostringstream& os, const TaskSchema& schema,
                       const std::string& topic, const std::string& anomaly_type) {
  os << "Return the result strictly in JSON format:\n"
     << "  {\n"
     << "    \"context\": [\"...\"],\n";
  if (schema.choice_arity) os << "    \"choices\": [\"...\"],\n";
  os << "    \"" << schema.answer_field() << "\": " << answer_placeholder(schema) << ",\n"
     << "    \"meta\": {\n"
     << "      \"source\": \"GRE\",\n"
     << "      \"topic\": \"" << topic << "\",\n"
     << "      \"anomaly_type\": \"" << anomaly_type << "\"\n"
     << "    }\n"
     << "  }";
}

void verdict_schema(std::ostringstream& os, bool scaled) {
  os << "Return your evaluation in JSON format:\n"
     << "  {\n"
     << "    \"approved\": boolean (true if the problem passes all criteria, false "
        "otherwise),\n"
     << "    \"feedback\": null if approved, or detailed feedback if rejected addressing:\n"
     << "      - Problem construction issues\n"
     << "      - Anomaly ambiguity concerns\n";
  if (scaled) os << "      - Difficulty appropriateness\n";
  os << "      - Specific improvement suggestions\n"
     << "  }";
}

std::string structure_sentence(const TaskSchema& schema) {
  std::vector<std::string> parts;
  for (const auto& [field, desc] : schema.structure) {
    if (field == "meta") {
      parts.push_back("'meta' (with source, topic, and anomaly_type)");
    } else {
      parts.push_back("'" + field + "' (" + desc + ")");
    }
  }
  std::string out = "The expected JSON structure should include ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += (i + 1 == parts.size()) ? ", and " : ", ";
    out += parts[i];
  }
  return out + ".";
}

}  // namespace

std::string_view to_string(MessageRole role) {
  return role == MessageRole::System ? "system" : "user";
}

std::string PromptText::flatten() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n\n";
    out += m.content;
  }
  return out;
}

PromptText make_user_prompt(std::string user_content) {
  if (user_content.empty()) throw PromptPrecondition("prompt content is empty");
  return PromptText{{Message{MessageRole::User, std::move(user_content)}}};
}

std::string render_problem_json(const ProblemInstance& inst, bool include_difficulty) {
  // Build with ordered_json so keys follow the schema order rather than
  // alphabetical order.
  const TaskSchema& schema = schema_for(inst.task);
  nlohmann::ordered_json j;
  j["context"] = inst.context;
  if (inst.choices) j["choices"] = *inst.choices;
  if (inst.answer_key.is_flag()) {
    j[std::string(schema.answer_field())] = inst.answer_key.flag();
  } else {
    j[std::string(schema.answer_field())] = inst.answer_key.index();
  }
  nlohmann::ordered_json meta;
  meta["source"] = inst.meta.source;
  meta["topic"] = inst.meta.topic;
  meta["anomaly_type"] = inst.meta.anomaly_type;
  if (include_difficulty) meta["difficulty"] = std::string(to_string(inst.meta.difficulty));
  j["meta"] = std::move(meta);
  return j.dump(2);
}

PromptText build_generation_prompt(const GenerationRequest& req) {
  if (!topics_for(req.task).contains(req.topic)) {
    throw PromptPrecondition("topic '" + req.topic + "' is not permitted for " +
                             std::string(to_string(req.task)));
  }
  const TaskSchema& schema = schema_for(req.task);
  std::ostringstream os;
  os << "You are a GRE-style exam question generator. Create a question for task "
     << to_string(req.task) << " on the topic of " << req.topic << ".\n";
  os << replace_all(schema.generation_instruction, "{topic}", req.topic) << "\n";
  if (req.factor) os << "The anomaly should be based on: " << req.factor->name << ".\n";
  os << "Create a non-trivial anomaly that requires careful reading to detect. It should "
        "be noticeable but not immediately obvious.\n";
  if (req.order_consistent_target) {
    os << (*req.order_consistent_target
               ? "The presented order must be consistent (\"order_consistent\": true).\n"
               : "The presented order must be inconsistent (\"order_consistent\": false).\n");
  }

  if (req.difficulty != Tier::Easy) {
    os << "\nDifficulty Level: " << to_string(req.difficulty) << "\n"
       << "This must be a harder variant of a problem the solver already answered "
          "correctly. Keep the task type, topic and output format unchanged.\n";
  }
  if (req.previous) {
    os << "\nPREVIOUS PROBLEM:\n" << render_problem_json(*req.previous, true) << "\n";
  }
  if (req.escalation) {
    os << "\nReviewer analysis: " << req.escalation->analysis << "\n"
       << "Suggestions for increasing difficulty:\n";
    for (const auto& s : req.escalation->suggestions) os << "- " << s << "\n";
    os << "Difficulty increase: " << req.escalation->difficulty_increase << "\n";
  }

  if (req.revision) {
    os << "\nYour previous attempt was rejected by the quality controller. Feedback:\n"
       << req.revision->feedback << "\n"
       << "Address this feedback in the new version.\n";
    if (req.revision->soften) {
      os << "Make the new version somewhat less difficult than the rejected attempt while "
            "keeping the same difficulty level label.\n";
    }
  }

  const std::string anomaly_type = req.factor ? req.factor->name : "...";
  os << "\n";
  generation_schema(os, schema, req.topic, anomaly_type);
  return make_user_prompt(os.str());
}

PromptText build_generation_prompt(TaskType task, const std::string& topic,
                                   const std::optional<ChallengeFactor>& factor,
                                   Tier difficulty,
                                   const std::optional<EscalationFeedback>& escalation) {
  GenerationRequest req;
  req.task = task;
  req.topic = topic;
  req.factor = factor;
  req.difficulty = difficulty;
  req.escalation = escalation;
  return build_generation_prompt(req);
}

PromptText build_initial_validation_prompt(const ProblemInstance& inst) {
  if (!validate_structure(inst).empty()) {
    throw PromptPrecondition("instance " + inst.instance_id + " is structurally invalid");
  }
  const TaskSchema& schema = schema_for(inst.task);
  std::ostringstream os;
  os << "You are a benchmark quality controller evaluating if this problem is well-formed "
        "and structured correctly for task "
     << to_string(inst.task) << ".\n\n"
     << "Task Type: " << task_heading(schema) << "\n\n"
     << "Task Description: " << schema.description << "\n\n"
     << "Expected Structure:\n";
  for (const auto& [field, desc] : schema.structure) {
    os << "- \"" << field << "\": " << desc << "\n";
  }
  os << "\n";
  problem_body(os, inst);
  os << "\nCorrect Answer: " << inst.answer_key.to_display() << "\n\n"
     << "Evaluate the problem based on these criteria:\n"
     << "1. VALIDITY: Is the problem well-formed and complete?\n"
     << "2. TYPE ADHERENCE: Does the problem follow the expected task type requirements?\n"
     << "3. LOGICAL COHERENCE: Is the anomaly identifiable?\n"
     << "4. FAIRNESS: Is the problem fair and reasonable? Does it have a clear, unambiguous "
        "solution?\n\n";
  verdict_schema(os, false);
  return make_user_prompt(os.str());
}

PromptText build_scaled_validation_prompt(const ProblemInstance& inst, Tier tier) {
  if (tier == Tier::Easy) {
    throw PromptPrecondition("scaled validation requires a tier above easy");
  }
  if (!validate_structure(inst).empty()) {
    throw PromptPrecondition("instance " + inst.instance_id + " is structurally invalid");
  }
  const TaskSchema& schema = schema_for(inst.task);
  const std::string tier_name(to_string(tier));
  std::ostringstream os;
  os << "You are a benchmark quality controller evaluating if a problem with increased "
        "difficulty is well-formed and appropriate for task "
     << to_string(inst.task) << ".\n\n"
     << "Task Type: " << task_heading(schema) << "\n"
     << "Difficulty Level: " << tier_name << "\n\n"
     << "Task Description: " << schema.description << "\n\n"
     << "Expected Structure: " << structure_sentence(schema) << "\n\n";
  problem_body(os, inst);
  os << "\nCorrect Answer: " << inst.answer_key.to_display() << "\n\n"
     << "Note: While maintaining quality standards, be lenient in your evaluation. Accept "
        "problems that are reasonable and solvable, even if they have minor "
        "imperfections.\n\n"
     << "Evaluate the problem based on these criteria:\n"
     << "1. VALIDITY: Is the problem well-formed and complete?\n"
     << "2. TYPE ADHERENCE: Does the problem follow the expected task type requirements?\n"
     << "3. LOGICAL COHERENCE: Is the correct answer clearly identifiable?\n"
     << "4. FAIRNESS: Is the problem fair and reasonable? Does it have a clear, unambiguous "
        "solution?\n"
     << "5. DIFFICULTY: Is the difficulty appropriate for " << tier_name << " level?\n\n";
  verdict_schema(os, true);
  return make_user_prompt(os.str());
}

PromptText build_feedback_prompt(const ProblemInstance& inst, const StudentAnswer& student) {
  if (grade(inst, student) != Verdict::Correct) {
    throw PromptPrecondition("feedback is requested only for correctly solved problems");
  }
  const TaskSchema& schema = schema_for(inst.task);
  std::ostringstream os;
  os << "You are helping to create a harder version of a problem that a student has "
        "correctly solved. Analyze the student's solution and provide feedback.\n\n"
     << "Task Type: " << task_heading(schema) << "\n"
     << "Current Difficulty: " << to_string(inst.meta.difficulty) << "\n\n"
     << "ORIGINAL PROBLEM:\n"
     << render_problem_json(inst, true) << "\n\n"
     << "Student's Explanation: \"" << student.explanation << "\"\n\n"
     << "Based on how the student solved this problem, provide feedback to create a more "
        "challenging version:\n"
     << "1. What aspects did the student easily identify?\n"
     << "2. How could the problem be made more subtle or complex?\n"
     << "3. Give specific suggestions for increasing difficulty.\n\n"
     << "Return your feedback in JSON format:\n"
     << "  {\n"
     << "    \"analysis\": \"Brief analysis of student solution\",\n"
     << "    \"suggestions\": [\"Specific suggestion 1\", \"Specific suggestion 2\", ...],\n"
     << "    \"difficulty_increase\": \"Summary of how to increase difficulty\"\n"
     << "  }";
  return make_user_prompt(os.str());
}

PromptText build_solve_prompt(const ProblemInstance& inst) {
  if (!validate_structure(inst).empty()) {
    throw PromptPrecondition("instance " + inst.instance_id + " is structurally invalid");
  }
  const TaskSchema& schema = schema_for(inst.task);
  std::ostringstream os;
  os << "You are taking a GRE-style text anomaly test.\n\n"
     << "Task Type: " << task_heading(schema) << "\n"
     << "Instruction: " << schema.solve_instruction << "\n\n";
  problem_body(os, inst);
  os << "\n" << schema.answer_instruction << "\n\n"
     << "Return your answer strictly in JSON format:\n"
     << "  {\n"
     << "    \"answer\": " << answer_placeholder(schema) << ",\n"
     << "    \"explanation\": \"Brief explanation of your reasoning\"\n"
     << "  }";
  return make_user_prompt(os.str());
}

PromptText build_quality_review_prompt(const ProblemInstance& inst) {
  if (!validate_structure(inst).empty()) {
    throw PromptPrecondition("instance " + inst.instance_id + " is structurally invalid");
  }
  const TaskSchema& schema = schema_for(inst.task);
  std::ostringstream os;
  os << "You are a benchmark quality reviewer rating an accepted problem for task "
     << to_string(inst.task) << ".\n\n"
     << "Task Type: " << task_heading(schema) << "\n"
     << "Difficulty Level: " << to_string(inst.meta.difficulty) << "\n\n"
     << "Task Description: " << schema.description << "\n\n";
  problem_body(os, inst);
  os << "\nCorrect Answer: " << inst.answer_key.to_display() << "\n\n"
     << "Rate the problem on each axis with an integer from 1 (poor) to 5 (excellent):\n"
     << "1. VALIDITY: Is the problem well-formed, complete and correctly keyed?\n"
     << "2. COHERENCE: Apart from the intended anomaly, is the text coherent?\n"
     << "3. FAIRNESS: Does the problem have a single defensible answer?\n\n"
     << "Return your ratings in JSON format:\n"
     << "  {\n"
     << "    \"validity\": <integer 1-5>,\n"
     << "    \"coherence\": <integer 1-5>,\n"
     << "    \"fairness\": <integer 1-5>\n"
     << "  }";
  return make_user_prompt(os.str());
}

}  // namespace tadbench

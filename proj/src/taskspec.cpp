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

#include "tadbench/taskspec.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <limits>

namespace tadbench {

namespace detail {
// Generated from resources/task_catalog_v1.json at configure time.
extern const char* const kTaskCatalogJson;
}  // namespace detail

namespace {

struct StructuralRow {
  ArityRange context;
  std::optional<int> choices;
  AnswerForm form;
};

constexpr std::array<StructuralRow, 7> kStructure = {{
    {{5, 6}, std::nullopt, AnswerForm::Index},  // T1
    {{5, 5}, std::nullopt, AnswerForm::Flag},   // T2
    {{1, 1}, 5, AnswerForm::Index},             // T3
    {{2, 2}, 5, AnswerForm::Index},             // T4
    {{5, 5}, std::nullopt, AnswerForm::Index},  // T5
    {{5, 5}, std::nullopt, AnswerForm::Index},  // T6
    {{5, 5}, std::nullopt, AnswerForm::Index},  // T7
}};

struct Catalog {
  std::string version;
  std::array<TaskSchema, 7> schemas;
};

const Catalog& catalog() {
  static const Catalog c = [] {
    Catalog out;
    Json doc = Json::parse(detail::kTaskCatalogJson);
    out.version = doc.at("catalog_version").get<std::string>();
    for (TaskType task : kAllTasks) {
      const auto& row = kStructure[static_cast<std::size_t>(task)];
      const auto& entry = doc.at("tasks").at(std::string(to_string(task)));
      TaskSchema s;
      s.task = task;
      s.name = entry.at("name").get<std::string>();
      s.context_arity = row.context;
      s.choice_arity = row.choices;
      s.answer_form = row.form;
      s.description = entry.at("description").get<std::string>();
      s.generation_instruction = entry.at("generation_instruction").get<std::string>();
      for (const auto& field : entry.at("structure")) {
        s.structure.emplace_back(field.at(0).get<std::string>(),
                                 field.at(1).get<std::string>());
      }
      s.solve_instruction = entry.at("solve_instruction").get<std::string>();
      s.answer_instruction = entry.at("answer_instruction").get<std::string>();
      out.schemas[static_cast<std::size_t>(task)] = std::move(s);
    }
    return out;
  }();
  return c;
}

const std::array<TopicSet, 7>& topic_table() {
  static const std::array<TopicSet, 7> t = {{
      {TaskType::T1, {"philosophy", "society", "psychology"}},
      {TaskType::T2, {"science", "economics", "politics"}},
      {TaskType::T3, {"literature", "psychology", "philosophy"}},
      {TaskType::T4, {"economics", "society", "policy"}},
      {TaskType::T5, {"psychology", "literature", "philosophy"}},
      {TaskType::T6, {"science", "economics", "politics"}},
      {TaskType::T7, {"literature", "philosophy"}},
  }};
  return t;
}

const std::array<std::vector<std::string>, 7>& factor_table() {
  static const std::array<std::vector<std::string>, 7> t = {{
      {"minor topic shift", "semantic deviation"},
      {"sentence reordering"},
      {"lexical fit", "collocation"},
      {"weak logical connection", "abrupt topic shift"},
      {"ambiguous pronouns", "unclear referents"},
      {"contradictory claims", "causal reversal"},
      {"tone shift", "register mismatch"},
  }};
  return t;
}

bool has_blank_marker(const std::string& s) {
  return s.find("___") != std::string::npos;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

const TaskSchema& schema_for(TaskType task) {
  return catalog().schemas[static_cast<std::size_t>(task)];
}

std::string_view task_catalog_version() { return catalog().version; }

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::ContextArity: return "context_arity";
    case ViolationKind::ChoiceArity: return "choice_arity";
    case ViolationKind::UnexpectedChoices: return "unexpected_choices";
    case ViolationKind::AnswerForm: return "answer_form";
    case ViolationKind::AnswerOutOfRange: return "answer_out_of_range";
    case ViolationKind::TopicNotPermitted: return "topic_not_permitted";
    case ViolationKind::EmptySegment: return "empty_segment";
    case ViolationKind::MissingBlank: return "missing_blank";
    case ViolationKind::TaskMismatch: return "task_mismatch";
  }
  return "unknown";
}

std::vector<StructureViolation> validate_structure(const ProblemInstance& inst) {
  const TaskSchema& schema = schema_for(inst.task);
  std::vector<StructureViolation> out;
  auto add = [&](ViolationKind k, std::string detail) {
    out.push_back({k, std::move(detail)});
  };

  const int n_context = static_cast<int>(inst.context.size());
  if (!schema.context_arity.contains(n_context)) {
    add(ViolationKind::ContextArity,
        "expected " + std::to_string(schema.context_arity.min) +
            (schema.context_arity.max != schema.context_arity.min
                 ? "-" + std::to_string(schema.context_arity.max)
                 : std::string()) +
            " context segments, got " + std::to_string(n_context));
  }
  if (std::any_of(inst.context.begin(), inst.context.end(), is_blank)) {
    add(ViolationKind::EmptySegment, "context contains an empty segment");
  }

  if (schema.choice_arity) {
    if (!inst.choices) {
      add(ViolationKind::ChoiceArity, "choices are required");
    } else {
      if (static_cast<int>(inst.choices->size()) != *schema.choice_arity) {
        add(ViolationKind::ChoiceArity,
            "expected " + std::to_string(*schema.choice_arity) + " choices, got " +
                std::to_string(inst.choices->size()));
      }
      if (std::any_of(inst.choices->begin(), inst.choices->end(), is_blank)) {
        add(ViolationKind::EmptySegment, "choices contain an empty entry");
      }
    }
  } else if (inst.choices) {
    add(ViolationKind::UnexpectedChoices, "task takes no choices");
  }

  if (inst.task == TaskType::T3 &&
      std::none_of(inst.context.begin(), inst.context.end(), has_blank_marker)) {
    add(ViolationKind::MissingBlank, "no blank marked ___ in context");
  }

  const bool wants_flag = schema.answer_form == AnswerForm::Flag;
  if (wants_flag != inst.answer_key.is_flag()) {
    add(ViolationKind::AnswerForm,
        wants_flag ? "task expects a boolean answer" : "task expects an index answer");
  } else if (!wants_flag) {
    const int arity = inst.choices && schema.choice_arity
                          ? static_cast<int>(inst.choices->size())
                          : n_context;
    const int idx = inst.answer_key.index();
    if (idx < 1 || idx > arity) {
      add(ViolationKind::AnswerOutOfRange,
          "answer index " + std::to_string(idx) + " outside 1.." + std::to_string(arity));
    }
  }

  if (!topics_for(inst.task).contains(inst.meta.topic)) {
    add(ViolationKind::TopicNotPermitted,
        "topic '" + inst.meta.topic + "' is not permitted for " +
            std::string(to_string(inst.task)));
  }
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Correct: return "correct";
    case Verdict::Incorrect: return "incorrect";
    case Verdict::Unparsable: return "unparsable";
  }
  return "unknown";
}

void to_json(Json& j, Verdict v) { j = std::string(to_string(v)); }

void from_json(const Json& j, Verdict& v) {
  const auto& s = j.get_ref<const std::string&>();
  if (s == "correct") {
    v = Verdict::Correct;
  } else if (s == "incorrect") {
    v = Verdict::Incorrect;
  } else if (s == "unparsable") {
    v = Verdict::Unparsable;
  } else {
    throw InvariantError("unknown verdict '" + s + "'");
  }
}

Verdict grade(const ProblemInstance& inst, const StudentAnswer& answer) {
  if (auto violations = validate_structure(inst); !violations.empty()) {
    throw MalformedInstance("cannot grade " + inst.instance_id + ": " +
                            violations.front().detail);
  }
  if (!answer.parse_ok || !answer.answer) return Verdict::Unparsable;
  return *answer.answer == inst.answer_key ? Verdict::Correct : Verdict::Incorrect;
}

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::Science: return "science";
    case Domain::Philosophy: return "philosophy";
    case Domain::PoliticsSociety: return "politics/society";
    case Domain::Psychology: return "psychology";
    case Domain::Economics: return "economics";
    case Domain::Literature: return "literature";
  }
  return "unknown";
}

std::optional<Domain> domain_of(std::string_view topic) {
  if (topic == "science") return Domain::Science;
  if (topic == "philosophy") return Domain::Philosophy;
  if (topic == "society" || topic == "politics" || topic == "policy" ||
      topic == "politics/society") {
    return Domain::PoliticsSociety;
  }
  if (topic == "psychology") return Domain::Psychology;
  if (topic == "economics") return Domain::Economics;
  if (topic == "literature") return Domain::Literature;
  return std::nullopt;
}

bool TopicSet::contains(std::string_view topic) const {
  return std::find(topics.begin(), topics.end(), topic) != topics.end();
}

const TopicSet& topics_for(TaskType task) {
  return topic_table()[static_cast<std::size_t>(task)];
}

const std::vector<std::string>& challenge_factors_for(TaskType task) {
  return factor_table()[static_cast<std::size_t>(task)];
}

std::size_t uniform_index(SeededRandom& rng, std::size_t n) {
  // Rejection sampling over the largest multiple of n.
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

bool bernoulli(SeededRandom& rng, std::uint64_t numerator, std::uint64_t denominator) {
  return uniform_index(rng, denominator) < numerator;
}

std::optional<ChallengeFactor> sample_challenge_factor(TaskType task, SeededRandom& rng) {
  if (!bernoulli(rng, 1, 2)) return std::nullopt;
  const auto& factors = challenge_factors_for(task);
  return ChallengeFactor{task, factors[uniform_index(rng, factors.size())]};
}

}  // namespace tadbench

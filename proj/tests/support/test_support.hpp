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


// Shared helpers: scratch directories, fixture paths and hand-rolled
// generators of valid problem instances.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "tadbench/domain.hpp"
#include "tadbench/taskspec.hpp"

namespace tadbench::testing {

inline std::filesystem::path data_dir() { return TADBENCH_TEST_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tadbench-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Text with characters that stress JSON escaping: quotes, backslashes,
// braces (which also stress brace matching), newlines and multi-byte UTF-8.
inline std::string random_text(SeededRandom& rng, bool with_blank = false) {
  static const char* const kPieces[] = {
      "the",   "argument", "\"quoted\"", "back\\slash", "{brace}", "}", "{",  "naïve",
      "café",  "—",        "中文",       "tab\there",   "line\nbreak", "50%", "a,b", "```",
      "json",  "premise",  "therefore",  "however",     "'single'",  "<tag>", "[x]", "ok"};
  const std::size_t words = 3 + uniform_index(rng, 10);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += kPieces[uniform_index(rng, std::size(kPieces))];
  }
  if (with_blank) out += " ___ ";
  return out + ".";
}

// A random instance satisfying validate_structure for `task`.
inline ProblemInstance random_instance(TaskType task, SeededRandom& rng) {
  const TaskSchema& schema = schema_for(task);
  ProblemInstance inst;
  inst.task = task;
  const int arity = schema.context_arity.min +
                    static_cast<int>(uniform_index(
                        rng, schema.context_arity.max - schema.context_arity.min + 1));
  const std::size_t blank_at = uniform_index(rng, arity);
  for (int i = 0; i < arity; ++i) {
    inst.context.push_back(random_text(rng, task == TaskType::T3 && i == int(blank_at)));
  }
  if (schema.choice_arity) {
    std::vector<std::string> choices;
    for (int i = 0; i < *schema.choice_arity; ++i) choices.push_back(random_text(rng));
    inst.choices = choices;
  }
  if (schema.answer_form == AnswerForm::Flag) {
    inst.answer_key = AnswerKey::flag(bernoulli(rng, 1, 2));
  } else {
    const int n = schema.answer_arity(arity);
    inst.answer_key = AnswerKey::index(1 + static_cast<int>(uniform_index(rng, n)));
  }
  const auto& topics = topics_for(task).topics;
  inst.meta.topic = topics[uniform_index(rng, topics.size())];
  const auto& factors = challenge_factors_for(task);
  inst.meta.anomaly_type = factors[uniform_index(rng, factors.size())];
  inst.meta.difficulty = kAllTiers[uniform_index(rng, 4)];
  inst.lineage_id = std::string(to_string(task)) + "-" + std::to_string(uniform_index(rng, 100));
  inst.instance_id = inst.lineage_id + "-" + std::string(to_string(inst.meta.difficulty)) + "-1";
  return inst;
}

}  // namespace tadbench::testing

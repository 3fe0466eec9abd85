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

// Append-only JSONL persistence.
//
// Layout under a store root:
//
//   <root>/<generator-tag>/manifest.json
//   <root>/<generator-tag>/<task>.jsonl      e.g. gpt-4o/T3.jsonl
//
// Every line is a self-describing object carrying "record_type"
// ("benchmark_item" or "trajectory") and "schema_version".

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadbench/domain.hpp"

namespace tadbench {

inline constexpr int kStoreSchemaVersion = 1;

using ItemId = std::string;

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public StoreError {
 public:
  using StoreError::StoreError;
};

class DuplicateInstanceId : public StoreError {
 public:
  explicit DuplicateInstanceId(const std::string& id)
      : StoreError("duplicate instance_id " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class CorruptLine : public StoreError {
 public:
  CorruptLine(std::filesystem::path file, std::size_t line, const std::string& why);
  const std::filesystem::path& file() const { return file_; }
  // 1-based line number.
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

class MissingBaseStage : public StoreError {
 public:
  explicit MissingBaseStage(const std::string& lineage_id)
      : StoreError("lineage " + lineage_id + " has no easy-tier item"), lineage_(lineage_id) {}
  const std::string& lineage_id() const { return lineage_; }

 private:
  std::string lineage_;
};

struct AgentIdentities {
  std::string teacher;
  std::string orchestrator;
  std::string student;

  bool operator==(const AgentIdentities&) const = default;
};

struct Manifest {
  int schema_version = kStoreSchemaVersion;
  std::string generator_tag;
  std::string generator_family;
  std::string config_hash;  // SHA-256 of the canonical campaign config
  std::uint64_t seed = 0;
  AgentIdentities agents;
  std::string catalog_version;
  std::string created_at;  // wall clock; the only time-dependent field

  bool operator==(const Manifest&) const = default;
};

void to_json(Json& j, const Manifest& m);
void from_json(const Json& j, Manifest& m);

// Hex SHA-256 of the canonical (sorted-key, compact) JSON dump.
std::string config_hash(const Json& config);

/// Writer for one generator tag. Single writer per file.
class BenchmarkStore {
 public:
  // Creates <root>/<tag>/ if needed and indexes any existing items so
  // duplicate ids are rejected across sessions.
  BenchmarkStore(std::filesystem::path root, std::string generator_tag);

  const std::filesystem::path& dir() const { return dir_; }

  // Throws DuplicateInstanceId, InvariantError (item not marked consistently)
  // or IoError.
  ItemId append_item(const BenchmarkItem& item);
  void append_trajectory(const Trajectory& trajectory);
  void write_manifest(const Manifest& manifest);

 private:
  void append_line(TaskType task, const Json& record);

  std::filesystem::path dir_;
  std::set<ItemId> ids_;
};

// Writes every trajectory record followed by its items, lineage by lineage.
void write_trajectories(BenchmarkStore& store, const std::vector<Trajectory>& trajectories);

struct LoadFilter {
  std::optional<std::set<TaskType>> tasks;
  std::optional<std::set<Tier>> tiers;
  bool final_only = false;
  std::optional<std::string> generator;  // tag directory name
};

enum class LoadMode { Strict, Lenient };

struct StoredItem {
  std::string generator;  // tag directory the item was loaded from
  BenchmarkItem item;

  bool operator==(const StoredItem&) const = default;
};

/// Items sorted by (generator, task, lineage, tier, id): the same set loads
/// identically regardless of line order.
struct BenchmarkSet {
  std::vector<StoredItem> items;
  std::map<std::string, Manifest> manifests;  // by generator tag
  std::vector<CorruptLine> skipped_lines;     // lenient mode only

  std::size_t size() const { return items.size(); }
  bool operator==(const BenchmarkSet& o) const { return items == o.items; }
};

// `path` is a store root, a tag directory or a single .jsonl file.
// Strict mode throws CorruptLine at the first bad line; lenient mode records
// it and keeps going. Throws IoError if the path does not exist.
BenchmarkSet load_benchmark(const std::filesystem::path& path, const LoadFilter& filter = {},
                            LoadMode mode = LoadMode::Strict);

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path,
                                          LoadMode mode = LoadMode::Strict);

struct BaseFinalSplit {
  BenchmarkSet base;
  BenchmarkSet final;
};

// One Easy item and one final item per lineage. Throws MissingBaseStage.
BaseFinalSplit export_base_and_final(const BenchmarkSet& set);

}  // namespace tadbench

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

#include "tadbench/store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace tadbench {

namespace fs = std::filesystem;

namespace {

constexpr const char* kItemRecord = "benchmark_item";
constexpr const char* kTrajectoryRecord = "trajectory";

bool item_less(const StoredItem& a, const StoredItem& b) {
  auto key = [](const StoredItem& s) {
    return std::make_tuple(std::cref(s.generator), s.item.instance.task,
                           std::cref(s.item.lineage_id),
                           tier_ordinal(s.item.instance.meta.difficulty), std::cref(s.item.id()));
  };
  return key(a) < key(b);
}

std::vector<fs::path> jsonl_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_tag_dir(const fs::path& dir) {
  return fs::exists(dir / "manifest.json") || !jsonl_files(dir).empty();
}

// (generator tag, file) pairs addressed by `path`.
std::vector<std::pair<std::string, fs::path>> resolve_files(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such store path: " + path.string());
  std::vector<std::pair<std::string, fs::path>> out;
  if (fs::is_regular_file(path)) {
    out.emplace_back(path.parent_path().filename().string(), path);
    return out;
  }
  std::vector<fs::path> tag_dirs;
  if (is_tag_dir(path)) {
    tag_dirs.push_back(path);
  } else {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_directory() && is_tag_dir(e.path())) tag_dirs.push_back(e.path());
    }
    std::sort(tag_dirs.begin(), tag_dirs.end());
  }
  for (const auto& dir : tag_dirs) {
    const std::string tag = fs::absolute(dir).lexically_normal().filename().string();
    for (const auto& f : jsonl_files(dir)) out.emplace_back(tag, f);
  }
  return out;
}

// Calls on_record(tag, record) for every well-formed line of the given kind.
template <typename OnRecord>
void scan(const fs::path& path, const char* record_type, LoadMode mode,
          std::vector<CorruptLine>& skipped, OnRecord on_record) {
  for (const auto& [tag, file] : resolve_files(path)) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        Json j = Json::parse(line);
        if (!j.is_object() || !j.contains("record_type") || !j.contains("schema_version")) {
          throw CorruptLine(file, lineno, "missing record_type/schema_version");
        }
        const int version = j["schema_version"].get<int>();
        if (version < 1 || version > kStoreSchemaVersion) {
          throw CorruptLine(file, lineno, "unsupported schema_version " +
                                              std::to_string(version));
        }
        if (j["record_type"].get<std::string>() != record_type) continue;
        on_record(tag, j.at("record"));
      } catch (const CorruptLine& e) {
        if (mode == LoadMode::Strict) throw;
        skipped.push_back(e);
      } catch (const std::exception& e) {
        CorruptLine err(file, lineno, e.what());
        if (mode == LoadMode::Strict) throw err;
        skipped.push_back(err);
      }
    }
  }
}

}  // namespace

CorruptLine::CorruptLine(fs::path file, std::size_t line, const std::string& why)
    : StoreError(file.string() + ":" + std::to_string(line) + ": corrupt line (" + why + ")"),
      file_(std::move(file)),
      line_(line) {}

void to_json(Json& j, const Manifest& m) {
  j = Json{{"schema_version", m.schema_version},
           {"generator_tag", m.generator_tag},
           {"generator_family", m.generator_family},
           {"config_hash", m.config_hash},
           {"seed", m.seed},
           {"agents",
            {{"teacher", m.agents.teacher},
             {"orchestrator", m.agents.orchestrator},
             {"student", m.agents.student}}},
           {"catalog_version", m.catalog_version},
           {"created_at", m.created_at}};
}

void from_json(const Json& j, Manifest& m) {
  m.schema_version = j.at("schema_version").get<int>();
  m.generator_tag = j.at("generator_tag").get<std::string>();
  m.generator_family = j.at("generator_family").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const Json& a = j.at("agents");
  m.agents = {a.at("teacher").get<std::string>(), a.at("orchestrator").get<std::string>(),
              a.at("student").get<std::string>()};
  m.catalog_version = j.value("catalog_version", std::string());
  m.created_at = j.value("created_at", std::string());
}

std::string config_hash(const Json& config) {
  const std::string canonical = config.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return os.str();
}

BenchmarkStore::BenchmarkStore(fs::path root, std::string generator_tag)
    : dir_(std::move(root) / generator_tag) {
  if (generator_tag.empty() || generator_tag.find('/') != std::string::npos ||
      generator_tag == "." || generator_tag == "..") {
    throw std::invalid_argument("invalid generator tag '" + generator_tag + "'");
  }
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  std::vector<CorruptLine> ignored;
  scan(dir_, kItemRecord, LoadMode::Lenient, ignored,
       [&](const std::string&, const Json& rec) { ids_.insert(rec.at("instance").at("instance_id").get<std::string>()); });
}

void BenchmarkStore::append_line(TaskType task, const Json& record) {
  const fs::path file = dir_ / (std::string(to_string(task)) + ".jsonl");
  std::ofstream out(file, std::ios::binary | std::ios::app);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw IoError("cannot append to " + file.string());
}

ItemId BenchmarkStore::append_item(const BenchmarkItem& item) {
  if (item.lineage_id != item.instance.lineage_id) {
    throw InvariantError("item " + item.id() + " disagrees with its instance on lineage");
  }
  if (!item.validation.approved) {
    throw InvariantError("item " + item.id() + " carries an unapproved validation");
  }
  if (item.id().empty()) throw InvariantError("item has an empty instance_id");
  if (ids_.count(item.id()) != 0) throw DuplicateInstanceId(item.id());
  append_line(item.instance.task, Json{{"record_type", kItemRecord},
                                       {"schema_version", kStoreSchemaVersion},
                                       {"record", item}});
  ids_.insert(item.id());
  return item.id();
}

void BenchmarkStore::append_trajectory(const Trajectory& t) {
  if (auto v = trajectory_violations(t); !v.empty()) {
    throw InvariantError("trajectory " + t.lineage_id + ": " + v.front());
  }
  append_line(t.task, Json{{"record_type", kTrajectoryRecord},
                           {"schema_version", kStoreSchemaVersion},
                           {"record", t}});
}

void BenchmarkStore::write_manifest(const Manifest& manifest) {
  const fs::path file = dir_ / "manifest.json";
  const fs::path tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << Json(manifest).dump(2) << '\n';
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, file);
}

void write_trajectories(BenchmarkStore& store, const std::vector<Trajectory>& trajectories) {
  for (const auto& t : trajectories) {
    store.append_trajectory(t);
    for (const auto& item : t.items()) store.append_item(item);
  }
}

BenchmarkSet load_benchmark(const fs::path& path, const LoadFilter& filter, LoadMode mode) {
  BenchmarkSet set;
  std::set<std::pair<std::string, ItemId>> seen;
  scan(path, kItemRecord, mode, set.skipped_lines, [&](const std::string& tag, const Json& rec) {
    BenchmarkItem item = rec.get<BenchmarkItem>();
    if (!seen.emplace(tag, item.id()).second) throw DuplicateInstanceId(item.id());
    if (filter.generator && *filter.generator != tag) return;
    if (filter.tasks && filter.tasks->count(item.instance.task) == 0) return;
    if (filter.tiers && filter.tiers->count(item.instance.meta.difficulty) == 0) return;
    if (filter.final_only && !item.final) return;
    set.items.push_back(StoredItem{tag, std::move(item)});
  });
  std::sort(set.items.begin(), set.items.end(), item_less);

  for (const auto& [tag, file] : resolve_files(path)) {
    const fs::path manifest = file.parent_path() / "manifest.json";
    if (set.manifests.count(tag) != 0 || !fs::exists(manifest)) continue;
    std::ifstream in(manifest, std::ios::binary);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) {
      if (mode == LoadMode::Strict) throw CorruptLine(manifest, 1, "unparsable manifest");
      continue;
    }
    set.manifests[tag] = j.get<Manifest>();
  }
  return set;
}

std::vector<Trajectory> load_trajectories(const fs::path& path, LoadMode mode) {
  std::vector<std::pair<std::string, Trajectory>> tagged;
  std::vector<CorruptLine> skipped;
  scan(path, kTrajectoryRecord, mode, skipped, [&](const std::string& tag, const Json& rec) {
    tagged.emplace_back(tag, rec.get<Trajectory>());
  });
  std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first, a.second.task, a.second.lineage_id) <
           std::tie(b.first, b.second.task, b.second.lineage_id);
  });
  std::vector<Trajectory> out;
  for (auto& [tag, t] : tagged) out.push_back(std::move(t));
  return out;
}

BaseFinalSplit export_base_and_final(const BenchmarkSet& set) {
  struct Pair {
    const StoredItem* base = nullptr;
    const StoredItem* final = nullptr;
  };
  std::map<std::pair<std::string, std::string>, Pair> lineages;
  for (const auto& s : set.items) {
    Pair& p = lineages[{s.generator, s.item.lineage_id}];
    if (s.item.instance.meta.difficulty == Tier::Easy) p.base = &s;
    if (s.item.final) {
      if (p.final != nullptr) {
        throw StoreError("lineage " + s.item.lineage_id + " has more than one final item");
      }
      p.final = &s;
    }
  }
  BaseFinalSplit out;
  for (const auto& [key, p] : lineages) {
    if (p.base == nullptr) throw MissingBaseStage(key.second);
    if (p.final == nullptr) throw StoreError("lineage " + key.second + " has no final item");
    out.base.items.push_back(*p.base);
    out.final.items.push_back(*p.final);
  }
  std::sort(out.base.items.begin(), out.base.items.end(), item_less);
  std::sort(out.final.items.begin(), out.final.items.end(), item_less);
  out.base.manifests = set.manifests;
  out.final.manifests = set.manifests;
  return out;
}

}  // namespace tadbench

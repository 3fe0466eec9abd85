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

#include "tadbench/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "tadbench/metrics.hpp"
#include "tadbench/protocol.hpp"
#include "tadbench/report.hpp"
#include "tadbench/scripted.hpp"
#include "tadbench/store.hpp"
#include "tadbench/wire.hpp"

namespace tadbench {

namespace fs = std::filesystem;

namespace {

// Inputs named in a config that do not exist.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

fs::path base_dir(const CliInvocation& inv) {
  return inv.config_path ? inv.config_path->parent_path() : fs::path();
}

// Relative paths in a config are relative to the config file.
fs::path resolve(const CliInvocation& inv, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || !inv.config_path) return path;
  return base_dir(inv) / path;
}

fs::path require_out(const CliInvocation& inv, const Json& cfg) {
  if (inv.output_dir) return *inv.output_dir;
  if (cfg.contains("out")) return resolve(inv, cfg.at("out").get<std::string>());
  throw ConfigError("an output directory is required (--out)");
}

template <typename T>
T get_or(const Json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<TaskType> tasks_from(const Json& cfg) {
  if (!cfg.contains("tasks")) return {kAllTasks.begin(), kAllTasks.end()};
  std::vector<TaskType> out;
  for (const auto& t : cfg.at("tasks")) {
    const auto task = t.is_string() ? parse_task(t.get<std::string>()) : std::nullopt;
    if (!task) throw ConfigError("unknown task " + t.dump());
    out.push_back(*task);
  }
  return out;
}

std::uint64_t ppm_from(const Json& v) {
  Ratio rate;
  try {
    rate = parse_decimal(v.is_string() ? v.get<std::string>() : v.dump());
  } catch (const std::exception&) {
    throw ConfigError("t2_positive_rate must be a decimal in [0, 1]");
  }
  if (rate < 0 || rate > 1) throw ConfigError("t2_positive_rate must be in [0, 1]");
  const Ratio ppm = rate * 1000000;
  if (ppm.denominator() != 1) throw ConfigError("t2_positive_rate has more than 6 decimals");
  return static_cast<std::uint64_t>(ppm.numerator());
}

std::string utc_now() {
  // SOURCE_DATE_EPOCH pins the manifest timestamp for reproducible builds.
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::stoll(epoch));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string file_stem_for(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "model" : out;
}

std::shared_ptr<Script> script_from(const CliInvocation& inv, const Json& holder) {
  Json script = Json::object();
  if (holder.contains("script")) {
    const Json& s = holder.at("script");
    script = s.is_string() ? read_json_file(resolve(inv, s.get<std::string>())) : s;
  }
  try {
    return Script::from_json(script);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("script: ") + e.what());
  }
}

/// A role's backend description, resolved but not yet constructed so that
/// every credential can be checked before anything is built.
struct AgentPlan {
  Role role = Role::Student;
  bool scripted = true;
  std::string model;
  WireConfig wire;
  std::string api_key;
  DecodeParams params;
};

AgentPlan plan_agent(const CliInvocation& inv, Role role, const Json& spec, bool force_scripted) {
  AgentPlan plan;
  plan.role = role;
  plan.params = default_decode_params(role);
  const std::string backend = get_or<std::string>(spec, "backend", "scripted");
  if (backend != "scripted" && backend != "wire") {
    throw ConfigError("unknown backend '" + backend + "'");
  }
  plan.scripted = force_scripted || backend == "scripted";
  plan.model = get_or<std::string>(spec, "model",
                                   plan.scripted ? "scripted-" + std::string(to_string(role)) : "");
  plan.params.temperature = get_or<double>(spec, "temperature", plan.params.temperature);
  plan.params.max_output_tokens = get_or<int>(spec, "max_tokens", plan.params.max_output_tokens);
  if (plan.scripted) return plan;

  if (plan.model.empty()) throw ConfigError("wire agent needs a model");
  plan.wire.provider = get_or<std::string>(spec, "provider", "openai");
  plan.wire.base_url = get_or<std::string>(spec, "base_url", "");
  if (plan.wire.base_url.empty()) throw ConfigError("wire agent needs a base_url");
  plan.wire.path = get_or<std::string>(spec, "path", plan.wire.path);
  plan.wire.model = plan.model;
  plan.wire.max_concurrent = get_or<int>(spec, "max_concurrent", plan.wire.max_concurrent);
  plan.wire.retry.max_retries = get_or<int>(spec, "max_retries", plan.wire.retry.max_retries);
  plan.wire.timeout = std::chrono::seconds(get_or<int>(spec, "timeout_s", 120));
  if (spec.contains("transcript")) {
    plan.wire.transcript = resolve(inv, spec.at("transcript").get<std::string>());
  }
  const std::string env =
      get_or<std::string>(spec, "api_key_env", upper(plan.wire.provider) + "_API_KEY");
  plan.api_key = resolve_credential(env);  // CredentialError before any request
  return plan;
}

AgentHandle build_agent(const AgentPlan& plan, const std::shared_ptr<Script>& script) {
  if (plan.scripted) {
    return AgentHandle(plan.role, plan.model, std::make_shared<ScriptedBackend>(plan.role, script),
                       plan.params);
  }
  try {
    return AgentHandle(plan.role, plan.model,
                       std::make_shared<WireBackend>(plan.wire, plan.api_key), plan.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

int default_concurrency(const std::vector<AgentPlan>& plans) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (const auto& p : plans) {
    if (!p.scripted) n = std::min(n, std::max(1, p.wire.max_concurrent));
  }
  return n;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

// Wraps a command body with the shared error-to-exit-code mapping.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const CredentialError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCredential;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CampaignFailed& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  } catch (const MissingInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  } catch (const MetricsError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  } catch (const StoreError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  }
}

}  // namespace

void apply_override(Json& config, const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("empty override key");
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("malformed override key '" + key + "'");
    if (!node->is_object()) throw ConfigError("override '" + key + "' crosses a non-object");
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, nullptr, /*allow_exceptions=*/false);
      (*node)[part] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

Json effective_config(const CliInvocation& inv) {
  Json cfg = Json::object();
  if (inv.config_path) {
    if (!fs::exists(*inv.config_path)) {
      throw ConfigError("config file not found: " + inv.config_path->string());
    }
    cfg = read_json_file(*inv.config_path);
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  }
  for (const auto& [k, v] : inv.overrides) apply_override(cfg, k, v);
  if (inv.seed) cfg["seed"] = *inv.seed;
  if (inv.concurrency) cfg["concurrency"] = *inv.concurrency;
  if (inv.samples_per_task) cfg["samples_per_task"] = *inv.samples_per_task;
  if (inv.tasks) cfg["tasks"] = *inv.tasks;
  if (inv.final_only) cfg["final_only"] = true;
  if (inv.store) cfg["store"] = inv.store->string();
  return cfg;
}

// --- generate ----------------------------------------------------------------

int cmd_generate(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Json cfg = effective_config(inv);
    const fs::path out_dir = require_out(inv, cfg);
    const std::string tag =
        get_or<std::string>(cfg, "generator_tag", inv.scripted ? "scripted" : "");
    if (tag.empty() || tag.find('/') != std::string::npos) {
      throw ConfigError("generator_tag must be a non-empty directory name");
    }

    const Json agents = cfg.value("agents", Json::object());
    std::vector<AgentPlan> plans;
    for (Role role : {Role::Teacher, Role::Orchestrator, Role::Student}) {
      const std::string key(to_string(role));
      plans.push_back(plan_agent(inv, role, agents.value(key, Json::object()), inv.scripted));
    }
    const auto script = script_from(inv, cfg);

    ProtocolConfig pc;
    if (cfg.contains("caps")) {
      const Json& caps = cfg.at("caps");
      pc.caps.max_init_loops = get_or<int>(caps, "max_init_loops", pc.caps.max_init_loops);
      pc.caps.max_student_loops = get_or<int>(caps, "max_student_loops", pc.caps.max_student_loops);
      pc.caps.max_regen_per_tier =
          get_or<int>(caps, "max_regen_per_tier", pc.caps.max_regen_per_tier);
    }
    pc.samples_per_task = get_or<int>(cfg, "samples_per_task", 1);
    pc.tasks = tasks_from(cfg);
    pc.seed = get_or<std::uint64_t>(cfg, "seed", 0);
    if (cfg.contains("t2_positive_rate")) pc.t2_positive_ppm = ppm_from(cfg.at("t2_positive_rate"));
    pc.concurrency = get_or<int>(cfg, "concurrency", default_concurrency(plans));
    if (cfg.contains("checkpoint_dir")) {
      pc.checkpoint_dir = resolve(inv, cfg.at("checkpoint_dir").get<std::string>());
    }
    pc.agents = AgentSet{build_agent(plans[0], script), build_agent(plans[1], script),
                         build_agent(plans[2], script)};
    std::mutex status_mu;
    pc.status = [&](const Json& event) {
      std::lock_guard<std::mutex> lock(status_mu);
      err << event.dump() << '\n';
    };
    validate_config(pc);

    const CampaignResult result = run_campaign(pc);

    // Rewrite the tag directory from scratch so reruns are byte-identical.
    const fs::path tag_dir = out_dir / tag;
    if (fs::exists(tag_dir)) {
      for (const auto& e : fs::directory_iterator(tag_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") fs::remove(e.path());
      }
    }
    BenchmarkStore store(out_dir, tag);
    write_trajectories(store, result.trajectories);

    Manifest m;
    m.generator_tag = tag;
    m.generator_family = get_or<std::string>(cfg, "generator_family", tag);
    // Scheduling and location settings do not change what is generated.
    Json hashed = cfg;
    for (const char* key : {"concurrency", "checkpoint_dir", "out"}) hashed.erase(key);
    m.config_hash = config_hash(hashed);
    m.seed = pc.seed;
    m.agents = {plans[0].model, plans[1].model, plans[2].model};
    m.catalog_version = std::string(task_catalog_version());
    m.created_at = utc_now();
    store.write_manifest(m);

    Json summary;
    summary["generator_tag"] = tag;
    summary["stats"] = result.stats;
    Json outcomes = Json::array();
    for (const auto& o : result.outcomes) {
      Json row{{"lineage_id", o.lineage_id}, {"status", std::string(to_string(o.status))}};
      if (!o.error.empty()) row["error"] = o.error;
      outcomes.push_back(std::move(row));
    }
    summary["outcomes"] = std::move(outcomes);
    write_text(tag_dir / "campaign.json", summary.dump(2) + "\n");

    out << "wrote " << result.trajectories.size() << " lineages to " << tag_dir.string() << '\n';
    return kExitOk;
  });
}

// --- evaluate ----------------------------------------------------------------

int cmd_evaluate(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Json cfg = effective_config(inv);
    const fs::path out_dir = require_out(inv, cfg);
    if (!cfg.contains("store")) throw ConfigError("evaluate needs a store path (--store)");
    const fs::path store_path = resolve(inv, cfg.at("store").get<std::string>());
    if (!cfg.contains("models") || !cfg.at("models").is_array() || cfg.at("models").empty()) {
      throw ConfigError("evaluate needs a non-empty models list");
    }

    struct ModelPlan {
      AgentPlan agent;
      std::string family;
      std::shared_ptr<Script> script;
    };
    std::vector<ModelPlan> models;
    std::vector<AgentPlan> agent_plans;
    for (const auto& spec : cfg.at("models")) {
      ModelPlan mp;
      Json agent_spec = spec;
      if (spec.contains("name") && !spec.contains("model")) agent_spec["model"] = spec.at("name");
      mp.agent = plan_agent(inv, Role::Student, agent_spec, inv.scripted);
      mp.family = get_or<std::string>(spec, "family", mp.agent.model);
      mp.script = script_from(inv, spec);
      agent_plans.push_back(mp.agent);
      models.push_back(std::move(mp));
    }

    LoadFilter filter;
    filter.final_only = get_or<bool>(cfg, "final_only", false);
    if (cfg.contains("tasks")) {
      const auto tasks = tasks_from(cfg);
      filter.tasks = std::set<TaskType>(tasks.begin(), tasks.end());
    }
    if (cfg.contains("tiers")) {
      std::set<Tier> tiers;
      for (const auto& t : cfg.at("tiers")) {
        const auto tier = t.is_string() ? parse_tier(t.get<std::string>()) : std::nullopt;
        if (!tier) throw ConfigError("unknown tier " + t.dump());
        tiers.insert(*tier);
      }
      filter.tiers = std::move(tiers);
    }
    if (cfg.contains("generator")) filter.generator = cfg.at("generator").get<std::string>();
    if (!fs::exists(store_path)) throw MissingInput("store not found: " + store_path.string());
    const BenchmarkSet set = load_benchmark(store_path, filter);
    if (set.items.empty()) throw MissingInput("no benchmark items selected in " + store_path.string());

    const int concurrency = get_or<int>(cfg, "concurrency", default_concurrency(agent_plans));
    if (concurrency < 1) throw ConfigError("concurrency must be >= 1");

    std::size_t successes = 0;
    CsvDocument families{{"model", "family"}, {}};
    for (const auto& mp : models) {
      const AgentHandle handle = build_agent(mp.agent, mp.script);
      const auto records = evaluate_model(handle, set, concurrency);
      std::string body;
      for (const auto& r : records) {
        body += Json(r).dump() + '\n';
        if (!r.error) ++successes;
      }
      write_text(out_dir / "records" / (file_stem_for(mp.agent.model) + ".ndjson"), body);
      families.rows.push_back({mp.agent.model, mp.family});
      out << mp.agent.model << ": " << records.size() << " records\n";
    }
    write_text(out_dir / "records" / "families.csv", render_csv(families));
    if (successes == 0) {
      err << "error: every evaluation call failed\n";
      return kExitFailed;
    }
    return kExitOk;
  });
}

// --- report ------------------------------------------------------------------

namespace {

std::vector<EvalRecord> load_records(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".ndjson") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(path)) {
    files.push_back(path);
  } else {
    throw MissingInput("records not found: " + path.string());
  }
  std::vector<EvalRecord> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        out.push_back(Json::parse(line).get<EvalRecord>());
      } catch (const std::exception& e) {
        throw CorruptLine(f, n, e.what());
      }
    }
  }
  return out;
}

CsvDocument fixture(const CliInvocation& inv, const Json& cfg, const char* key) {
  const fs::path p = resolve(inv, cfg.at(key).get<std::string>());
  if (!fs::exists(p)) throw MissingInput(std::string(key) + " not found: " + p.string());
  return read_csv(p);
}

void add_record_tables(Report& report, const std::vector<EvalRecord>& records,
                       const std::optional<FamilyMap>& families) {
  const AccuracyTable by_task = accuracy(records, Grouping::ByTask);
  report.tables["accuracy_by_task"] = accuracy_matrix(by_task);
  report.tables["difficulty_by_task"] = difficulty_csv(by_task);
  report.tables["accuracy_by_tier"] = accuracy_long(accuracy(records, Grouping::ByTier));
  report.tables["accuracy_by_generator"] =
      accuracy_long(accuracy(records, Grouping::ByGenerator));

  std::vector<EvalRecord> base;
  std::vector<EvalRecord> final;
  for (const auto& r : records) {
    if (r.tier == Tier::Easy) base.push_back(r);
    if (r.final) final.push_back(r);
  }
  if (!base.empty() && !final.empty()) {
    try {
      const DeltaTable d = base_final_delta(accuracy(base, Grouping::ByGenerator),
                                            accuracy(final, Grouping::ByGenerator));
      report.tables["base_final_delta"] = delta_csv(d);
      report.footnotes.push_back(mean_delta_footnote(d, std::nullopt));
    } catch (const KeyMismatch& e) {
      report.footnotes.push_back(std::string("Base/final delta omitted: ") + e.what());
    }
  }

  if (families) {
    std::map<std::string, std::vector<EvalRecord>> by_family;
    for (const auto& r : records) by_family[r.generator_family].push_back(r);
    std::map<std::string, AccuracyTable> per_generator;
    for (const auto& [family, rs] : by_family) {
      per_generator[family] = accuracy(rs, Grouping::Overall);
    }
    try {
      report.tables["bias_index"] = bias_csv(bias_index(per_generator, *families));
    } catch (const EmptyFamily& e) {
      report.footnotes.push_back(std::string("Bias index omitted: ") + e.what());
    }
  }

  try {
    const TierTable tiers = tier_table(records);
    std::vector<TierRow> rows = tiers.per_model;
    rows.push_back(tiers.mean);
    report.tables["tier_accuracy"] = tier_csv(rows);
  } catch (const EmptyGroup&) {
    report.footnotes.push_back("Tier table omitted: no lineage reached the impossible tier.");
  }
}

}  // namespace

int cmd_report(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Json cfg = effective_config(inv);
    const fs::path out_dir = require_out(inv, cfg);
    Report report;
    bool any = false;

    if (cfg.contains("records")) {
      any = true;
      auto records = load_records(resolve(inv, cfg.at("records").get<std::string>()));
      if (inv.final_only || get_or<bool>(cfg, "final_only", false)) {
        std::erase_if(records, [](const EvalRecord& r) { return !r.final; });
      }
      if (records.empty()) throw MissingInput("no evaluation records found");
      std::optional<FamilyMap> families;
      if (cfg.contains("families")) families = family_map_from_csv(fixture(inv, cfg, "families"));
      add_record_tables(report, records, families);
    }
    if (cfg.contains("count_fixture")) {
      any = true;
      const CsvDocument doc = fixture(inv, cfg, "count_fixture");
      const auto records = records_from_count_fixture(doc);
      const AccuracyTable by_task = accuracy(records, Grouping::ByTask);
      report.tables["fixture_accuracy_by_task"] = accuracy_matrix(by_task);
      report.tables["fixture_difficulty_by_task"] = difficulty_csv(by_task);
    }
    if (cfg.contains("base_final_fixture")) {
      any = true;
      const auto tables = base_final_from_fixture(fixture(inv, cfg, "base_final_fixture"));
      const DeltaTable d = base_final_delta(tables.base, tables.final);
      report.tables["fixture_base_final_delta"] = delta_csv(d);
      std::optional<Ratio> reported;
      if (cfg.contains("reported_mean_delta")) {
        const Json& v = cfg.at("reported_mean_delta");
        reported = parse_decimal(v.is_string() ? v.get<std::string>() : v.dump());
      }
      report.footnotes.push_back(mean_delta_footnote(d, reported));
    }
    if (cfg.contains("tier_fixture")) {
      any = true;
      report.tables["fixture_tier_accuracy"] =
          tier_csv(tier_rows_from_fixture(fixture(inv, cfg, "tier_fixture")));
    }
    if (cfg.contains("consistency")) {
      any = true;
      const Json& c = cfg.at("consistency");
      const Json rounds_doc =
          c.is_string() ? read_json_file(resolve(inv, c.get<std::string>())) : c;
      const auto rounds = rounds_from_json(rounds_doc);
      const auto reference = rounds_doc.value("reference", std::size_t{0});
      report.tables["consistency_curve"] = consistency_csv(consistency_curve(rounds, reference));
    }
    if (!any) throw MissingInput("report config names no inputs");

    report.write(out_dir);
    out << "wrote " << report.tables.size() << " tables to " << out_dir.string() << '\n';
    return kExitOk;
  });
}

// --- validate-store ----------------------------------------------------------

int cmd_validate_store(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Json cfg = effective_config(inv);
    if (!cfg.contains("store")) throw ConfigError("validate-store needs a store path (--store)");
    const fs::path path = resolve(inv, cfg.at("store").get<std::string>());
    if (!fs::exists(path)) throw MissingInput("store not found: " + path.string());

    const BenchmarkSet set = load_benchmark(path, {}, LoadMode::Lenient);
    Json report{{"items", set.size()}, {"manifests", set.manifests.size()}};
    Json problems = Json::array();
    for (const auto& bad : set.skipped_lines) problems.push_back(bad.what());
    for (const auto& t : load_trajectories(path, LoadMode::Lenient)) {
      for (const auto& v : trajectory_violations(t)) problems.push_back(t.lineage_id + ": " + v);
    }
    try {
      (void)export_base_and_final(set);
    } catch (const StoreError& e) {
      problems.push_back(e.what());
    }
    report["problems"] = problems;
    out << report.dump(2) << '\n';
    return problems.empty() ? kExitOk : kExitFailed;
  });
}

// --- argument parsing --------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agent-driven text-anomaly benchmark generation and evaluation", "tadbench"};
  app.require_subcommand(1, 1);

  CliInvocation inv;
  std::vector<std::string> raw_overrides;
  std::string tasks_csv;
  std::string config, out_dir, store;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file")->take_last();
    sub->add_option("--out", out_dir, "Output directory")->take_last();
    sub->add_option("overrides", raw_overrides, "key=value config overrides");
  };
  CLI::App* gen = app.add_subcommand("generate", "Run a generation campaign into a store");
  CLI::App* eval = app.add_subcommand("evaluate", "Evaluate models on stored items");
  CLI::App* rep = app.add_subcommand("report", "Emit CSV tables from records and fixtures");
  CLI::App* val = app.add_subcommand("validate-store", "Check a store for corrupt lines");
  for (CLI::App* sub : {gen, eval, rep, val}) common(sub);

  // Scalar options may repeat; the last occurrence wins.
  std::uint64_t seed = 0;
  int concurrency = 0;
  int samples = 0;
  CLI::Option* seed_opt = gen->add_option("--seed", seed, "Campaign seed")->take_last();
  CLI::Option* samples_opt = gen->add_option("--samples-per-task", samples, "Lineages per task")->take_last();
  CLI::Option* gen_conc = gen->add_option("--concurrency", concurrency, "Worker threads")->take_last();
  CLI::Option* eval_conc = eval->add_option("--concurrency", concurrency, "Worker threads")->take_last();
  CLI::Option* gen_tasks = gen->add_option("--tasks", tasks_csv, "Comma-separated tasks")->take_last();
  CLI::Option* eval_tasks = eval->add_option("--tasks", tasks_csv, "Comma-separated tasks")->take_last();
  gen->add_flag("--scripted", inv.scripted, "Use scripted agents for every role");
  eval->add_flag("--scripted", inv.scripted, "Use scripted students for every model");
  eval->add_flag("--final-only", inv.final_only, "Only final items");
  rep->add_flag("--final-only", inv.final_only, "Only records of final items");
  eval->add_option("--store", store, "Store root, tag directory or task file")->take_last();
  val->add_option("--store", store, "Store root, tag directory or task file")->take_last();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitConfig;
  }

  if (!config.empty()) inv.config_path = config;
  if (!out_dir.empty()) inv.output_dir = out_dir;
  if (!store.empty()) inv.store = store;
  if (*seed_opt) inv.seed = seed;
  if (*samples_opt) inv.samples_per_task = samples;
  if (*gen_conc || *eval_conc) inv.concurrency = concurrency;
  if (*gen_tasks || *eval_tasks) {
    std::vector<std::string> tasks;
    std::stringstream ss(tasks_csv);
    for (std::string t; std::getline(ss, t, ',');) {
      if (!t.empty()) tasks.push_back(t);
    }
    inv.tasks = std::move(tasks);
  }
  for (const auto& kv : raw_overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      err << "usage error: override '" << kv << "' is not key=value\n";
      return kExitConfig;
    }
    inv.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }

  if (gen->parsed()) {
    inv.command = "generate";
    return cmd_generate(inv, out, err);
  }
  if (eval->parsed()) {
    inv.command = "evaluate";
    return cmd_evaluate(inv, out, err);
  }
  if (rep->parsed()) {
    inv.command = "report";
    return cmd_report(inv, out, err);
  }
  inv.command = "validate-store";
  return cmd_validate_store(inv, out, err);
}

}  // namespace tadbench

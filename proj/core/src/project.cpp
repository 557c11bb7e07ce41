#include "aichain/project.hpp"

#include <chrono>
#include <ctime>

#include "aichain/serialization.hpp"

namespace aichain {

const PromptTemplate* ProjectRecord::find_prompt(std::string_view name) const {
  for (const auto& p : prompts) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const EngineConfig* ProjectRecord::find_engine(std::string_view name) const {
  for (const auto& e : engines) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

NameSet ProjectRecord::prompt_names() const {
  NameSet out;
  for (const auto& p : prompts) out.insert(p.name);
  return out;
}

NameSet ProjectRecord::engine_names() const {
  NameSet out;
  for (const auto& e : engines) out.insert(e.name);
  return out;
}

ValidationReport ProjectRecord::validate() const {
  ValidationReport report = aichain::validate(program, prompt_names(), engine_names());
  NameSet seen;
  for (const auto& p : prompts) {
    if (!seen.insert(p.name).second) {
      report.diagnostics.push_back({"", Severity::error, "duplicate prompt name '" + p.name + "'"});
    }
  }
  seen.clear();
  for (const auto& e : engines) {
    if (!seen.insert(e.name).second) {
      report.diagnostics.push_back({"", Severity::error, "duplicate engine name '" + e.name + "'"});
    }
  }
  return report;
}

std::string save_project(const ProjectRecord& record) {
  using json_io::json;
  json j{{"version", kProjectFormatVersion},
         {"name", record.program.name},
         {"variables", json_io::variables_to_json(record.program.variables)},
         {"prompts", json_io::prompts_to_json(record.prompts)},
         {"engines", json_io::engines_to_json(record.engines)},
         {"chain", json_io::units_to_json(record.program.top_level)}};
  if (!record.created.empty()) j["created"] = record.created;
  if (!record.modified.empty()) j["modified"] = record.modified;
  if (!record.extra.empty()) {
    const json extra = json::parse(record.extra);
    for (const auto& [k, v] : extra.items()) {
      if (!j.contains(k)) j[k] = v;
    }
  }
  return j.dump(2) + "\n";
}

ProjectRecord load_project(std::string_view bytes) {
  using json_io::json;
  const json j = json_io::parse(bytes, "project");
  if (!j.is_object()) throw InvalidArgument("project: expected a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer()) {
    throw InvalidArgument("project: missing integer field 'version'");
  }
  const int version = j["version"].get<int>();
  if (version != kProjectFormatVersion) {
    throw UnsupportedVersion("project: unsupported format version " + std::to_string(version) +
                             " (expected " + std::to_string(kProjectFormatVersion) + ")");
  }
  ProjectRecord r;
  if (!j.contains("name") || !j["name"].is_string()) {
    throw InvalidArgument("project: missing string field 'name'");
  }
  r.program.name = j["name"].get<std::string>();
  if (j.contains("variables")) r.program.variables = json_io::variables_from_json(j["variables"]);
  if (j.contains("prompts")) r.prompts = json_io::prompts_from_json(j["prompts"]);
  if (j.contains("engines")) r.engines = json_io::engines_from_json(j["engines"]);
  if (j.contains("chain")) r.program.top_level = json_io::units_from_json(j["chain"], "chain");
  if (j.contains("created") && j["created"].is_string()) r.created = j["created"].get<std::string>();
  if (j.contains("modified") && j["modified"].is_string()) {
    r.modified = j["modified"].get<std::string>();
  }
  json extra = j;
  for (const char* k : {"version", "name", "variables", "prompts", "engines", "chain", "created",
                        "modified"}) {
    extra.erase(k);
  }
  if (!extra.empty()) r.extra = extra.dump();
  return r;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace aichain

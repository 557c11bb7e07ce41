#include "aichain/artifact_store.hpp"

#include <algorithm>
#include <fstream>

#include "aichain/serialization.hpp"

namespace aichain {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------

PromptHub::PromptHub(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  for (auto& p : json_io::prompts_from_json(json_io::parse(read_file(*file_), file_->string()))) {
    prompts_[p.name] = std::move(p);
  }
}

void PromptHub::put(const PromptTemplate& prompt, bool overwrite) {
  check_template(prompt);
  std::lock_guard lock(mu_);
  if (!overwrite && prompts_.count(prompt.name) != 0) {
    throw Conflict("prompt '" + prompt.name + "' already exists in the hub");
  }
  prompts_[prompt.name] = prompt;
  flush_locked();
}

PromptTemplate PromptHub::get(std::string_view name) const {
  std::lock_guard lock(mu_);
  auto it = prompts_.find(name);
  if (it == prompts_.end()) throw NotFound("unknown hub prompt '" + std::string(name) + "'");
  return it->second;
}

bool PromptHub::contains(std::string_view name) const {
  std::lock_guard lock(mu_);
  return prompts_.find(name) != prompts_.end();
}

bool PromptHub::remove(std::string_view name) {
  std::lock_guard lock(mu_);
  auto it = prompts_.find(name);
  if (it == prompts_.end()) return false;
  prompts_.erase(it);
  flush_locked();
  return true;
}

std::vector<PromptTemplate> PromptHub::list() const {
  std::lock_guard lock(mu_);
  std::vector<PromptTemplate> out;
  for (const auto& [_, p] : prompts_) out.push_back(p);
  return out;
}

void PromptHub::replace_all(const std::vector<PromptTemplate>& prompts) {
  std::map<std::string, PromptTemplate, std::less<>> next;
  for (const auto& p : prompts) {
    check_template(p);
    if (!next.emplace(p.name, p).second) throw Conflict("duplicate prompt name '" + p.name + "'");
  }
  std::lock_guard lock(mu_);
  prompts_ = std::move(next);
  flush_locked();
}

void PromptHub::flush_locked() const {
  if (!file_) return;
  std::vector<PromptTemplate> all;
  for (const auto& [_, p] : prompts_) all.push_back(p);
  write_file_atomic(*file_, json_io::prompts_to_json(all).dump(2) + "\n");
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void place(std::vector<T>& items, T item, bool overwrite, std::string_view what) {
  for (auto& existing : items) {
    if (existing.name == item.name) {
      if (!overwrite) {
        throw Conflict(std::string(what) + " '" + item.name + "' already exists in the project");
      }
      existing = std::move(item);
      return;
    }
  }
  items.push_back(std::move(item));
}

}  // namespace

ProjectRecord import_prompt(const PromptHub& hub, std::string_view name, ProjectRecord project,
                            bool overwrite) {
  place(project.prompts, hub.get(name), overwrite, "prompt");
  return project;
}

ProjectRecord import_engine(const EngineRegistry& registry, std::string_view name,
                            ProjectRecord project, bool overwrite) {
  place(project.engines, registry.load_engine(name), overwrite, "engine");
  return project;
}

void export_prompt(const ProjectRecord& project, std::string_view name, PromptHub& hub,
                   bool overwrite) {
  const PromptTemplate* p = project.find_prompt(name);
  if (p == nullptr) throw NotFound("project has no prompt '" + std::string(name) + "'");
  hub.put(*p, overwrite);
}

// ---------------------------------------------------------------------------

ArtifactStore::ArtifactStore(std::filesystem::path root)
    : root_(std::move(root)),
      prompts_(root_ / "hub" / "prompts.json"),
      engines_(root_ / "engines" / "engines.json") {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "projects", ec);
  if (ec) throw IoError("cannot create store root " + root_.string() + ": " + ec.message());
}

bool ArtifactStore::is_storable_name(std::string_view name) noexcept {
  if (name.empty() || name.size() > 128 || name.front() == '.') return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.' || c == ' ';
    if (!ok) return false;
  }
  return true;
}

std::filesystem::path ArtifactStore::project_path(std::string_view name) const {
  if (!is_storable_name(name)) {
    throw InvalidArgument("project name '" + std::string(name) +
                          "' must use letters, digits, space, '_', '-' or '.'");
  }
  return root_ / "projects" / (std::string(name) + ".json");
}

ProjectRecord ArtifactStore::put_project(ProjectRecord record, bool create_only) {
  const auto path = project_path(record.name());
  std::lock_guard lock(projects_mu_);
  const bool exists = std::filesystem::exists(path);
  if (create_only && exists) throw Conflict("project '" + record.name() + "' already exists");
  const std::string now = utc_timestamp();
  if (record.created.empty()) {
    record.created = exists ? load_project(read_file(path)).created : now;
  }
  record.modified = now;
  write_file_atomic(path, save_project(record));
  return record;
}

ProjectRecord ArtifactStore::get_project(std::string_view name) const {
  const auto path = project_path(name);
  std::lock_guard lock(projects_mu_);
  if (!std::filesystem::exists(path)) throw NotFound("unknown project '" + std::string(name) + "'");
  return load_project(read_file(path));
}

bool ArtifactStore::has_project(std::string_view name) const {
  if (!is_storable_name(name)) return false;
  std::lock_guard lock(projects_mu_);
  return std::filesystem::exists(project_path(name));
}

bool ArtifactStore::delete_project(std::string_view name) {
  const auto path = project_path(name);
  std::lock_guard lock(projects_mu_);
  return std::filesystem::remove(path);
}

std::vector<std::string> ArtifactStore::list_projects() const {
  std::lock_guard lock(projects_mu_);
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(root_ / "projects")) {
    if (entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ArtifactStore::register_mocks(EngineGateway& gateway) const {
  const auto dir = root_ / "mocks";
  if (!std::filesystem::is_directory(dir)) return;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    auto script = std::make_shared<MockScript>(
        json_io::mock_from_json(json_io::parse(read_file(entry.path()), entry.path().string())));
    gateway.register_mock(entry.path().stem().string(), std::move(script));
  }
}

}  // namespace aichain

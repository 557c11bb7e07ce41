#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aichain/engine.hpp"
#include "aichain/project.hpp"
#include "aichain/prompt.hpp"

namespace aichain {

// Reusable prompts, independent of any project. Optionally file-backed.
class PromptHub {
 public:
  PromptHub() = default;
  explicit PromptHub(std::filesystem::path file);

  // Inserts or, with overwrite, replaces. Throws Conflict on a clash otherwise.
  void put(const PromptTemplate& prompt, bool overwrite = true);
  PromptTemplate get(std::string_view name) const;
  bool contains(std::string_view name) const;
  bool remove(std::string_view name);
  std::vector<PromptTemplate> list() const;
  void replace_all(const std::vector<PromptTemplate>& prompts);

 private:
  void flush_locked() const;

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  std::map<std::string, PromptTemplate, std::less<>> prompts_;
};

// Copy-on-import: the project receives an independent copy of the hub entry.
// Throws NotFound for an unknown name and Conflict when the project already
// has that name and overwrite is false.
ProjectRecord import_prompt(const PromptHub& hub, std::string_view name, ProjectRecord project,
                            bool overwrite = false);
ProjectRecord import_engine(const EngineRegistry& registry, std::string_view name,
                            ProjectRecord project, bool overwrite = false);

// Publishes a project-local prompt back to the hub as a copy.
void export_prompt(const ProjectRecord& project, std::string_view name, PromptHub& hub,
                   bool overwrite = false);

// File layout under one root:
//   projects/<name>.json   hub/prompts.json   engines/engines.json   mocks/<ref>.json
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Creates (create_only) or replaces a project; stamps created/modified.
  ProjectRecord put_project(ProjectRecord record, bool create_only = false);
  ProjectRecord get_project(std::string_view name) const;
  bool has_project(std::string_view name) const;
  bool delete_project(std::string_view name);
  std::vector<std::string> list_projects() const;

  PromptHub& prompts() noexcept { return prompts_; }
  const PromptHub& prompts() const noexcept { return prompts_; }
  EngineRegistry& engines() noexcept { return engines_; }
  const EngineRegistry& engines() const noexcept { return engines_; }

  // Loads every mocks/*.json file into the gateway under its file stem.
  void register_mocks(EngineGateway& gateway) const;

  static bool is_storable_name(std::string_view name) noexcept;

 private:
  std::filesystem::path project_path(std::string_view name) const;

  std::filesystem::path root_;
  mutable std::mutex projects_mu_;
  PromptHub prompts_;
  EngineRegistry engines_;
};

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace aichain

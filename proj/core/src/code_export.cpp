#include "aichain/code_export.hpp"

#include <nlohmann/json.hpp>

namespace aichain::detail {
std::string_view asset_text(std::string_view key);
}

namespace aichain {

std::string export_code(const ProjectRecord& record) {
  ValidationReport report = record.validate();
  if (!report.valid()) throw ValidationFailed(std::move(report));

  // Timestamps are irrelevant to execution; leave them out so exports are reproducible.
  ProjectRecord stripped = record;
  stripped.created.clear();
  stripped.modified.clear();
  const std::string project_text = save_project(stripped);
  // A JSON string literal is also a valid Python string literal once non-ASCII is escaped.
  const std::string literal = nlohmann::json(project_text).dump(-1, ' ', true);

  std::string out;
  out += "#!/usr/bin/env python3\n";
  out += "# Standalone runner for the \"" + record.name() + "\" AI chain, generated by aichain.\n";
  out += "# Usage: python3 <this file> [--mock fixture.json] [--input VALUE]...\n\n";
  out += detail::asset_text("export/runtime.py");
  out += "\n\nPROJECT_JSON = " + literal + "\n\n";
  out += "if __name__ == \"__main__\":\n    sys.exit(main(PROJECT_JSON))\n";
  return out;
}

}  // namespace aichain

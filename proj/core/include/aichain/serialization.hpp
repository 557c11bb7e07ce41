#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aichain/chain.hpp"
#include "aichain/engine.hpp"
#include "aichain/prompt.hpp"
#include "aichain/validate.hpp"

// JSON forms shared by project files, the Prompt Hub, the engine registry,
// mock fixtures and the HTTP service. Field names are part of the file format.
// Decoders throw InvalidArgument prefixed with the JSON path of the offending
// element.
namespace aichain::json_io {

using json = nlohmann::json;

json to_json(const Value& v);
Value value_from_json(const json& j, const std::string& path = "value");

// Expressions encode as trees; decoders also accept the textual form.
json to_json(const Expr& e);
ExprPtr expr_from_json(const json& j, const std::string& path = "expr");

json to_json(const Unit& u);
Unit unit_from_json(const json& j, const std::string& path = "unit");
json to_json(const WorkerSpec& w);
WorkerSpec worker_from_json(const json& j, const std::string& path = "worker");

json units_to_json(const std::vector<Unit>& units);
std::vector<Unit> units_from_json(const json& j, const std::string& path);

json variables_to_json(const std::vector<VariableDecl>& vars);
std::vector<VariableDecl> variables_from_json(const json& j, const std::string& path = "variables");

json to_json(const PromptTemplate& p);
PromptTemplate prompt_from_json(const json& j, const std::string& path = "prompt");
json prompts_to_json(const std::vector<PromptTemplate>& prompts);
std::vector<PromptTemplate> prompts_from_json(const json& j, const std::string& path = "prompts");

json to_json(const EngineParams& p);
EngineParams params_from_json(const json& j, const std::string& path = "params");
json to_json(const EngineConfig& c);
EngineConfig engine_from_json(const json& j, const std::string& path = "engine");
json engines_to_json(const std::vector<EngineConfig>& engines);
std::vector<EngineConfig> engines_from_json(const json& j, const std::string& path = "engines");

// Mock fixture file: {"rules": [{"match", "response"}...], "default": "..."}.
json to_json(const MockScript& m);
MockScript mock_from_json(const json& j, const std::string& path = "mock");

// {"valid": bool, "diagnostics": [{"unit_id", "severity", "message"}...]}.
json to_json(const ValidationReport& r);

// Parses text as JSON, converting parser failures to InvalidArgument with the
// byte offset.
json parse(std::string_view text, const std::string& what);

}  // namespace aichain::json_io

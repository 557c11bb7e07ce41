#include "aichain/copilots.hpp"

#include <algorithm>
#include <set>

namespace aichain::detail {
std::string_view asset_text(std::string_view key);
}

namespace aichain::copilot {

using json = nlohmann::json;

std::string_view asset(std::string_view name) { return detail::asset_text(name); }

void Conversation::check() const {
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto expected = i % 2 == 0 ? Turn::Role::user : Turn::Role::copilot;
    if (turns[i].role != expected) {
      throw InvalidArgument("conversation turn " + std::to_string(i) +
                            ": roles must alternate starting with the user");
    }
  }
}

namespace {

std::string ask(const EngineConfig& engine, const EngineGateway& gateway, std::string_view asset_name,
                const Environment& bindings) {
  const std::string prompt = render(asset(asset_name), bindings);
  return gateway.invoke(engine, prompt).value.to_text();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void require_text(std::string_view value, const char* what) {
  if (trim(value).empty()) throw InvalidArgument(std::string(what) + " must not be empty");
}

std::string render_conversation(const Conversation& c) {
  if (c.turns.empty()) return "(none yet)";
  std::string out;
  for (const auto& t : c.turns) {
    if (!out.empty()) out += '\n';
    out += t.role == Turn::Role::user ? "User: " : "Co-pilot: ";
    out += t.text;
  }
  return out;
}

// Pulls the JSON object out of replies wrapped in prose or markdown fences.
std::string json_candidate(const std::string& raw) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return raw;
  return raw.substr(open, close - open + 1);
}

// nullopt when the reply is not a JSON object with a steps array.
std::optional<json> parse_reply(const std::string& raw) {
  try {
    json j = json::parse(json_candidate(raw));
    if (j.is_object() && j.contains("steps") && j["steps"].is_array()) return j;
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

void check_skeleton(const Skeleton& s) {
  if (s.steps.empty()) throw InvalidArgument("skeleton has no steps");
  std::set<std::string, std::less<>> names;
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const auto& step = s.steps[i];
    const std::string where = "step " + std::to_string(i + 1);
    if (!is_identifier(step.name)) {
      throw InvalidArgument(where + ": step name '" + step.name + "' is not an identifier");
    }
    if (!names.insert(step.name).second) {
      throw InvalidArgument(where + ": duplicate step name '" + step.name + "'");
    }
    if (step.candidate_prompts.size() != 3) {
      throw InvalidArgument(where + " ('" + step.name + "'): exactly three candidates required, got " +
                            std::to_string(step.candidate_prompts.size()));
    }
    if (step.selected >= step.candidate_prompts.size()) {
      throw InvalidArgument(where + ": selected candidate out of range");
    }
    for (const auto& p : step.candidate_prompts) {
      if (trim(p).empty()) throw InvalidArgument(where + ": candidate prompt is empty");
      extract_placeholders(p);
    }
    for (const auto& in : step.input_refs) {
      if (!is_identifier(in)) throw InvalidArgument(where + ": input '" + in + "' is not an identifier");
    }
    if (step.engine_ref && !is_identifier(*step.engine_ref)) {
      throw InvalidArgument(where + ": engine '" + *step.engine_ref + "' is not an identifier");
    }
  }
}

json to_json(const Skeleton& s) {
  json steps = json::array();
  for (const auto& st : s.steps) {
    steps.push_back(json{{"name", st.name},
                         {"description", st.description},
                         {"prompts", st.candidate_prompts},
                         {"selected", st.selected},
                         {"inputs", st.input_refs},
                         {"engine", st.engine_ref ? json(*st.engine_ref) : json(nullptr)}});
  }
  return json{{"task_description", s.task_description}, {"steps", std::move(steps)}};
}

Skeleton skeleton_from_json(const json& j) {
  if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array()) {
    throw InvalidArgument("skeleton: expected an object with a 'steps' array");
  }
  Skeleton s;
  if (j.contains("task_description") && j["task_description"].is_string()) {
    s.task_description = j["task_description"].get<std::string>();
  }
  const json& steps = j["steps"];
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const json& st = steps[i];
    const std::string where = "skeleton step " + std::to_string(i + 1);
    try {
      SkeletonStep step;
      step.name = st.at("name").get<std::string>();
      step.description = st.value("description", std::string());
      step.candidate_prompts = st.at("prompts").get<std::vector<std::string>>();
      step.selected = st.value("selected", std::size_t{0});
      if (st.contains("inputs") && !st["inputs"].is_null()) {
        step.input_refs = st["inputs"].get<std::vector<std::string>>();
      }
      if (st.contains("engine") && st["engine"].is_string()) {
        step.engine_ref = st["engine"].get<std::string>();
      }
      s.steps.push_back(std::move(step));
    } catch (const json::exception& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
  }
  check_skeleton(s);
  return s;
}

// ---------------------------------------------------------------------------

std::string clarify(std::string_view task_description, const Conversation& conversation,
                    const EngineConfig& engine, const EngineGateway& gateway) {
  require_text(task_description, "task description");
  conversation.check();
  return trim(ask(engine, gateway, "copilot/clarify.txt",
                  {{"Task_Description", Value::text(std::string(task_description))},
                   {"Conversation", Value::text(render_conversation(conversation))}}));
}

std::string incorporate(std::string_view task_description, std::string_view question,
                        std::string_view answer, const EngineConfig& engine,
                        const EngineGateway& gateway) {
  require_text(task_description, "task description");
  require_text(question, "question");
  require_text(answer, "answer");
  return trim(ask(engine, gateway, "copilot/incorporate.txt",
                  {{"Task_Description", Value::text(std::string(task_description))},
                   {"Question", Value::text(std::string(question))},
                   {"Answer", Value::text(std::string(answer))}}));
}

SkeletonDraft generate_skeleton(std::string_view task_description, const EngineConfig& engine,
                                const EngineGateway& gateway) {
  require_text(task_description, "task description");
  SkeletonDraft draft;
  std::string raw = ask(engine, gateway, "copilot/skeleton.txt",
                        {{"Task_Description", Value::text(std::string(task_description))}});
  auto parsed = parse_reply(raw);
  if (!parsed) {
    draft.repair_rounds = 1;
    raw = ask(engine, gateway, "copilot/repair.txt", {{"Raw_Output", Value::text(raw)}});
    parsed = parse_reply(raw);
    if (!parsed) {
      throw SkeletonParseError("skeleton co-pilot did not return valid JSON after one repair", raw);
    }
  }
  draft.skeleton = skeleton_from_json(*parsed);
  draft.skeleton.task_description = std::string(task_description);
  return draft;
}

AssembledChain skeleton_to_program(const Skeleton& skeleton, std::string_view default_engine) {
  check_skeleton(skeleton);
  std::set<std::string, std::less<>> all_steps;
  for (const auto& st : skeleton.steps) all_steps.insert(st.name);

  AssembledChain out;
  std::set<std::string, std::less<>> earlier;
  std::set<std::string, std::less<>> console_vars;

  for (std::size_t i = 0; i < skeleton.steps.size(); ++i) {
    const SkeletonStep& st = skeleton.steps[i];
    std::vector<Preworker> pre;
    for (const auto& ref : st.input_refs) {
      if (earlier.count(ref) != 0 || console_vars.count(ref) != 0) {
        pre.push_back(variable_ref(ref));
      } else if (all_steps.count(ref) != 0) {
        throw InvalidArgument("step '" + st.name + "' uses '" + ref +
                              "' before that step has run (forward reference)");
      } else {
        console_vars.insert(ref);
        out.program.variables.push_back({ref, Value::text("")});
        pre.push_back(console_input(ref, ref));
      }
    }

    PromptTemplate prompt;
    prompt.name = st.name + "_prompt";
    prompt.instruction = st.candidate_prompts[st.selected];
    out.prompts.push_back(prompt);

    WorkerSpec w = make_worker(st.name, prompt.name,
                               std::string(st.engine_ref.value_or(std::string(default_engine))),
                               std::move(pre));
    w.id = "step-" + st.name;
    if (!st.description.empty()) w.meta.comment = st.description;

    if (i + 1 == skeleton.steps.size()) {
      Unit u = output(std::move(w));
      std::get<OutputStmt>(u.node).id = "output-" + st.name;
      out.program.top_level.push_back(std::move(u));
    } else {
      out.program.top_level.push_back(unit(std::move(w)));
    }
    earlier.insert(st.name);
  }
  return out;
}

}  // namespace aichain::copilot

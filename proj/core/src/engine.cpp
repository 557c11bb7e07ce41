#include "aichain/engine.hpp"

#include <fstream>

#include "aichain/expr.hpp"
#include "aichain/serialization.hpp"

namespace aichain {

std::string_view engine_kind_name(EngineKind k) noexcept {
  switch (k) {
    case EngineKind::chat: return "chat";
    case EngineKind::completion: return "completion";
    case EngineKind::image: return "image";
    case EngineKind::code_exec: return "code-exec";
    case EngineKind::mock: return "mock";
  }
  return "mock";
}

std::optional<EngineKind> parse_engine_kind(std::string_view s) noexcept {
  if (s == "chat") return EngineKind::chat;
  if (s == "completion") return EngineKind::completion;
  if (s == "image") return EngineKind::image;
  if (s == "code-exec") return EngineKind::code_exec;
  if (s == "mock") return EngineKind::mock;
  return std::nullopt;
}

namespace {

void require_range(const char* knob, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    throw ParameterError(std::string(knob) + " = " + format_number(v) + " is outside [" +
                         format_number(lo) + ", " + format_number(hi) + "]");
  }
}

}  // namespace

void check_params(const EngineParams& p) {
  require_range("temperature", p.temperature, 0.0, 2.0);
  if (p.max_length <= 0) {
    throw ParameterError("max_length = " + std::to_string(p.max_length) + " must be positive");
  }
  require_range("top_p", p.top_p, 0.0, 1.0);
  require_range("frequency_penalty", p.frequency_penalty, -2.0, 2.0);
  require_range("presence_penalty", p.presence_penalty, -2.0, 2.0);
}

void check_config(const EngineConfig& c) {
  if (!is_identifier(c.name)) {
    throw InvalidArgument("engine name '" + c.name + "' is not an identifier");
  }
  check_params(c.params);
  switch (c.kind) {
    case EngineKind::chat:
    case EngineKind::completion:
    case EngineKind::image:
      if (c.model_id.empty()) {
        throw InvalidArgument("engine '" + c.name + "' of kind " +
                              std::string(engine_kind_name(c.kind)) + " needs a model_id");
      }
      break;
    case EngineKind::mock:
      if (!c.mock_script_ref || c.mock_script_ref->empty()) {
        throw InvalidArgument("mock engine '" + c.name + "' needs a mock_script_ref");
      }
      break;
    case EngineKind::code_exec:
      if (c.sandbox) {
        throw InvalidArgument("engine '" + c.name + "': sandboxed code execution is not available");
      }
      break;
  }
  if (!(c.timeout_seconds > 0.0)) {
    throw InvalidArgument("engine '" + c.name + "': timeout_seconds must be positive");
  }
}

// ---------------------------------------------------------------------------

MockScript::MockScript(std::vector<Rule> rules, std::string default_response)
    : rules_(std::move(rules)), default_(std::move(default_response)) {}

MockScript::MockScript(const MockScript& other)
    : rules_(other.rules_), default_(other.default_), log_(other.call_log()) {}

MockScript& MockScript::operator=(const MockScript& other) {
  if (this != &other) {
    auto log = other.call_log();
    std::lock_guard lock(mu_);
    rules_ = other.rules_;
    default_ = other.default_;
    log_ = std::move(log);
  }
  return *this;
}

std::string MockScript::respond(std::string_view prompt) {
  {
    std::lock_guard lock(mu_);
    log_.emplace_back(prompt);
  }
  for (const auto& r : rules_) {
    if (prompt.find(r.match) != std::string_view::npos) return r.response;
  }
  return default_;
}

std::vector<std::string> MockScript::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void MockScript::clear_log() {
  std::lock_guard lock(mu_);
  log_.clear();
}

// ---------------------------------------------------------------------------

void EngineGateway::register_mock(std::string ref, std::shared_ptr<MockScript> script) {
  std::lock_guard lock(mu_);
  mocks_[std::move(ref)] = std::move(script);
}

std::shared_ptr<MockScript> EngineGateway::find_mock(std::string_view ref) const {
  std::lock_guard lock(mu_);
  auto it = mocks_.find(ref);
  return it == mocks_.end() ? nullptr : it->second;
}

void EngineGateway::set_override(std::shared_ptr<MockScript> script) {
  std::lock_guard lock(mu_);
  override_ = std::move(script);
}

std::shared_ptr<MockScript> EngineGateway::override_script() const {
  std::lock_guard lock(mu_);
  return override_;
}

namespace {

Value scripted_value(EngineKind kind, std::string text) {
  if (kind == EngineKind::image) {
    if (text.empty()) throw EngineError("image engine returned an empty reference", false);
    return Value::image_ref(std::move(text));
  }
  return Value::text(std::move(text));
}

EngineResponse run_code(std::string_view prompt) {
  try {
    const Value result = eval_expr(Environment{}, *parse_expr(prompt));
    return {Value::text(result.to_text()), std::nullopt};
  } catch (const Error& e) {
    throw EngineError(std::string("code-exec: ") + e.what(), false);
  }
}

}  // namespace

EngineResponse EngineGateway::invoke(const EngineConfig& config, std::string_view prompt,
                                     const std::optional<EngineParams>& override_params) const {
  if (prompt.empty()) throw EngineError("engine '" + config.name + "': empty prompt", false);
  const EngineParams params = override_params.value_or(config.params);
  check_params(params);

  if (config.kind == EngineKind::code_exec) return run_code(prompt);

  if (auto script = override_script()) {
    return {scripted_value(config.kind, script->respond(prompt)), std::nullopt};
  }
  if (config.kind == EngineKind::mock) {
    auto script = config.mock_script_ref ? find_mock(*config.mock_script_ref) : nullptr;
    if (!script) {
      throw EngineError("mock engine '" + config.name + "': no script registered as '" +
                            config.mock_script_ref.value_or("") + "'",
                        false);
    }
    return {Value::text(script->respond(prompt)), std::nullopt};
  }
  return invoke_remote(config, prompt, params);
}

// ---------------------------------------------------------------------------

EngineRegistry::EngineRegistry(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(*file_)) return;
  std::ifstream in(*file_, std::ios::binary);
  if (!in) throw IoError("cannot read engine registry " + file_->string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (auto& c : json_io::engines_from_json(json_io::parse(text, file_->string()))) {
    engines_[c.name] = std::move(c);
  }
}

void EngineRegistry::save_engine(const EngineConfig& config) {
  check_config(config);
  std::lock_guard lock(mu_);
  engines_[config.name] = config;
  flush_locked();
}

std::vector<EngineConfig> EngineRegistry::list_engines() const {
  std::lock_guard lock(mu_);
  std::vector<EngineConfig> out;
  out.reserve(engines_.size());
  for (const auto& [_, c] : engines_) out.push_back(c);
  return out;
}

EngineConfig EngineRegistry::load_engine(std::string_view name) const {
  std::lock_guard lock(mu_);
  auto it = engines_.find(name);
  if (it == engines_.end()) throw NotFound("unknown engine '" + std::string(name) + "'");
  return it->second;
}

bool EngineRegistry::contains(std::string_view name) const {
  std::lock_guard lock(mu_);
  return engines_.find(name) != engines_.end();
}

bool EngineRegistry::remove_engine(std::string_view name) {
  std::lock_guard lock(mu_);
  auto it = engines_.find(name);
  if (it == engines_.end()) return false;
  engines_.erase(it);
  flush_locked();
  return true;
}

void EngineRegistry::replace_all(const std::vector<EngineConfig>& configs) {
  std::map<std::string, EngineConfig, std::less<>> next;
  for (const auto& c : configs) {
    check_config(c);
    if (!next.emplace(c.name, c).second) throw Conflict("duplicate engine name '" + c.name + "'");
  }
  std::lock_guard lock(mu_);
  engines_ = std::move(next);
  flush_locked();
}

void EngineRegistry::flush_locked() const {
  if (!file_) return;
  std::vector<EngineConfig> all;
  for (const auto& [_, c] : engines_) all.push_back(c);
  std::filesystem::create_directories(file_->parent_path());
  const auto tmp = file_->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write engine registry " + tmp);
    out << json_io::engines_to_json(all).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, *file_);
}

}  // namespace aichain

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aichain/error.hpp"
#include "aichain/value.hpp"

namespace aichain {

enum class EngineKind { chat, completion, image, code_exec, mock };

std::string_view engine_kind_name(EngineKind k) noexcept;
std::optional<EngineKind> parse_engine_kind(std::string_view s) noexcept;

// Sampling knobs exposed in Engine Management. Defaults follow the usual
// provider defaults.
struct EngineParams {
  double temperature = 1.0;       // [0, 2]
  int max_length = 512;           // tokens, > 0
  double top_p = 1.0;             // [0, 1]
  double frequency_penalty = 0.0; // [-2, 2]
  double presence_penalty = 0.0;  // [-2, 2]

  friend bool operator==(const EngineParams&, const EngineParams&) = default;
};

struct EngineConfig {
  std::string name;
  EngineKind kind = EngineKind::mock;
  std::string model_id;
  std::optional<std::string> endpoint;  // base URL, e.g. https://api.openai.com/v1
  EngineParams params;
  std::optional<std::string> mock_script_ref;
  std::string api_key_env = "OPENAI_API_KEY";  // the key itself never lands in files
  double timeout_seconds = 60.0;
  bool sandbox = false;  // reserved for a real code sandbox; must stay false for now

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

class ParameterError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Failure while talking to (or evaluating on) an engine.
class EngineError : public Error {
 public:
  EngineError(const std::string& what, bool retryable, int http_status = 0)
      : Error(what), retryable_(retryable), http_status_(http_status) {}

  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

// Throws ParameterError naming the first out-of-range knob.
void check_params(const EngineParams& p);

// Throws InvalidArgument when required fields for the kind are missing.
void check_config(const EngineConfig& c);

struct EngineResponse {
  Value value;
  std::optional<std::string> raw;
};

// Scripted offline engine. The first rule whose `match` is a substring of the
// prompt answers; otherwise the default does. Every prompt is logged.
class MockScript {
 public:
  struct Rule {
    std::string match;
    std::string response;

    friend bool operator==(const Rule&, const Rule&) = default;
  };

  MockScript() = default;
  MockScript(std::vector<Rule> rules, std::string default_response);
  MockScript(const MockScript& other);
  MockScript& operator=(const MockScript& other);

  std::string respond(std::string_view prompt);

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const std::string& default_response() const noexcept { return default_; }
  std::vector<std::string> call_log() const;
  void clear_log();

 private:
  std::vector<Rule> rules_;
  std::string default_ = "";
  mutable std::mutex mu_;
  std::vector<std::string> log_;
};

// Uniform invocation over remote endpoints, the expression executor and mocks.
// Safe to call concurrently.
class EngineGateway {
 public:
  EngineGateway() = default;

  void register_mock(std::string ref, std::shared_ptr<MockScript> script);
  std::shared_ptr<MockScript> find_mock(std::string_view ref) const;

  // When set, every engine except code-exec answers from this script. Used to
  // run real projects offline.
  void set_override(std::shared_ptr<MockScript> script);
  std::shared_ptr<MockScript> override_script() const;

  EngineResponse invoke(const EngineConfig& config, std::string_view prompt,
                        const std::optional<EngineParams>& override_params = std::nullopt) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<MockScript>, std::less<>> mocks_;
  std::shared_ptr<MockScript> override_;
};

// OpenAI-compatible HTTP call for chat, completion and image engines.
EngineResponse invoke_remote(const EngineConfig& config, std::string_view prompt,
                             const EngineParams& params);

// Named engine configurations, optionally persisted to a JSON array file.
class EngineRegistry {
 public:
  EngineRegistry() = default;
  explicit EngineRegistry(std::filesystem::path file);

  void save_engine(const EngineConfig& config);
  std::vector<EngineConfig> list_engines() const;
  EngineConfig load_engine(std::string_view name) const;
  bool contains(std::string_view name) const;
  bool remove_engine(std::string_view name);
  void replace_all(const std::vector<EngineConfig>& configs);

 private:
  void flush_locked() const;

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> file_;
  std::map<std::string, EngineConfig, std::less<>> engines_;
};

}  // namespace aichain

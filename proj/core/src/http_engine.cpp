#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aichain/engine.hpp"

namespace aichain {

namespace {

using json = nlohmann::json;

constexpr const char* kDefaultEndpoint = "https://api.openai.com/v1";

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw EngineError("endpoint '" + url + "' has no scheme", false);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

std::string provider_message(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (j.contains("error")) {
      const auto& e = j["error"];
      if (e.is_object() && e.contains("message") && e["message"].is_string()) {
        return e["message"].get<std::string>();
      }
      if (e.is_string()) return e.get<std::string>();
    }
  } catch (const json::exception&) {
  }
  return body.substr(0, 500);
}

void add_sampling(json& body, const EngineParams& p) {
  body["temperature"] = p.temperature;
  body["max_tokens"] = p.max_length;
  body["top_p"] = p.top_p;
  body["frequency_penalty"] = p.frequency_penalty;
  body["presence_penalty"] = p.presence_penalty;
}

}  // namespace

EngineResponse invoke_remote(const EngineConfig& config, std::string_view prompt,
                             const EngineParams& params) {
  const Endpoint ep = split_endpoint(config.endpoint.value_or(kDefaultEndpoint));

  json body{{"model", config.model_id}};
  std::string path = ep.prefix;
  switch (config.kind) {
    case EngineKind::chat:
      path += "/chat/completions";
      body["messages"] = json::array({json{{"role", "user"}, {"content", std::string(prompt)}}});
      add_sampling(body, params);
      break;
    case EngineKind::completion:
      path += "/completions";
      body["prompt"] = std::string(prompt);
      add_sampling(body, params);
      break;
    case EngineKind::image:
      path += "/images/generations";
      body["prompt"] = std::string(prompt);
      body["n"] = 1;
      break;
    default:
      throw EngineError("engine '" + config.name + "' is not a remote engine", false);
  }

  httplib::Client client(ep.origin);
  const auto secs = static_cast<time_t>(config.timeout_seconds);
  const auto usecs = static_cast<time_t>((config.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw EngineError("engine '" + config.name + "': request failed (" +
                          httplib::to_string(res.error()) + ")",
                      true);
  }
  if (res->status >= 400) {
    const bool retryable = res->status == 429 || res->status >= 500;
    throw EngineError("engine '" + config.name + "': HTTP " + std::to_string(res->status) + ": " +
                          provider_message(res->body),
                      retryable, res->status);
  }

  try {
    const json reply = json::parse(res->body);
    switch (config.kind) {
      case EngineKind::chat:
        return {Value::text(reply.at("choices").at(0).at("message").at("content").get<std::string>()),
                res->body};
      case EngineKind::completion:
        return {Value::text(reply.at("choices").at(0).at("text").get<std::string>()), res->body};
      default: {
        const auto& item = reply.at("data").at(0);
        std::string ref = item.contains("url") ? item["url"].get<std::string>()
                                               : item.at("id").get<std::string>();
        // The raw payload may carry image bytes; the console only needs the reference.
        return {Value::image_ref(std::move(ref)), std::nullopt};
      }
    }
  } catch (const json::exception& e) {
    throw EngineError("engine '" + config.name + "': unexpected response shape: " + e.what(), false);
  } catch (const InvalidArgument& e) {
    throw EngineError("engine '" + config.name + "': " + e.what(), false);
  }
}

}  // namespace aichain

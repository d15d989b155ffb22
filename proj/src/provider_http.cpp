#include <cstdlib>

#ifdef CULTUREVAL_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "cultureval/gateway.hpp"

namespace cultureval::gateway {

using nlohmann::json;

namespace {

class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("provider base_url is required");
    if (!config_.auth_env.empty()) {
      const char* token = std::getenv(config_.auth_env.c_str());
      if (token) token_ = token;
    }
  }

  ChatResult complete(const ChatRequest& request) override {
    json body;
    body["model"] = config_.model.empty() ? request.model : config_.model;
    json messages = json::array();
    if (!request.system.empty())
      messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    body["messages"] = std::move(messages);
    body["temperature"] = request.params.temperature;
    body["top_p"] = request.params.top_p;
    body["max_tokens"] = request.params.max_tokens;
    if (config_.kind == "openai_chat_topk" && request.params.top_k > 0)
      body["top_k"] = request.params.top_k;
    body["n"] = 1;

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(config_.api_path, headers, body.dump(), "application/json");
    if (!res)
      throw FetchError("transport error: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status != 200)
      throw FetchError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));

    try {
      json doc = json::parse(res->body);
      ChatResult out;
      out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      if (doc.contains("model")) out.metadata["model"] = doc["model"].get<std::string>();
      if (doc.at("choices").at(0).contains("finish_reason") &&
          doc["choices"][0]["finish_reason"].is_string())
        out.metadata["finish_reason"] = doc["choices"][0]["finish_reason"].get<std::string>();
      if (doc.contains("usage") && doc["usage"].contains("total_tokens"))
        out.metadata["total_tokens"] = std::to_string(doc["usage"]["total_tokens"].get<long>());
      return out;
    } catch (const json::exception& e) {
      throw FetchError(std::string("malformed completion response: ") + e.what());
    }
  }

 private:
  ProviderConfig config_;
  std::string token_;
};

}  // namespace

std::unique_ptr<ChatProvider> make_http_provider(const ProviderConfig& config) {
  return std::make_unique<HttpChatProvider>(config);
}

}  // namespace cultureval::gateway

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "promptopt/errors.hpp"
#include "promptopt/gateway.hpp"

namespace promptopt {

namespace {

// Splits "https://host:port/path" into base URL and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint URL must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
    auto [base, path] = split_url(config_.endpoint_url);

    httplib::Client client(base);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_connection_timeout(config_.timeout_seconds, 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    nlohmann::json messages = nlohmann::json::array();
    if (request.system_text) {
        messages.push_back({{"role", "system"}, {"content", *request.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_text}});

    nlohmann::json body = {
        {"model", request.model_id},
        {"messages", messages},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(path, headers, body.dump(), "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();

    if (!result) {
        throw BackendUnavailable("HTTP request failed: " + httplib::to_string(result.error()));
    }
    if (result->status < 200 || result->status >= 300) {
        throw BackendUnavailable("HTTP status " + std::to_string(result->status) + ": " +
                                 result->body);
    }

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailable(std::string("unparseable provider response: ") + e.what());
    }

    ChatResponse response;
    response.provider_latency_ms = elapsed;
    try {
        response.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        response.text.clear();
    }
    if (parsed.contains("usage")) {
        const auto& usage = parsed["usage"];
        response.prompt_tokens = usage.value("prompt_tokens", 0L);
        response.completion_tokens = usage.value("completion_tokens", 0L);
    } else {
        std::string prompt_side = request.user_text;
        if (request.system_text) prompt_side += *request.system_text;
        response.prompt_tokens = estimate_tokens(prompt_side);
        response.completion_tokens = estimate_tokens(response.text);
    }
    return response;
}

}  // namespace promptopt

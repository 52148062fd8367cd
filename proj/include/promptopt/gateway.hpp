#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace promptopt {

struct ChatRequest {
    std::string model_id;
    std::optional<std::string> system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::string request_tag;  // e.g. "candidate-gen", "task-eval", "reflection"
};

struct ChatResponse {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long provider_latency_ms = 0;
};

/// Dollar rates per 1K tokens for one model.
struct ModelPricing {
    double prompt_per_1k = 0.0;
    double completion_per_1k = 0.0;
};

struct LedgerRow {
    std::string model_id;
    std::string request_tag;
    long calls = 0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    double dollars = 0.0;
};

/// Per-(model, tag) usage accumulators. Monotone within a run.
class CostLedger {
public:
    void set_pricing(const std::string& model_id, ModelPricing pricing);
    std::optional<ModelPricing> pricing_for(const std::string& model_id) const;

    void record(const std::string& model_id, const std::string& tag,
                long prompt_tokens, long completion_tokens);

    double total_dollars() const;
    long total_tokens() const;

    /// Rows sorted by model_id then tag.
    std::vector<LedgerRow> report() const;

    /// Reinstates a persisted row (resume path).
    void restore_row(const LedgerRow& row);

    void clear();

private:
    std::map<std::pair<std::string, std::string>, LedgerRow> rows_;
    std::map<std::string, ModelPricing> pricing_;
};

/// Anything that can answer a chat completion request.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Offline token estimate used when a provider reports none.
long estimate_tokens(const std::string& text);

struct MockRule {
    std::string tag_contains;        // empty matches any tag
    std::string user_text_contains;  // empty matches any user text
    std::string response_text;
    bool consume = true;  // ordered-script rules fire once; sticky rules repeat
};

/// Deterministic scripted backend. Rules are matched in script order; a
/// consuming rule fires once, a sticky rule any number of times. Falls back
/// to default_response. Token counts come from estimate_tokens.
class ScriptedMockBackend : public ChatBackend {
public:
    explicit ScriptedMockBackend(std::string default_response = "");

    void add_rule(MockRule rule);
    ChatResponse complete(const ChatRequest& request) override;

    /// Log of every request seen, in arrival order.
    std::vector<ChatRequest> call_log() const;
    long call_count(const std::string& tag) const;

    struct Call {
        ChatRequest request;
        ChatResponse response;
    };
    /// Request/response pairs in arrival order.
    std::vector<Call> calls() const;

    /// When > 0, the next N requests get an empty-text response (simulates
    /// transient failures for retry tests).
    void fail_next(int n);

private:
    mutable std::mutex mutex_;
    std::vector<MockRule> rules_;
    std::vector<bool> used_;
    std::string default_response_;
    std::vector<ChatRequest> log_;
    std::vector<Call> calls_;
    int fail_next_ = 0;
};

struct HttpBackendConfig {
    std::string endpoint_url;      // e.g. https://host/v1/chat/completions
    std::string api_key_env;       // environment variable holding the token
    int timeout_seconds = 120;
};

/// Chat-completions HTTP client (OpenAI-style wire format).
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);
    ChatResponse complete(const ChatRequest& request) override;

private:
    HttpBackendConfig config_;
};

struct RetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 1000;
};

/// Front door for all model calls: routes by model_id, retries transient
/// failures, enforces the dollar budget cap, and keeps the cost ledger.
/// Safe for concurrent calls; ledger updates are serialized.
class Gateway {
public:
    Gateway() = default;

    void register_backend(const std::string& model_id, std::shared_ptr<ChatBackend> backend);
    void set_retry_policy(RetryPolicy policy);
    void set_budget_cap(std::optional<double> dollars);
    void set_max_in_flight(int n);
    void set_on_budget_exceeded(std::function<void()> callback);

    CostLedger& ledger() { return ledger_; }
    const CostLedger& ledger() const { return ledger_; }

    /// Throws BackendUnavailable after retries, BudgetExceeded when the
    /// estimated cost of this call would pass the cap (after invoking the
    /// persist callback).
    ChatResponse complete(const ChatRequest& request);

private:
    mutable std::mutex mutex_;
    std::condition_variable slot_available_;
    int max_in_flight_ = 8;
    int in_flight_ = 0;
    std::map<std::string, std::shared_ptr<ChatBackend>> backends_;
    RetryPolicy retry_;
    std::optional<double> budget_cap_;
    std::function<void()> on_budget_exceeded_;
    CostLedger ledger_;
};

/// Content strictly between the first "START" and the next "END", trimmed.
/// Throws MarkerNotFound when no well-formed pair exists.
std::string extract_marked(const std::string& text);

std::string trim(const std::string& s);

}  // namespace promptopt

#include "promptopt/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "promptopt/errors.hpp"

namespace promptopt {

std::string trim(const std::string& s) {
    auto begin = s.begin();
    auto end = s.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
    return std::string(begin, end);
}

std::string extract_marked(const std::string& text) {
    const std::string start_marker = "START";
    const std::string end_marker = "END";
    const auto start = text.find(start_marker);
    if (start == std::string::npos) {
        throw MarkerNotFound("no START marker in model output");
    }
    const auto content_begin = start + start_marker.size();
    const auto end = text.find(end_marker, content_begin);
    if (end == std::string::npos) {
        throw MarkerNotFound("no END marker after START in model output");
    }
    return trim(text.substr(content_begin, end - content_begin));
}

long estimate_tokens(const std::string& text) {
    return static_cast<long>((text.size() + 3) / 4);
}

// ---------------------------------------------------------------- CostLedger

void CostLedger::set_pricing(const std::string& model_id, ModelPricing pricing) {
    pricing_[model_id] = pricing;
}

std::optional<ModelPricing> CostLedger::pricing_for(const std::string& model_id) const {
    auto it = pricing_.find(model_id);
    if (it == pricing_.end()) return std::nullopt;
    return it->second;
}

void CostLedger::record(const std::string& model_id, const std::string& tag,
                        long prompt_tokens, long completion_tokens) {
    auto& row = rows_[{model_id, tag}];
    row.model_id = model_id;
    row.request_tag = tag;
    row.calls += 1;
    row.prompt_tokens += prompt_tokens;
    row.completion_tokens += completion_tokens;
    if (auto pricing = pricing_for(model_id)) {
        row.dollars += prompt_tokens / 1000.0 * pricing->prompt_per_1k +
                       completion_tokens / 1000.0 * pricing->completion_per_1k;
    }
}

double CostLedger::total_dollars() const {
    double total = 0.0;
    for (const auto& [key, row] : rows_) total += row.dollars;
    return total;
}

long CostLedger::total_tokens() const {
    long total = 0;
    for (const auto& [key, row] : rows_) total += row.prompt_tokens + row.completion_tokens;
    return total;
}

std::vector<LedgerRow> CostLedger::report() const {
    std::vector<LedgerRow> out;
    out.reserve(rows_.size());
    for (const auto& [key, row] : rows_) out.push_back(row);  // map is already sorted
    return out;
}

void CostLedger::restore_row(const LedgerRow& row) {
    rows_[{row.model_id, row.request_tag}] = row;
}

void CostLedger::clear() { rows_.clear(); }

// ------------------------------------------------------- ScriptedMockBackend

ScriptedMockBackend::ScriptedMockBackend(std::string default_response)
    : default_response_(std::move(default_response)) {}

void ScriptedMockBackend::add_rule(MockRule rule) {
    std::lock_guard lock(mutex_);
    rules_.push_back(std::move(rule));
    used_.push_back(false);
}

ChatResponse ScriptedMockBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    log_.push_back(request);

    std::string text;
    if (fail_next_ > 0) {
        --fail_next_;
    } else {
        text = default_response_;
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            if (used_[i]) continue;
            const auto& rule = rules_[i];
            const bool tag_ok = rule.tag_contains.empty() ||
                                request.request_tag.find(rule.tag_contains) != std::string::npos;
            const bool text_ok = rule.user_text_contains.empty() ||
                                 request.user_text.find(rule.user_text_contains) != std::string::npos;
            if (tag_ok && text_ok) {
                text = rule.response_text;
                if (rule.consume) used_[i] = true;
                break;
            }
        }
    }

    ChatResponse response;
    response.text = text;
    std::string prompt_side = request.user_text;
    if (request.system_text) prompt_side += *request.system_text;
    response.prompt_tokens = estimate_tokens(prompt_side);
    response.completion_tokens = estimate_tokens(text);
    response.provider_latency_ms = 0;
    calls_.push_back({request, response});
    return response;
}

std::vector<ScriptedMockBackend::Call> ScriptedMockBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::vector<ChatRequest> ScriptedMockBackend::call_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

long ScriptedMockBackend::call_count(const std::string& tag) const {
    std::lock_guard lock(mutex_);
    return static_cast<long>(
        std::count_if(log_.begin(), log_.end(),
                      [&](const ChatRequest& r) { return r.request_tag == tag; }));
}

void ScriptedMockBackend::fail_next(int n) {
    std::lock_guard lock(mutex_);
    fail_next_ = n;
}

// ------------------------------------------------------------ HttpChatBackend

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {}

// Implemented in http_backend.cpp to keep cpp-httplib out of this TU.

// -------------------------------------------------------------------- Gateway

void Gateway::register_backend(const std::string& model_id, std::shared_ptr<ChatBackend> backend) {
    std::lock_guard lock(mutex_);
    backends_[model_id] = std::move(backend);
}

void Gateway::set_retry_policy(RetryPolicy policy) {
    std::lock_guard lock(mutex_);
    retry_ = policy;
}

void Gateway::set_budget_cap(std::optional<double> dollars) {
    std::lock_guard lock(mutex_);
    budget_cap_ = dollars;
}

void Gateway::set_max_in_flight(int n) {
    std::lock_guard lock(mutex_);
    max_in_flight_ = std::max(1, n);
}

void Gateway::set_on_budget_exceeded(std::function<void()> callback) {
    std::lock_guard lock(mutex_);
    on_budget_exceeded_ = std::move(callback);
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    if (request.request_tag.empty()) {
        throw ConfigError("request_tag must be nonempty");
    }

    std::shared_ptr<ChatBackend> backend;
    RetryPolicy retry;
    {
        std::unique_lock lock(mutex_);
        auto it = backends_.find(request.model_id);
        if (it == backends_.end()) {
            throw BackendUnavailable("no backend registered for model " + request.model_id);
        }
        backend = it->second;
        retry = retry_;

        if (budget_cap_) {
            std::string prompt_side = request.user_text;
            if (request.system_text) prompt_side += *request.system_text;
            double estimate = 0.0;
            if (auto pricing = ledger_.pricing_for(request.model_id)) {
                estimate = estimate_tokens(prompt_side) / 1000.0 * pricing->prompt_per_1k +
                           request.max_output_tokens / 1000.0 * pricing->completion_per_1k;
            }
            if (ledger_.total_dollars() + estimate > *budget_cap_) {
                auto callback = on_budget_exceeded_;
                lock.unlock();
                if (callback) callback();
                throw BudgetExceeded("budget cap would be exceeded by the next call");
            }
        }

        slot_available_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
        ++in_flight_;
    }

    ChatResponse response;
    std::exception_ptr failure;
    bool got_response = false;
    int backoff_ms = retry.initial_backoff_ms;
    for (int attempt = 0; attempt < retry.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        try {
            response = backend->complete(request);
            got_response = true;
            break;
        } catch (const std::exception&) {
            failure = std::current_exception();
        }
    }

    {
        std::lock_guard lock(mutex_);
        --in_flight_;
        if (got_response) {
            ledger_.record(request.model_id, request.request_tag, response.prompt_tokens,
                           response.completion_tokens);
        }
    }
    slot_available_.notify_one();

    if (!got_response) {
        try {
            if (failure) std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw BackendUnavailable(std::string("all retries exhausted: ") + e.what());
        }
        throw BackendUnavailable("all retries exhausted");
    }
    return response;
}

}  // namespace promptopt

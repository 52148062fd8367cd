#include "promptopt/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "promptopt/errors.hpp"
#include "promptopt/metaprompt.hpp"

namespace promptopt {

namespace {

std::map<std::string, long> char_ngram_counts(const std::string& s, int n) {
    std::map<std::string, long> counts;
    if (static_cast<int>(s.size()) < n) {
        if (!s.empty()) counts[s] += 1;  // shorter than one n-gram: use the whole string
        return counts;
    }
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
        counts[s.substr(i, n)] += 1;
    }
    return counts;
}

double cosine_of_counts(const std::map<std::string, long>& a, const std::map<std::string, long>& b) {
    double dot = 0.0;
    for (const auto& [gram, count] : a) {
        auto it = b.find(gram);
        if (it != b.end()) dot += static_cast<double>(count) * it->second;
    }
    auto norm = [](const std::map<std::string, long>& counts) {
        double sum = 0.0;
        for (const auto& [gram, count] : counts) sum += static_cast<double>(count) * count;
        return std::sqrt(sum);
    };
    const double denom = norm(a) * norm(b);
    return denom == 0.0 ? 0.0 : dot / denom;
}

}  // namespace

double similarity(const std::string& a, const std::string& b, const SimilarityProvider& provider) {
    if (provider.kind == SimilarityKind::lexical_ngram) {
        const auto ca = char_ngram_counts(a, provider.ngram_size);
        const auto cb = char_ngram_counts(b, provider.ngram_size);
        return std::clamp(cosine_of_counts(ca, cb), 0.0, 1.0);
    }
    if (!provider.embed) {
        throw ConfigError("embedding similarity provider has no embed function");
    }
    const auto va = provider.embed(a);
    const auto vb = provider.embed(b);
    if (va.size() != vb.size() || va.empty()) {
        throw ConfigError("embedding vectors have mismatched or zero size");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    const double cosine = denom == 0.0 ? 0.0 : dot / denom;
    return std::clamp((1.0 + cosine) / 2.0, 0.0, 1.0);
}

void TrajectoryStore::append(TrajectoryEntry entry) {
    const int expected = entries_.empty() ? 0 : entries_.back().step_index + 1;
    if (entry.step_index != expected) {
        throw NonMonotonicStep("expected step " + std::to_string(expected) + ", got " +
                               std::to_string(entry.step_index));
    }
    entries_.push_back(std::move(entry));
}

std::vector<TrajectoryEntry> TrajectoryStore::retrieve_recency(int k) const {
    if (k < 1) throw ConfigError("k must be >= 1");
    const std::size_t take = std::min<std::size_t>(k, entries_.size());
    return {entries_.end() - take, entries_.end()};
}

std::vector<TrajectoryEntry> TrajectoryStore::retrieve_relevance(
    int k, const std::string& current, const SimilarityProvider& provider) const {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::vector<std::pair<double, std::size_t>> scored;  // (similarity, position)
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        scored.emplace_back(similarity(entries_[i].prompt, current, provider), i);
    }
    // Most similar first for selection; earlier step wins ties.
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const std::size_t take = std::min<std::size_t>(k, scored.size());
    std::vector<std::pair<double, std::size_t>> top(scored.begin(), scored.begin() + take);
    // Output ascending by similarity, most similar last; earlier step first on ties.
    std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    std::vector<TrajectoryEntry> out;
    out.reserve(take);
    for (const auto& [sim, pos] : top) out.push_back(entries_[pos]);
    return out;
}

std::vector<TrajectoryEntry> TrajectoryStore::retrieve_importance(int k) const {
    if (k < 1) throw ConfigError("k must be >= 1");
    std::vector<std::size_t> order(entries_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entries_[a].score.value != entries_[b].score.value) {
            return entries_[a].score.value > entries_[b].score.value;
        }
        return a < b;
    });
    const std::size_t take = std::min<std::size_t>(k, order.size());
    std::vector<std::size_t> top(order.begin(), order.begin() + take);
    std::stable_sort(top.begin(), top.end(), [&](std::size_t a, std::size_t b) {
        if (entries_[a].score.value != entries_[b].score.value) {
            return entries_[a].score.value < entries_[b].score.value;
        }
        return a < b;
    });
    std::vector<TrajectoryEntry> out;
    out.reserve(take);
    for (std::size_t pos : top) out.push_back(entries_[pos]);
    return out;
}

std::string trajectory_entry_to_json_line(const TrajectoryEntry& entry) {
    nlohmann::ordered_json record;
    record["step"] = entry.step_index;
    record["prompt"] = entry.prompt;
    record["score"] = entry.score.value;
    record["n_examples"] = entry.score.n_examples;
    if (entry.problems_summary) {
        record["problems_summary"] = *entry.problems_summary;
    }
    return record.dump();
}

TrajectoryEntry trajectory_entry_from_json_line(const std::string& line) {
    nlohmann::json record;
    try {
        record = nlohmann::json::parse(line);
        TrajectoryEntry entry;
        entry.step_index = record.at("step").get<int>();
        entry.prompt = record.at("prompt").get<std::string>();
        entry.score.value = record.at("score").get<double>();
        entry.score.n_examples = record.at("n_examples").get<int>();
        if (record.contains("problems_summary")) {
            entry.problems_summary = record["problems_summary"].get<std::string>();
        }
        return entry;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptState(std::string("bad trajectory line: ") + e.what());
    }
}

void TrajectoryStore::save(const std::string& path) const {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw ConfigError("cannot write trajectory log: " + path);
    for (const auto& entry : entries_) {
        file << trajectory_entry_to_json_line(entry) << '\n';
    }
}

TrajectoryStore TrajectoryStore::load(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw CorruptState("cannot open trajectory log: " + path);
    TrajectoryStore store;
    std::string line;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        store.append(trajectory_entry_from_json_line(line));
    }
    return store;
}

void TrajectoryStore::append_to_file(const std::string& path, const TrajectoryEntry& entry) const {
    std::ofstream file(path, std::ios::app);
    if (!file) throw ConfigError("cannot append to trajectory log: " + path);
    file << trajectory_entry_to_json_line(entry) << '\n';
}

MomentumSummary summarize_momentum(const std::optional<MomentumSummary>& previous,
                                   const std::string& current_problems, int current_step,
                                   Gateway& gateway, const std::string& optimizer_model_id,
                                   double temperature, int max_output_tokens,
                                   const TemplateRegistry& templates) {
    std::map<std::string, std::string> bindings;
    bindings["previous problems"] = previous ? previous->text : "(none)";
    bindings["current problem"] = current_problems;
    const auto rendered = templates.render(TemplateId::summarization_block, bindings);

    ChatRequest request;
    request.model_id = optimizer_model_id;
    request.user_text = rendered.text;
    request.temperature = temperature;
    request.max_output_tokens = max_output_tokens;
    request.request_tag = "momentum";
    const ChatResponse response = gateway.complete(request);

    MomentumSummary summary;
    try {
        summary.text = extract_marked(response.text);
    } catch (const MarkerNotFound&) {
        summary.text = trim(response.text);
    }
    summary.covering_first = previous ? previous->covering_first : current_step;
    summary.covering_last = current_step;
    return summary;
}

}  // namespace promptopt

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/evaluation.hpp"
#include "promptopt/gateway.hpp"

namespace promptopt {

struct TrajectoryEntry {
    int step_index = 0;
    std::string prompt;
    Score score;
    std::optional<std::string> problems_summary;
};

enum class SimilarityKind { lexical_ngram, embedding_api };

/// Text similarity in [0, 1]. The lexical provider is cosine over character
/// n-gram counts (default n=3) and needs no network. The embedding provider
/// maps raw cosine to [0, 1] via (1 + cos) / 2.
struct SimilarityProvider {
    SimilarityKind kind = SimilarityKind::lexical_ngram;
    int ngram_size = 3;
    std::string embedding_model_id;
    /// Supplied by the caller for embedding_api (e.g. an HTTP embedding
    /// client or a test stub).
    std::function<std::vector<double>(const std::string&)> embed;
};

double similarity(const std::string& a, const std::string& b, const SimilarityProvider& provider);

struct MomentumSummary {
    std::string text;
    int covering_first = 0;
    int covering_last = 0;
};

/// Append-only store of per-step (prompt, score) entries.
class TrajectoryStore {
public:
    /// entry.step_index must be exactly one past the last stored index
    /// (0 for an empty store); throws NonMonotonicStep otherwise.
    void append(TrajectoryEntry entry);

    const std::vector<TrajectoryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const TrajectoryEntry& back() const { return entries_.back(); }

    /// Last min(k, size) entries in chronological order.
    std::vector<TrajectoryEntry> retrieve_recency(int k) const;

    /// k entries most similar to `current`, sorted ascending by similarity
    /// (most similar last); ties go to the smaller step_index.
    std::vector<TrajectoryEntry> retrieve_relevance(int k, const std::string& current,
                                                    const SimilarityProvider& provider) const;

    /// Top-k by score, sorted ascending by score; ties go to the smaller
    /// step_index.
    std::vector<TrajectoryEntry> retrieve_importance(int k) const;

    /// JSONL persistence; the log file is the resume point for a run.
    void save(const std::string& path) const;
    static TrajectoryStore load(const std::string& path);
    void append_to_file(const std::string& path, const TrajectoryEntry& entry) const;

private:
    std::vector<TrajectoryEntry> entries_;
};

std::string trajectory_entry_to_json_line(const TrajectoryEntry& entry);
TrajectoryEntry trajectory_entry_from_json_line(const std::string& line);

/// One momentum update: renders the problem-integration template with the
/// previous summary ("(none)" on the first step) and the current problems,
/// asks the optimizer model, and extracts the START/END-wrapped result.
MomentumSummary summarize_momentum(const std::optional<MomentumSummary>& previous,
                                   const std::string& current_problems, int current_step,
                                   Gateway& gateway, const std::string& optimizer_model_id,
                                   double temperature, int max_output_tokens,
                                   const class TemplateRegistry& templates);

}  // namespace promptopt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "promptopt/gateway.hpp"

namespace promptopt {

struct TaskExample {
    std::string example_id;
    std::string question;
    std::string gold_answer;
};

struct DatasetSplit {
    std::vector<TaskExample> train;
    std::vector<TaskExample> valid;
    std::vector<TaskExample> test;
    unsigned long split_seed = 0;
};

enum class MetricKind { exact_match, accuracy, rouge_l };
enum class PromptPosition { before_question, after_question };

MetricKind metric_kind_from_string(const std::string& s);
std::string to_string(MetricKind k);
PromptPosition prompt_position_from_string(const std::string& s);
std::string to_string(PromptPosition p);

struct NormalizationFlags {
    bool trim = true;
    bool collapse_whitespace = true;
    bool case_fold = true;
    bool strip_trailing_period = true;
};

struct TaskSpec {
    std::string name;
    MetricKind metric_kind = MetricKind::exact_match;
    PromptPosition prompt_position = PromptPosition::after_question;
    std::string initial_prompt;
    NormalizationFlags normalization;
    /// Extracts the final answer from free-form model output before scoring.
    /// Empty = use the whole output. Otherwise an ECMAScript regex; the last
    /// match (first capture group if present) is taken.
    std::string answer_extractor_regex;
    std::string task_model_id = "task-model";
    double rouge_error_threshold = 0.9;  // records below this count as wrong
};

struct Score {
    double value = 0.0;  // in [0, 100]
    int n_examples = 0;

    /// Display form used in meta-prompts and reports.
    int rounded() const;
};

struct EvalRecord {
    TaskExample example;
    std::string prediction;  // raw model output
    std::string extracted;   // after the answer extractor
    double metric = 0.0;     // per-example metric in [0, 1]
};

struct EvalResult {
    Score score;
    std::vector<EvalRecord> records;  // dataset order
};

struct ErrorDemo {
    std::string question;
    std::string wrong_prediction;
    std::string gold_answer;
};

/// Deterministic seeded shuffle into ~2:2:6 train/valid/test.
/// Requires at least 10 examples.
DatasetSplit split_dataset(const std::vector<TaskExample>& examples, unsigned long seed);

std::string normalize_answer(const std::string& s, const NormalizationFlags& flags);

/// 1 iff the normalized strings are equal.
int exact_match(const std::string& prediction, const std::string& gold,
                const NormalizationFlags& flags = {});

/// Sentence-level ROUGE-L F1 over case-folded whitespace tokens.
double rouge_l(const std::string& prediction, const std::string& gold);

std::string apply_extractor(const std::string& text, const std::string& extractor_regex);

/// Build the task-model input: prompt before or after the question.
std::string compose_task_input(const std::string& prompt, const std::string& question,
                               PromptPosition position);

/// Score a prompt over examples at temperature 0, one call per example.
EvalResult evaluate_prompt(const std::string& prompt,
                           const std::vector<TaskExample>& examples,
                           const TaskSpec& task_spec, Gateway& gateway,
                           const std::string& request_tag = "task-eval");

/// Examples the prompt got wrong (metric below 1, or below the ROUGE
/// threshold), in dataset order, capped.
std::vector<ErrorDemo> collect_errors(const std::vector<EvalRecord>& records,
                                      const TaskSpec& task_spec, int cap = 3);

/// Load {id, question, answer} records from a JSONL file.
std::vector<TaskExample> load_dataset(const std::string& path);

}  // namespace promptopt

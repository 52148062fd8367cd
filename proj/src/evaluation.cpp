#include "promptopt/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "promptopt/errors.hpp"

namespace promptopt {

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "exact_match") return MetricKind::exact_match;
    if (s == "accuracy") return MetricKind::accuracy;
    if (s == "rouge_l") return MetricKind::rouge_l;
    throw ConfigError("unknown metric kind: " + s);
}

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::exact_match: return "exact_match";
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::rouge_l: return "rouge_l";
    }
    return "exact_match";
}

PromptPosition prompt_position_from_string(const std::string& s) {
    if (s == "before_question") return PromptPosition::before_question;
    if (s == "after_question") return PromptPosition::after_question;
    throw ConfigError("unknown prompt position: " + s);
}

std::string to_string(PromptPosition p) {
    return p == PromptPosition::before_question ? "before_question" : "after_question";
}

int Score::rounded() const { return static_cast<int>(std::llround(value)); }

DatasetSplit split_dataset(const std::vector<TaskExample>& examples, unsigned long seed) {
    if (examples.size() < 10) {
        throw TooFewExamples("split_dataset needs at least 10 examples, got " +
                             std::to_string(examples.size()));
    }
    std::vector<TaskExample> shuffled = examples;
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    const std::size_t n = shuffled.size();
    const std::size_t n_train = n / 5;  // floor(0.2 n)
    const std::size_t n_valid = n / 5;

    DatasetSplit split;
    split.split_seed = seed;
    split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
    split.valid.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_valid);
    split.test.assign(shuffled.begin() + n_train + n_valid, shuffled.end());
    return split;
}

std::string normalize_answer(const std::string& s, const NormalizationFlags& flags) {
    std::string out = s;
    if (flags.case_fold) {
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
    if (flags.collapse_whitespace) {
        std::string collapsed;
        bool in_space = false;
        for (char c : out) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                in_space = true;
            } else {
                if (in_space && !collapsed.empty()) collapsed.push_back(' ');
                in_space = false;
                collapsed.push_back(c);
            }
        }
        out = collapsed;
    } else if (flags.trim) {
        auto first = out.find_first_not_of(" \t\n\r\f\v");
        auto last = out.find_last_not_of(" \t\n\r\f\v");
        out = (first == std::string::npos) ? "" : out.substr(first, last - first + 1);
    }
    if (flags.strip_trailing_period && !out.empty() && out.back() == '.') {
        out.pop_back();
    }
    return out;
}

int exact_match(const std::string& prediction, const std::string& gold,
                const NormalizationFlags& flags) {
    return normalize_answer(prediction, flags) == normalize_answer(gold, flags) ? 1 : 0;
}

namespace {

std::vector<std::string> fold_tokens(const std::string& s) {
    std::vector<std::string> tokens;
    std::istringstream stream(s);
    std::string token;
    while (stream >> token) {
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        tokens.push_back(token);
    }
    return tokens;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            curr[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

}  // namespace

double rouge_l(const std::string& prediction, const std::string& gold) {
    const auto pred_tokens = fold_tokens(prediction);
    const auto gold_tokens = fold_tokens(gold);
    if (pred_tokens.empty() || gold_tokens.empty()) {
        return 0.0;
    }
    const double lcs = static_cast<double>(lcs_length(pred_tokens, gold_tokens));
    if (lcs == 0.0) return 0.0;
    const double precision = lcs / pred_tokens.size();
    const double recall = lcs / gold_tokens.size();
    return 2.0 * precision * recall / (precision + recall);
}

std::string apply_extractor(const std::string& text, const std::string& extractor_regex) {
    if (extractor_regex.empty()) {
        return text;
    }
    std::regex pattern(extractor_regex);
    std::string last_match;
    bool found = false;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern);
         it != std::sregex_iterator(); ++it) {
        const auto& match = *it;
        last_match = match.size() > 1 && match[1].matched ? match[1].str() : match[0].str();
        found = true;
    }
    return found ? last_match : text;
}

std::string compose_task_input(const std::string& prompt, const std::string& question,
                               PromptPosition position) {
    if (prompt.empty()) {
        return question;
    }
    if (position == PromptPosition::before_question) {
        return prompt + "\n" + question;
    }
    return question + "\n" + prompt;
}

namespace {

double per_example_metric(const std::string& extracted, const TaskExample& example,
                          const TaskSpec& spec) {
    switch (spec.metric_kind) {
        case MetricKind::exact_match:
        case MetricKind::accuracy:
            return exact_match(extracted, example.gold_answer, spec.normalization);
        case MetricKind::rouge_l:
            return rouge_l(extracted, example.gold_answer);
    }
    return 0.0;
}

}  // namespace

EvalResult evaluate_prompt(const std::string& prompt, const std::vector<TaskExample>& examples,
                           const TaskSpec& task_spec, Gateway& gateway,
                           const std::string& request_tag) {
    if (examples.empty()) {
        throw EmptyBatch("evaluate_prompt called with no examples");
    }

    EvalResult result;
    result.records.reserve(examples.size());
    double metric_sum = 0.0;
    for (const auto& example : examples) {
        ChatRequest request;
        request.model_id = task_spec.task_model_id;
        request.user_text = compose_task_input(prompt, example.question, task_spec.prompt_position);
        request.temperature = 0.0;
        request.request_tag = request_tag;
        const ChatResponse response = gateway.complete(request);

        EvalRecord record;
        record.example = example;
        record.prediction = response.text;
        record.extracted = apply_extractor(response.text, task_spec.answer_extractor_regex);
        record.metric = per_example_metric(record.extracted, example, task_spec);
        metric_sum += record.metric;
        result.records.push_back(std::move(record));
    }

    result.score.value = 100.0 * metric_sum / examples.size();
    result.score.n_examples = static_cast<int>(examples.size());
    return result;
}

std::vector<ErrorDemo> collect_errors(const std::vector<EvalRecord>& records,
                                      const TaskSpec& task_spec, int cap) {
    const double threshold =
        task_spec.metric_kind == MetricKind::rouge_l ? task_spec.rouge_error_threshold : 1.0;
    std::vector<ErrorDemo> demos;
    for (const auto& record : records) {
        if (static_cast<int>(demos.size()) >= cap) break;
        if (record.metric < threshold) {
            demos.push_back({record.example.question, record.prediction,
                             record.example.gold_answer});
        }
    }
    return demos;
}

std::vector<TaskExample> load_dataset(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw ConfigError("cannot open dataset file: " + path);
    }
    std::vector<TaskExample> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        TaskExample example;
        example.example_id = record.at("id").get<std::string>();
        example.question = record.at("question").get<std::string>();
        example.gold_answer = record.at("answer").get<std::string>();
        examples.push_back(std::move(example));
    }
    return examples;
}

}  // namespace promptopt

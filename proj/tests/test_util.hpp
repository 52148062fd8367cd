#pragma once

#include <memory>
#include <string>
#include <vector>

#include "promptopt/evaluation.hpp"
#include "promptopt/gateway.hpp"
#include "promptopt/metaprompt.hpp"
#include "promptopt/optimizer.hpp"

namespace promptopt::testing {

inline std::string template_dir() { return std::string(PROMPTOPT_SOURCE_DIR) + "/templates"; }

inline const TemplateRegistry& templates() {
    static const TemplateRegistry registry = TemplateRegistry::load(template_dir());
    return registry;
}

inline std::vector<TaskExample> make_examples(const std::string& prefix, int n,
                                              const std::string& gold = "ok") {
    std::vector<TaskExample> examples;
    for (int i = 0; i < n; ++i) {
        const std::string id = prefix + std::to_string(i);
        examples.push_back({id, "question " + id, gold});
    }
    return examples;
}

inline DatasetSplit make_split(int n_train, int n_valid, int n_test) {
    DatasetSplit split;
    split.train = make_examples("train", n_train);
    split.valid = make_examples("valid", n_valid);
    split.test = make_examples("test", n_test);
    return split;
}

/// Deterministic script for a full mock run: at step t the optimizer emits
/// candidates "cand s<t> k<0..7>"; candidate k scores k/8 on the batch, so
/// k=7 always wins; the winner's validation score follows val_ok(t) correct
/// answers. Gold answers are all "ok"; the default mock answer is "no".
struct LoopFixture {
    std::string initial_prompt = "initial prompt";
    int steps = 6;
    int candidates = 8;
    int batch_size = 8;
    int valid_size = 16;
    /// Correct validation answers for the winner of step t (0-based).
    std::vector<int> val_ok;
    /// Correct validation answers for the initial prompt.
    int initial_val_ok = 0;

    std::string winner(int t) const { return "cand s" + std::to_string(t) + " k7"; }
    std::string candidate(int t, int k) const {
        return "cand s" + std::to_string(t) + " k" + std::to_string(k);
    }
    std::string current_prompt(int t) const { return t == 0 ? initial_prompt : winner(t - 1); }

    std::vector<MockRule> rules() const {
        std::vector<MockRule> out;
        if (initial_val_ok > 0) {
            for (int i = 0; i < initial_val_ok; ++i) {
                out.push_back({"task-eval", initial_prompt, "ok", true});
            }
        }
        for (int t = 0; t < steps; ++t) {
            const std::string anchor = "The current prompt is:\n" + current_prompt(t) + "\n";
            for (int k = 0; k < candidates; ++k) {
                out.push_back({"candidate-gen", anchor,
                               "START " + candidate(t, k) + " END", true});
            }
            for (int k = 0; k < candidates; ++k) {
                const std::string cand = candidate(t, k);
                const int batch_ok = k;  // batch score = k / batch_size
                for (int i = 0; i < batch_ok; ++i) {
                    out.push_back({"task-eval", cand, "ok", true});
                }
                if (k == candidates - 1) {
                    // Winner: finish the batch with one wrong answer, then
                    // supply the validation answers.
                    out.push_back({"task-eval", cand, "no", true});
                    const int ok = t < static_cast<int>(val_ok.size()) ? val_ok[t] : 0;
                    for (int i = 0; i < ok; ++i) {
                        out.push_back({"task-eval", cand, "ok", true});
                    }
                }
            }
        }
        return out;
    }
};

struct MockRun {
    std::shared_ptr<ScriptedMockBackend> mock;
    std::unique_ptr<Gateway> gateway;
    TaskSpec task;
};

inline MockRun make_mock_run(const std::vector<MockRule>& rules) {
    MockRun run;
    run.mock = std::make_shared<ScriptedMockBackend>("no");
    for (const auto& rule : rules) run.mock->add_rule(rule);
    run.gateway = std::make_unique<Gateway>();
    run.gateway->register_backend("task-model", run.mock);
    run.gateway->register_backend("optimizer-model", run.mock);
    run.gateway->set_retry_policy({3, 0});
    run.task.name = "fixture";
    run.task.metric_kind = MetricKind::exact_match;
    run.task.prompt_position = PromptPosition::after_question;
    run.task.task_model_id = "task-model";
    return run;
}

inline OptimizerConfig gpo_fixture_config() {
    OptimizerConfig config = make_baseline("GPO");
    config.schedule.c_max = 10;
    config.schedule.horizon = 6;
    config.optimizer_model_id = "optimizer-model";
    return config;
}

}  // namespace promptopt::testing

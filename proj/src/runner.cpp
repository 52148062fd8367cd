#include "promptopt/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "promptopt/errors.hpp"

namespace promptopt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

EditBudgetSchedule parse_schedule(const json& node) {
    reject_unknown_keys(node, {"kind", "c_max", "floor_fraction", "warmup", "warmup_fraction",
                               "horizon"},
                        "schedule");
    EditBudgetSchedule schedule;
    schedule.kind = schedule_kind_from_string(node.value("kind", "none"));
    schedule.c_max = node.value("c_max", 1);
    schedule.floor_fraction = node.value("floor_fraction", 0.2);
    schedule.warmup = node.value("warmup", false);
    schedule.warmup_fraction = node.value("warmup_fraction", 0.05);
    schedule.horizon = node.value("horizon", 1);
    if (schedule.c_max < 1 || schedule.floor_fraction <= 0.0 || schedule.floor_fraction > 1.0 ||
        schedule.warmup_fraction < 0.0 || schedule.warmup_fraction >= 1.0) {
        throw ConfigError("schedule parameters out of range");
    }
    return schedule;
}

OptimizerConfig parse_optimizer(const json& node) {
    reject_unknown_keys(node,
                        {"name", "direction", "momentum", "refinement", "update_template",
                         "gradient_template", "momentum_template", "candidates_per_step",
                         "trajectory_k", "task_examples_in_meta", "epochs", "batch_size",
                         "optimizer_temperature", "optimizer_max_output_tokens",
                         "plateau_patience", "extraction_retries", "hard_edit_constraint"},
                        "optimizer");
    OptimizerConfig config;
    if (node.contains("name")) {
        config = make_baseline(node["name"].get<std::string>());
    }
    if (node.contains("direction")) {
        config.direction = direction_from_string(node["direction"].get<std::string>());
    }
    if (node.contains("momentum")) {
        config.momentum = momentum_from_string(node["momentum"].get<std::string>());
    }
    if (node.contains("refinement")) {
        config.refinement = refinement_from_string(node["refinement"].get<std::string>());
    }
    if (node.contains("update_template")) {
        config.update_template = template_id_from_string(node["update_template"].get<std::string>());
    }
    if (node.contains("gradient_template")) {
        config.gradient_template =
            template_id_from_string(node["gradient_template"].get<std::string>());
    }
    if (node.contains("momentum_template")) {
        config.momentum_template =
            template_id_from_string(node["momentum_template"].get<std::string>());
    }
    config.candidates_per_step = node.value("candidates_per_step", config.candidates_per_step);
    config.trajectory_k = node.value("trajectory_k", config.trajectory_k);
    config.task_examples_in_meta =
        node.value("task_examples_in_meta", config.task_examples_in_meta);
    config.epochs = node.value("epochs", config.epochs);
    config.batch_size = node.value("batch_size", config.batch_size);
    config.optimizer_temperature =
        node.value("optimizer_temperature", config.optimizer_temperature);
    config.optimizer_max_output_tokens =
        node.value("optimizer_max_output_tokens", config.optimizer_max_output_tokens);
    config.plateau_patience = node.value("plateau_patience", config.plateau_patience);
    config.extraction_retries = node.value("extraction_retries", config.extraction_retries);
    config.hard_edit_constraint =
        node.value("hard_edit_constraint", config.hard_edit_constraint);
    return config;
}

BackendSettings parse_backend(const json& node) {
    reject_unknown_keys(node,
                        {"kind", "task_model", "optimizer_model", "endpoint", "api_key_env",
                         "pricing", "budget_cap_dollars", "mock_script",
                         "mock_default_response", "retry", "max_in_flight"},
                        "backend");
    BackendSettings settings;
    settings.kind = node.value("kind", "mock");
    if (settings.kind != "mock" && settings.kind != "http") {
        throw ConfigError("backend kind must be \"mock\" or \"http\"");
    }
    settings.task_model_id = node.value("task_model", settings.task_model_id);
    settings.optimizer_model_id = node.value("optimizer_model", settings.optimizer_model_id);
    settings.endpoint_url = node.value("endpoint", std::string{});
    settings.api_key_env = node.value("api_key_env", settings.api_key_env);
    if (node.contains("pricing")) {
        for (const auto& [model, rates] : node["pricing"].items()) {
            reject_unknown_keys(rates, {"prompt_per_1k", "completion_per_1k"},
                                "backend.pricing." + model);
            settings.pricing[model] = {rates.value("prompt_per_1k", 0.0),
                                       rates.value("completion_per_1k", 0.0)};
        }
    }
    if (node.contains("budget_cap_dollars")) {
        settings.budget_cap_dollars = node["budget_cap_dollars"].get<double>();
    }
    settings.mock_script_path = node.value("mock_script", std::string{});
    settings.mock_default_response =
        node.value("mock_default_response", settings.mock_default_response);
    if (node.contains("retry")) {
        reject_unknown_keys(node["retry"], {"max_attempts", "initial_backoff_ms"},
                            "backend.retry");
        settings.retry.max_attempts = node["retry"].value("max_attempts", 3);
        settings.retry.initial_backoff_ms = node["retry"].value("initial_backoff_ms", 1000);
    }
    settings.max_in_flight = node.value("max_in_flight", 8);
    return settings;
}

TaskSpec parse_task(const json& node) {
    reject_unknown_keys(node,
                        {"name", "metric", "prompt_position", "initial_prompt", "extractor",
                         "rouge_error_threshold"},
                        "task");
    TaskSpec task;
    task.name = node.value("name", "task");
    task.metric_kind = metric_kind_from_string(node.value("metric", "exact_match"));
    task.prompt_position =
        prompt_position_from_string(node.value("prompt_position", "after_question"));
    task.initial_prompt = node.value("initial_prompt", "Let's think step by step.");
    task.answer_extractor_regex = node.value("extractor", std::string{});
    task.rouge_error_threshold = node.value("rouge_error_threshold", 0.9);
    return task;
}

std::vector<MockRule> load_mock_script(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open mock script: " + path);
    json script;
    try {
        script = json::parse(file);
    } catch (const json::exception& e) {
        throw ConfigError("bad mock script JSON: " + std::string(e.what()));
    }
    std::vector<MockRule> rules;
    for (const auto& node : script) {
        reject_unknown_keys(node, {"tag_contains", "user_text_contains", "response", "consume"},
                            "mock script rule");
        MockRule rule;
        rule.tag_contains = node.value("tag_contains", std::string{});
        rule.user_text_contains = node.value("user_text_contains", std::string{});
        rule.response_text = node.at("response").get<std::string>();
        rule.consume = node.value("consume", true);
        rules.push_back(std::move(rule));
    }
    return rules;
}

struct RunContext {
    RunConfig config;
    Gateway gateway;
    std::shared_ptr<ScriptedMockBackend> mock;  // null for http
    TemplateRegistry templates;
    DatasetSplit split;
};

std::unique_ptr<RunContext> build_context(RunConfig config) {
    auto context = std::make_unique<RunContext>();

    const std::string template_dir =
        config.template_dir.empty() ? default_template_dir() : config.template_dir;
    context->templates = TemplateRegistry::load(template_dir);

    const auto examples = load_dataset(config.dataset_path);
    // Subordinate seeds derive from the top-level seed by fixed offsets.
    context->split = split_dataset(examples, config.seed + 1);

    if (config.backend.kind == "mock") {
        auto mock = std::make_shared<ScriptedMockBackend>(config.backend.mock_default_response);
        if (!config.backend.mock_script_path.empty()) {
            for (auto& rule : load_mock_script(config.backend.mock_script_path)) {
                mock->add_rule(std::move(rule));
            }
        }
        context->mock = mock;
        context->gateway.register_backend(config.backend.task_model_id, mock);
        context->gateway.register_backend(config.backend.optimizer_model_id, mock);
        context->gateway.set_retry_policy({config.backend.retry.max_attempts, 0});
    } else {
        HttpBackendConfig http;
        http.endpoint_url = config.backend.endpoint_url;
        http.api_key_env = config.backend.api_key_env;
        auto backend = std::make_shared<HttpChatBackend>(http);
        context->gateway.register_backend(config.backend.task_model_id, backend);
        context->gateway.register_backend(config.backend.optimizer_model_id, backend);
        context->gateway.set_retry_policy(config.backend.retry);
    }
    for (const auto& [model, pricing] : config.backend.pricing) {
        context->gateway.ledger().set_pricing(model, pricing);
    }
    context->gateway.set_budget_cap(config.backend.budget_cap_dollars);
    context->gateway.set_max_in_flight(config.backend.max_in_flight);

    config.task.task_model_id = config.backend.task_model_id;
    config.optimizer.optimizer_model_id = config.backend.optimizer_model_id;
    context->config = std::move(config);
    return context;
}

std::string format_double(double value) {
    std::ostringstream out;
    out << std::setprecision(10) << value;
    return out.str();
}

void write_curve(const std::string& path, const std::vector<StepRecord>& records) {
    std::ofstream file(path, std::ios::trunc);
    file << "step\tvalidation_score\tcumulative_tokens\tcumulative_dollars\n";
    for (const auto& record : records) {
        file << record.step << '\t' << format_double(record.validation_score) << '\t'
             << record.cumulative_tokens << '\t' << format_double(record.cumulative_dollars)
             << '\n';
    }
}

void write_report(const std::string& path, const RunConfig& config,
                  const std::vector<StepRecord>& records, const ScoredPrompt& best,
                  double test_score, const std::string& stop_reason, const CostLedger& ledger) {
    std::ofstream file(path, std::ios::trunc);
    file << "method: " << config.optimizer.method_name << "\n";
    file << "task: " << config.task.name << "\n\n";
    file << "step\tbatch_score\tvalidation_score\tcumulative_dollars\tselected_prompt\n";
    for (const auto& record : records) {
        file << record.step << '\t' << format_double(record.batch_score) << '\t'
             << format_double(record.validation_score) << '\t'
             << format_double(record.cumulative_dollars) << '\t' << record.selected_prompt
             << '\n';
    }
    file << "\nbest prompt: " << best.prompt << "\n";
    file << "best validation score: " << format_double(best.score.value) << "\n";
    file << "test score: " << format_double(test_score) << "\n";
    file << "stop reason: " << stop_reason << "\n";
    file << "total tokens: " << ledger.total_tokens() << "\n";
    file << "total dollars: " << format_double(ledger.total_dollars()) << "\n\n";
    file << "cost by model and tag:\n";
    file << "model\ttag\tcalls\tprompt_tokens\tcompletion_tokens\tdollars\n";
    for (const auto& row : ledger.report()) {
        file << row.model_id << '\t' << row.request_tag << '\t' << row.calls << '\t'
             << row.prompt_tokens << '\t' << row.completion_tokens << '\t'
             << format_double(row.dollars) << '\n';
    }
}

void write_summary(const std::string& path, const RunConfig& config, const RunResult& result,
                   const CostLedger& ledger, bool completed) {
    ordered_json summary;
    summary["method"] = config.optimizer.method_name;
    summary["task"] = config.task.name;
    summary["best_prompt"] = result.best.prompt;
    summary["best_validation_score"] = result.best.score.value;
    summary["test_score"] = result.test_score;
    summary["stop_reason"] = result.stop_reason;
    summary["steps"] = result.steps_taken;
    summary["total_tokens"] = ledger.total_tokens();
    summary["total_dollars"] = ledger.total_dollars();
    summary["completed"] = completed;
    std::ofstream file(path, std::ios::trunc);
    file << summary.dump(2) << '\n';
}

std::vector<StepRecord> step_records_from_json(const json& node) {
    std::vector<StepRecord> records;
    for (const auto& item : node) {
        StepRecord record;
        record.step = item.at("step").get<int>();
        record.selected_prompt = item.at("selected_prompt").get<std::string>();
        record.batch_score = item.at("batch_score").get<double>();
        record.validation_score = item.at("validation_score").get<double>();
        record.cumulative_dollars = item.at("cumulative_dollars").get<double>();
        record.cumulative_tokens = item.at("cumulative_tokens").get<long>();
        records.push_back(std::move(record));
    }
    return records;
}

ordered_json step_records_to_json(const std::vector<StepRecord>& records) {
    ordered_json out = ordered_json::array();
    for (const auto& record : records) {
        ordered_json item;
        item["step"] = record.step;
        item["selected_prompt"] = record.selected_prompt;
        item["batch_score"] = record.batch_score;
        item["validation_score"] = record.validation_score;
        item["cumulative_dollars"] = record.cumulative_dollars;
        item["cumulative_tokens"] = record.cumulative_tokens;
        out.push_back(std::move(item));
    }
    return out;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(file);
    } catch (const json::exception& e) {
        throw ConfigError("bad config JSON: " + std::string(e.what()));
    }
    reject_unknown_keys(root,
                        {"task", "dataset", "optimizer", "schedule", "backend", "seed",
                         "output_dir", "template_dir"},
                        "config");

    RunConfig config;
    config.task = parse_task(root.value("task", json::object()));
    config.dataset_path = root.at("dataset").get<std::string>();
    config.optimizer = parse_optimizer(root.value("optimizer", json::object()));
    if (root.contains("schedule")) {
        config.optimizer.schedule = parse_schedule(root["schedule"]);
    }
    config.backend = parse_backend(root.value("backend", json::object()));
    config.seed = root.value("seed", 0UL);
    config.output_dir = root.at("output_dir").get<std::string>();
    config.template_dir = root.value("template_dir", std::string{});
    return config;
}

RunArtifacts artifacts_in(const std::string& output_dir) {
    return {
        output_dir + "/config.json",     output_dir + "/trajectory.jsonl",
        output_dir + "/state.json",      output_dir + "/report.txt",
        output_dir + "/curve.tsv",       output_dir + "/summary.json",
    };
}

std::string run_state_to_json(const RunState& state, const CostLedger& ledger) {
    ordered_json root;
    root["step"] = state.step;
    root["best_prompt"] = state.best.prompt;
    root["best_score"] = state.best.score.value;
    root["best_n_examples"] = state.best.score.n_examples;
    root["seed"] = state.seed;
    root["plateau_streak"] = state.plateau_streak;
    root["reflection_skips"] = state.reflection_skips;
    root["extraction_fallbacks"] = state.extraction_fallbacks;
    if (state.stop_reason) root["stop_reason"] = *state.stop_reason;
    if (state.momentum_summary) {
        root["momentum_summary"] = {{"text", state.momentum_summary->text},
                                    {"covering_first", state.momentum_summary->covering_first},
                                    {"covering_last", state.momentum_summary->covering_last}};
    }
    ordered_json rows = ordered_json::array();
    for (const auto& row : ledger.report()) {
        rows.push_back({{"model", row.model_id},
                        {"tag", row.request_tag},
                        {"calls", row.calls},
                        {"prompt_tokens", row.prompt_tokens},
                        {"completion_tokens", row.completion_tokens},
                        {"dollars", row.dollars}});
    }
    root["ledger"] = rows;
    return root.dump(2);
}

void run_state_from_json(const std::string& text, RunState& state, CostLedger& ledger) {
    json root;
    try {
        root = json::parse(text);
        state.step = root.at("step").get<int>();
        state.best.prompt = root.at("best_prompt").get<std::string>();
        state.best.score.value = root.at("best_score").get<double>();
        state.best.score.n_examples = root.at("best_n_examples").get<int>();
        state.seed = root.at("seed").get<unsigned long>();
        state.plateau_streak = root.at("plateau_streak").get<int>();
        state.reflection_skips = root.value("reflection_skips", 0);
        state.extraction_fallbacks = root.value("extraction_fallbacks", 0);
        if (root.contains("stop_reason")) {
            state.stop_reason = root["stop_reason"].get<std::string>();
        }
        if (root.contains("momentum_summary")) {
            MomentumSummary summary;
            summary.text = root["momentum_summary"].at("text").get<std::string>();
            summary.covering_first = root["momentum_summary"].at("covering_first").get<int>();
            summary.covering_last = root["momentum_summary"].at("covering_last").get<int>();
            state.momentum_summary = summary;
        }
        for (const auto& row_node : root.at("ledger")) {
            LedgerRow row;
            row.model_id = row_node.at("model").get<std::string>();
            row.request_tag = row_node.at("tag").get<std::string>();
            row.calls = row_node.at("calls").get<long>();
            row.prompt_tokens = row_node.at("prompt_tokens").get<long>();
            row.completion_tokens = row_node.at("completion_tokens").get<long>();
            row.dollars = row_node.at("dollars").get<double>();
            ledger.restore_row(row);
        }
    } catch (const json::exception& e) {
        throw CorruptState(std::string("bad state file: ") + e.what());
    }
}

namespace {

// Shared tail of run/resume: iterate to completion, persisting after each step.
int drive_run(RunContext& context, RunState& state, std::vector<StepRecord> records,
              std::ostream& out) {
    const auto paths = artifacts_in(context.config.output_dir);
    Optimizer optimizer(context.config.optimizer, context.config.task, context.split,
                        context.gateway, context.templates);

    context.gateway.set_on_budget_exceeded([&] {
        std::ofstream file(paths.state_file, std::ios::trunc);
        file << run_state_to_json(state, context.gateway.ledger());
    });

    const auto persist = [&](const RunState& current, const StepRecord& record) {
        if (record.step > 0 || current.trajectory.size() == 1) {
            current.trajectory.append_to_file(paths.trajectory_log,
                                              current.trajectory.back());
        }
        if (record.step > 0) records.push_back(record);
        ordered_json state_json = json::parse(run_state_to_json(current, context.gateway.ledger()));
        state_json["step_records"] = step_records_to_json(records);
        std::ofstream file(paths.state_file, std::ios::trunc);
        file << state_json.dump(2) << '\n';
    };

    if (state.step == 0 && state.trajectory.empty()) {
        state = optimizer.init_state(context.config.task.initial_prompt, context.config.seed);
        StepRecord seed_record;
        seed_record.step = 0;
        seed_record.selected_prompt = state.best.prompt;
        seed_record.validation_score = state.best.score.value;
        seed_record.cumulative_dollars = context.gateway.ledger().total_dollars();
        seed_record.cumulative_tokens = context.gateway.ledger().total_tokens();
        persist(state, seed_record);
    }
    RunResult result = optimizer.resume(state, persist);

    {
        // Final state carries the stop reason.
        ordered_json state_json = json::parse(run_state_to_json(state, context.gateway.ledger()));
        state_json["step_records"] = step_records_to_json(records);
        std::ofstream file(paths.state_file, std::ios::trunc);
        file << state_json.dump(2) << '\n';
    }

    // The curve includes the step-0 (initial prompt) row.
    std::vector<StepRecord> curve_rows;
    {
        StepRecord first;
        first.step = 0;
        first.selected_prompt = result.trajectory.entries().front().prompt;
        first.validation_score = result.trajectory.entries().front().score.value;
        curve_rows.push_back(first);
        for (const auto& record : records) curve_rows.push_back(record);
    }
    write_curve(paths.curve_file, curve_rows);
    write_report(paths.report_file, context.config, records, result.best, result.test_score,
                 result.stop_reason, context.gateway.ledger());
    write_summary(paths.summary_file, context.config, result, context.gateway.ledger(),
                  result.stop_reason != "budget");

    out << "run finished: " << result.stop_reason << ", best validation score "
        << format_double(result.best.score.value) << ", test score "
        << format_double(result.test_score) << "\n";
    return 0;
}

}  // namespace

int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        RunConfig config = load_run_config(config_path);
        fs::create_directories(config.output_dir);
        auto context = build_context(config);

        const auto paths = artifacts_in(config.output_dir);
        fs::copy_file(config_path, paths.config_copy, fs::copy_options::overwrite_existing);
        std::ofstream(paths.trajectory_log, std::ios::trunc);

        RunState state;  // fresh
        return drive_run(*context, state, {}, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_resume(const std::string& output_dir, std::ostream& out, std::ostream& err) {
    try {
        const auto paths = artifacts_in(output_dir);
        if (!fs::exists(paths.config_copy) || !fs::exists(paths.state_file)) {
            throw CorruptState("no prior run in " + output_dir);
        }
        RunConfig config = load_run_config(paths.config_copy);
        config.output_dir = output_dir;  // the run may have been moved
        auto context = build_context(config);

        RunState state;
        {
            std::ifstream file(paths.state_file);
            std::ostringstream buffer;
            buffer << file.rdbuf();
            run_state_from_json(buffer.str(), state, context->gateway.ledger());
        }
        state.trajectory = TrajectoryStore::load(paths.trajectory_log);
        if (state.trajectory.size() != static_cast<std::size_t>(state.step) + 1) {
            throw CorruptState("trajectory log and state file disagree on step count");
        }

        std::vector<StepRecord> records;
        {
            std::ifstream file(paths.state_file);
            json root = json::parse(file);
            if (root.contains("step_records")) {
                records = step_records_from_json(root["step_records"]);
            }
        }

        if (state.stop_reason) {
            out << "already converged (" << *state.stop_reason << ")\n";
            return 0;
        }
        return drive_run(*context, state, std::move(records), out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_compare(const std::vector<std::string>& output_dirs, std::ostream& out,
                std::ostream& err) {
    try {
        if (output_dirs.size() < 2) {
            throw MissingRun("compare needs at least 2 completed runs");
        }
        struct Entry {
            std::string method;
            std::string task;
            double test_score;
            long tokens;
            double dollars;
        };
        std::vector<Entry> entries;
        std::set<std::string> tasks;
        for (const auto& dir : output_dirs) {
            const auto paths = artifacts_in(dir);
            std::ifstream file(paths.summary_file);
            if (!file) throw MissingRun("no summary in " + dir);
            json summary = json::parse(file);
            entries.push_back({summary.at("method").get<std::string>(),
                               summary.at("task").get<std::string>(),
                               summary.at("test_score").get<double>(),
                               summary.at("total_tokens").get<long>(),
                               summary.at("total_dollars").get<double>()});
            tasks.insert(entries.back().task);
        }
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.method < b.method; });

        out << "method";
        for (const auto& task : tasks) out << '\t' << task;
        out << "\ttokens\tdollars\n";
        for (const auto& entry : entries) {
            out << entry.method;
            for (const auto& task : tasks) {
                out << '\t';
                if (task == entry.task) out << format_double(entry.test_score);
            }
            out << '\t' << entry.tokens << '\t' << format_double(entry.dollars) << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_templates(const std::string& template_dir, std::ostream& out, std::ostream& err) {
    try {
        const std::string dir = template_dir.empty() ? default_template_dir() : template_dir;
        const auto registry = TemplateRegistry::load(dir);
        for (const auto id : all_template_ids()) {
            out << "=== " << to_string(id) << " ===\n" << registry.body(id) << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_schedule(const EditBudgetSchedule& schedule, std::ostream& out, std::ostream& err) {
    try {
        out << "step\tbudget\n";
        for (int t = 0; t < schedule.horizon; ++t) {
            const auto budget = constraint_at(schedule, t);
            out << t << '\t' << (budget ? std::to_string(*budget) : "-") << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace promptopt

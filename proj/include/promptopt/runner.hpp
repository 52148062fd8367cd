#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "promptopt/optimizer.hpp"

namespace promptopt {

struct BackendSettings {
    std::string kind = "mock";  // "mock" or "http"
    std::string task_model_id = "task-model";
    std::string optimizer_model_id = "optimizer-model";
    std::string endpoint_url;
    std::string api_key_env = "PROMPTOPT_API_KEY";
    std::map<std::string, ModelPricing> pricing;
    std::optional<double> budget_cap_dollars;
    std::string mock_script_path;  // JSON rule list for the mock backend
    std::string mock_default_response = "START improved prompt END";
    RetryPolicy retry;
    int max_in_flight = 8;
};

/// Parsed, validated run configuration. Unknown keys anywhere in the file
/// are rejected with a diagnostic naming the key.
struct RunConfig {
    TaskSpec task;
    std::string dataset_path;
    OptimizerConfig optimizer;
    BackendSettings backend;
    unsigned long seed = 0;
    std::string output_dir;
    std::string template_dir;  // empty = built-in default
};

RunConfig load_run_config(const std::string& path);

/// Executes a full run: writes trajectory.jsonl, state.json, report.txt,
/// curve.tsv and summary.json into the output directory.
int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err);

/// Continues an interrupted run from its output directory.
int cmd_resume(const std::string& output_dir, std::ostream& out, std::ostream& err);

/// Method x task table of test scores with token/dollar columns, built from
/// completed runs' summary files.
int cmd_compare(const std::vector<std::string>& output_dirs, std::ostream& out,
                std::ostream& err);

/// Dumps every template body.
int cmd_templates(const std::string& template_dir, std::ostream& out, std::ostream& err);

/// Prints a budget curve for the given parameters, one "step\tbudget" row.
int cmd_schedule(const EditBudgetSchedule& schedule, std::ostream& out, std::ostream& err);

/// Paths of the files a run writes into its output directory.
struct RunArtifacts {
    std::string config_copy;
    std::string trajectory_log;
    std::string state_file;
    std::string report_file;
    std::string curve_file;
    std::string summary_file;
};
RunArtifacts artifacts_in(const std::string& output_dir);

std::string run_state_to_json(const RunState& state, const CostLedger& ledger);
void run_state_from_json(const std::string& text, RunState& state, CostLedger& ledger);

}  // namespace promptopt

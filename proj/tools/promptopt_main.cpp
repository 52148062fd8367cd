#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promptopt/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"LLM-driven task prompt optimizer"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Execute an optimization run from a config file");
    run->add_option("config", config_path, "Run configuration JSON")->required();

    std::string output_dir;
    auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
    resume->add_option("output_dir", output_dir, "Output directory of the prior run")->required();

    std::vector<std::string> run_dirs;
    auto* compare = app.add_subcommand("compare", "Tabulate test scores across completed runs");
    compare->add_option("runs", run_dirs, "Output directories of completed runs")->required();

    std::string template_dir;
    auto* templates = app.add_subcommand("templates", "Dump the meta-prompt template bodies");
    templates->add_option("--dir", template_dir, "Template directory override");

    auto* schedule = app.add_subcommand("schedule", "Print a word-budget curve");
    std::string kind = "cosine_decay";
    int c_max = 50;
    int horizon = 10;
    double floor_fraction = 0.2;
    bool warmup = false;
    double warmup_fraction = 0.05;
    schedule->add_option("--kind", kind, "none|fixed|linear_decay|cosine_decay");
    schedule->add_option("--c-max", c_max, "Maximum word budget");
    schedule->add_option("--horizon", horizon, "Total planned steps");
    schedule->add_option("--floor", floor_fraction, "Terminal fraction of c_max");
    schedule->add_flag("--warmup", warmup, "Enable linear warmup");
    schedule->add_option("--warmup-fraction", warmup_fraction, "Warmup fraction of horizon");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return promptopt::cmd_run(config_path, std::cout, std::cerr);
        }
        if (resume->parsed()) {
            return promptopt::cmd_resume(output_dir, std::cout, std::cerr);
        }
        if (compare->parsed()) {
            return promptopt::cmd_compare(run_dirs, std::cout, std::cerr);
        }
        if (templates->parsed()) {
            return promptopt::cmd_templates(template_dir, std::cout, std::cerr);
        }
        if (schedule->parsed()) {
            promptopt::EditBudgetSchedule s;
            s.kind = promptopt::schedule_kind_from_string(kind);
            s.c_max = c_max;
            s.horizon = horizon;
            s.floor_fraction = floor_fraction;
            s.warmup = warmup;
            s.warmup_fraction = warmup_fraction;
            return promptopt::cmd_schedule(s, std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "promptopt/evaluation.hpp"
#include "promptopt/gateway.hpp"
#include "promptopt/metaprompt.hpp"
#include "promptopt/schedule.hpp"
#include "promptopt/trajectory.hpp"

namespace promptopt {

enum class Direction { P, PM, PR, PMR };
enum class MomentumKind { none, summarization, recency, relevance, importance };
enum class RefinementKind { editing, generation };

Direction direction_from_string(const std::string& s);
std::string to_string(Direction d);
MomentumKind momentum_from_string(const std::string& s);
std::string to_string(MomentumKind m);
RefinementKind refinement_from_string(const std::string& s);
std::string to_string(RefinementKind r);

struct OptimizerConfig {
    std::string method_name = "custom";
    Direction direction = Direction::PM;
    MomentumKind momentum = MomentumKind::relevance;
    EditBudgetSchedule schedule;
    RefinementKind refinement = RefinementKind::generation;

    TemplateId update_template = TemplateId::gpo_update;
    std::optional<TemplateId> gradient_template;
    std::optional<TemplateId> momentum_template;

    int candidates_per_step = 8;
    int trajectory_k = 7;
    int task_examples_in_meta = 3;
    int epochs = 3;
    int batch_size = 8;
    double optimizer_temperature = 1.0;
    int optimizer_max_output_tokens = 1024;
    std::string optimizer_model_id = "optimizer-model";
    /// 0 = one epoch's worth of steps, resolved at run start.
    int plateau_patience = 0;
    /// Marker-extraction retries before falling back to the whole text.
    int extraction_retries = 3;
    /// Reject and resample candidates that exceed the word budget
    /// (the budget is otherwise only an instruction in the meta-prompt).
    bool hard_edit_constraint = false;

    SimilarityProvider similarity;
};

/// Table of method presets: GPO, APE, APO, OPRO, PE2, SGDM.
OptimizerConfig make_baseline(const std::string& name);

struct ScoredPrompt {
    std::string prompt;
    Score score;
};

struct RunState {
    int step = 0;  // completed optimization steps
    ScoredPrompt best;
    TrajectoryStore trajectory;
    std::optional<MomentumSummary> momentum_summary;
    unsigned long seed = 0;
    std::optional<std::string> stop_reason;
    int plateau_streak = 0;
    int reflection_skips = 0;   // steps where no wrong examples existed
    int extraction_fallbacks = 0;
};

struct StepRecord {
    int step = 0;
    std::string selected_prompt;
    double batch_score = 0.0;
    double validation_score = 0.0;
    double cumulative_dollars = 0.0;
    long cumulative_tokens = 0;
};

struct RunResult {
    ScoredPrompt best;
    double test_score = 0.0;
    TrajectoryStore trajectory;
    std::vector<StepRecord> step_records;
    std::string stop_reason;
    int steps_taken = 0;
};

/// Argmax by score; ties go to the lowest candidate index.
ScoredPrompt select_best(const std::vector<std::string>& candidates,
                         const std::vector<Score>& scores);

class Optimizer {
public:
    Optimizer(OptimizerConfig config, TaskSpec task_spec, DatasetSplit split,
              Gateway& gateway, const TemplateRegistry& templates);

    /// Planned horizon: epochs * ceil(|train| / batch_size).
    int max_steps() const;

    /// Seeds the trajectory with the initial prompt's validation score.
    RunState init_state(const std::string& initial_prompt, unsigned long seed) const;

    /// One optimization step: minibatch -> (reflection) -> candidates ->
    /// batch scoring -> selection -> validation scoring -> trajectory append.
    StepRecord step(RunState& state);

    /// Full loop with plateau / max-step stopping and one final test eval.
    RunResult run(const std::string& initial_prompt, unsigned long seed,
                  const std::function<void(const RunState&, const StepRecord&)>& on_step = {});

    /// Continue a restored state to completion.
    RunResult resume(RunState& state,
                     const std::function<void(const RunState&, const StepRecord&)>& on_step = {});

    /// Minibatch for step t: sequential batches over a seed-shuffled train
    /// split, reshuffled each epoch.
    std::vector<TaskExample> minibatch_for_step(int t, unsigned long seed) const;

    const OptimizerConfig& config() const { return config_; }

private:
    std::vector<std::string> generate_candidates(RunState& state,
                                                 const std::vector<TaskExample>& batch);
    std::string request_one_candidate(const std::string& meta_prompt, RunState& state);

    OptimizerConfig config_;
    TaskSpec task_spec_;
    DatasetSplit split_;
    Gateway& gateway_;
    const TemplateRegistry& templates_;
    int plateau_patience_ = 1;
};

}  // namespace promptopt

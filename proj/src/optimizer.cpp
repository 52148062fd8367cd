#include "promptopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "promptopt/errors.hpp"

namespace promptopt {

Direction direction_from_string(const std::string& s) {
    if (s == "P") return Direction::P;
    if (s == "P+M") return Direction::PM;
    if (s == "P+R") return Direction::PR;
    if (s == "P+M+R") return Direction::PMR;
    throw ConfigError("unknown direction: " + s);
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::P: return "P";
        case Direction::PM: return "P+M";
        case Direction::PR: return "P+R";
        case Direction::PMR: return "P+M+R";
    }
    return "P";
}

MomentumKind momentum_from_string(const std::string& s) {
    if (s == "none") return MomentumKind::none;
    if (s == "summarization") return MomentumKind::summarization;
    if (s == "recency") return MomentumKind::recency;
    if (s == "relevance") return MomentumKind::relevance;
    if (s == "importance") return MomentumKind::importance;
    throw ConfigError("unknown momentum kind: " + s);
}

std::string to_string(MomentumKind m) {
    switch (m) {
        case MomentumKind::none: return "none";
        case MomentumKind::summarization: return "summarization";
        case MomentumKind::recency: return "recency";
        case MomentumKind::relevance: return "relevance";
        case MomentumKind::importance: return "importance";
    }
    return "none";
}

RefinementKind refinement_from_string(const std::string& s) {
    if (s == "editing") return RefinementKind::editing;
    if (s == "generation") return RefinementKind::generation;
    throw ConfigError("unknown refinement kind: " + s);
}

std::string to_string(RefinementKind r) {
    return r == RefinementKind::editing ? "editing" : "generation";
}

OptimizerConfig make_baseline(const std::string& name) {
    OptimizerConfig config;
    config.method_name = name;
    if (name == "GPO") {
        config.direction = Direction::PM;
        config.momentum = MomentumKind::relevance;
        config.schedule.kind = ScheduleKind::cosine_decay;
        config.refinement = RefinementKind::generation;
        config.update_template = TemplateId::gpo_update;
    } else if (name == "OPRO") {
        config.direction = Direction::PM;
        config.momentum = MomentumKind::recency;
        config.schedule.kind = ScheduleKind::none;
        config.refinement = RefinementKind::generation;
        config.update_template = TemplateId::opro_update;
    } else if (name == "PE2") {
        config.direction = Direction::PMR;
        config.momentum = MomentumKind::recency;
        config.schedule.kind = ScheduleKind::fixed;
        config.refinement = RefinementKind::generation;
        config.update_template = TemplateId::pe2_update;
        config.gradient_template = TemplateId::pe2_gradient;
    } else if (name == "APO") {
        config.direction = Direction::PR;
        config.momentum = MomentumKind::none;
        config.schedule.kind = ScheduleKind::none;
        config.refinement = RefinementKind::editing;
        config.update_template = TemplateId::apo_update;
        config.gradient_template = TemplateId::apo_gradient;
    } else if (name == "APE") {
        config.direction = Direction::P;
        config.momentum = MomentumKind::none;
        config.schedule.kind = ScheduleKind::none;
        config.refinement = RefinementKind::generation;
        config.update_template = TemplateId::ape_update;
    } else if (name == "SGDM") {
        config.direction = Direction::PMR;
        config.momentum = MomentumKind::summarization;
        config.schedule.kind = ScheduleKind::none;
        config.refinement = RefinementKind::editing;
        config.update_template = TemplateId::sgdm_update;
        config.gradient_template = TemplateId::sgdm_gradient;
        config.momentum_template = TemplateId::sgdm_momentum;
    } else {
        throw UnknownBaseline("unknown baseline: " + name);
    }
    return config;
}

ScoredPrompt select_best(const std::vector<std::string>& candidates,
                         const std::vector<Score>& scores) {
    if (candidates.size() != scores.size()) {
        throw LengthMismatch("candidates and scores differ in length");
    }
    if (candidates.empty()) {
        throw LengthMismatch("no candidates to select from");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (scores[i].value > scores[best].value) best = i;
    }
    return {candidates[best], scores[best]};
}

Optimizer::Optimizer(OptimizerConfig config, TaskSpec task_spec, DatasetSplit split,
                     Gateway& gateway, const TemplateRegistry& templates)
    : config_(std::move(config)),
      task_spec_(std::move(task_spec)),
      split_(std::move(split)),
      gateway_(gateway),
      templates_(templates) {
    if (split_.train.empty() || split_.valid.empty()) {
        throw ConfigError("train and validation splits must be nonempty");
    }
    const int steps_per_epoch = static_cast<int>(
        (split_.train.size() + config_.batch_size - 1) / config_.batch_size);
    plateau_patience_ =
        config_.plateau_patience > 0 ? config_.plateau_patience : steps_per_epoch;
    if (config_.schedule.kind != ScheduleKind::none && config_.schedule.horizon <= 1) {
        config_.schedule.horizon = max_steps();
    }
}

int Optimizer::max_steps() const {
    const int steps_per_epoch = static_cast<int>(
        (split_.train.size() + config_.batch_size - 1) / config_.batch_size);
    return config_.epochs * steps_per_epoch;
}

std::vector<TaskExample> Optimizer::minibatch_for_step(int t, unsigned long seed) const {
    const int steps_per_epoch = static_cast<int>(
        (split_.train.size() + config_.batch_size - 1) / config_.batch_size);
    const int epoch = t / steps_per_epoch;
    const int index_in_epoch = t % steps_per_epoch;

    std::vector<std::size_t> order(split_.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed + 1000003UL * static_cast<unsigned long>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t begin = static_cast<std::size_t>(index_in_epoch) * config_.batch_size;
    const std::size_t end = std::min(begin + config_.batch_size, split_.train.size());
    std::vector<TaskExample> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(split_.train[order[i]]);
    }
    return batch;
}

RunState Optimizer::init_state(const std::string& initial_prompt, unsigned long seed) const {
    RunState state;
    state.seed = seed;
    const EvalResult initial =
        evaluate_prompt(initial_prompt, split_.valid, task_spec_, gateway_, "task-eval");
    state.best = {initial_prompt, initial.score};
    state.trajectory.append({0, initial_prompt, initial.score, std::nullopt});
    return state;
}

std::string Optimizer::request_one_candidate(const std::string& meta_prompt, RunState& state) {
    ChatRequest request;
    request.model_id = config_.optimizer_model_id;
    request.user_text = meta_prompt;
    request.temperature = config_.optimizer_temperature;
    request.max_output_tokens = config_.optimizer_max_output_tokens;
    request.request_tag = "candidate-gen";

    std::string last_text;
    for (int attempt = 0; attempt <= config_.extraction_retries; ++attempt) {
        const ChatResponse response = gateway_.complete(request);
        last_text = response.text;
        try {
            return extract_marked(response.text);
        } catch (const MarkerNotFound&) {
            // retry generation
        }
    }
    ++state.extraction_fallbacks;
    return trim(last_text);
}

std::vector<std::string> Optimizer::generate_candidates(RunState& state,
                                                        const std::vector<TaskExample>& batch) {
    const int t = state.step;
    const std::string& current = state.trajectory.back().prompt;
    const Score current_score = state.trajectory.back().score;

    // Reflection first when the direction includes R.
    std::optional<std::string> problems;
    const bool wants_reflection =
        config_.direction == Direction::PR || config_.direction == Direction::PMR;
    if (wants_reflection) {
        const EvalResult current_eval =
            evaluate_prompt(current, batch, task_spec_, gateway_, "task-eval");
        const auto demos = collect_errors(current_eval.records, task_spec_);
        if (demos.empty()) {
            ++state.reflection_skips;
        } else {
            const TemplateId gradient_id =
                config_.gradient_template.value_or(TemplateId::apo_gradient);
            const auto gradient = templates_.render_gradient(gradient_id, current, demos);
            ChatRequest request;
            request.model_id = config_.optimizer_model_id;
            request.user_text = gradient.text;
            request.temperature = config_.optimizer_temperature;
            request.max_output_tokens = config_.optimizer_max_output_tokens;
            request.request_tag = "reflection";
            const ChatResponse response = gateway_.complete(request);
            try {
                problems = extract_marked(response.text);
            } catch (const MarkerNotFound&) {
                ++state.extraction_fallbacks;
                problems = trim(response.text);
            }
        }
    }

    // Summarization momentum folds the new reflection into the running summary
    // and feeds it to the update template as the problems text.
    if (config_.momentum == MomentumKind::summarization && problems) {
        state.momentum_summary = summarize_momentum(
            state.momentum_summary, *problems, t, gateway_, config_.optimizer_model_id,
            config_.optimizer_temperature, config_.optimizer_max_output_tokens, templates_);
        problems = state.momentum_summary->text;
    }

    // Retrieval-based trajectory block.
    std::string trajectory_block;
    switch (config_.momentum) {
        case MomentumKind::recency:
            trajectory_block =
                format_trajectory_block(state.trajectory.retrieve_recency(config_.trajectory_k));
            break;
        case MomentumKind::relevance:
            trajectory_block = format_trajectory_block(state.trajectory.retrieve_relevance(
                config_.trajectory_k, current, config_.similarity));
            break;
        case MomentumKind::importance:
            trajectory_block = format_trajectory_block(
                state.trajectory.retrieve_importance(config_.trajectory_k));
            break;
        case MomentumKind::none:
        case MomentumKind::summarization:
            break;
    }

    // Task examples shown in the meta-prompt: a deterministic per-step sample.
    std::vector<TaskExample> meta_examples;
    {
        std::vector<std::size_t> order(split_.train.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(state.seed + 7919UL * static_cast<unsigned long>(t) + 17UL);
        std::shuffle(order.begin(), order.end(), rng);
        const int count = std::min<int>(config_.task_examples_in_meta,
                                        static_cast<int>(split_.train.size()));
        for (int i = 0; i < count; ++i) meta_examples.push_back(split_.train[order[i]]);
    }
    const std::string examples_block = format_task_examples(
        meta_examples, task_spec_.prompt_position, static_cast<int>(meta_examples.size()));

    std::optional<int> budget;
    if (config_.schedule.kind != ScheduleKind::none) {
        budget = constraint_at(config_.schedule, std::min(t, config_.schedule.horizon - 1));
    }

    // When reflection was requested but produced nothing, fall back to the
    // plain update template for this step.
    TemplateId update_id = config_.update_template;
    if (wants_reflection && !problems) {
        update_id = config_.refinement == RefinementKind::editing ? TemplateId::editing_update
                                                                  : TemplateId::generation_update;
        budget.reset();
    }

    const auto rendered = templates_.render_update(
        update_id, current, current_score, trajectory_block, examples_block, problems, budget,
        position_description(task_spec_.prompt_position));

    std::vector<std::string> candidates;
    candidates.reserve(config_.candidates_per_step);
    for (int i = 0; i < config_.candidates_per_step; ++i) {
        std::string candidate = request_one_candidate(rendered.text, state);
        if (config_.hard_edit_constraint && budget) {
            // Resample a bounded number of times, then accept the last one.
            for (int retry = 0; retry < config_.extraction_retries &&
                                word_edit_distance(current, candidate) > *budget;
                 ++retry) {
                candidate = request_one_candidate(rendered.text, state);
            }
        }
        candidates.push_back(std::move(candidate));
    }
    return candidates;
}

StepRecord Optimizer::step(RunState& state) {
    if (state.stop_reason) {
        throw ConfigError("step() called on a stopped run");
    }
    const int t = state.step;
    const auto batch = minibatch_for_step(t, state.seed);
    if (batch.empty()) {
        throw EmptyBatch("empty minibatch at step " + std::to_string(t));
    }

    const auto candidates = generate_candidates(state, batch);

    std::vector<Score> batch_scores;
    batch_scores.reserve(candidates.size());
    for (const auto& candidate : candidates) {
        batch_scores.push_back(
            evaluate_prompt(candidate, batch, task_spec_, gateway_, "task-eval").score);
    }

    const ScoredPrompt selected = select_best(candidates, batch_scores);

    const EvalResult validation =
        evaluate_prompt(selected.prompt, split_.valid, task_spec_, gateway_, "task-eval");

    TrajectoryEntry entry;
    entry.step_index = t + 1;
    entry.prompt = selected.prompt;
    entry.score = validation.score;
    if (state.momentum_summary) {
        entry.problems_summary = state.momentum_summary->text;
    }
    state.trajectory.append(entry);

    if (validation.score.value > state.best.score.value) {
        state.best = {selected.prompt, validation.score};
        state.plateau_streak = 0;
    } else {
        ++state.plateau_streak;
    }
    state.step = t + 1;

    StepRecord record;
    record.step = t + 1;
    record.selected_prompt = selected.prompt;
    record.batch_score = selected.score.value;
    record.validation_score = validation.score.value;
    record.cumulative_dollars = gateway_.ledger().total_dollars();
    record.cumulative_tokens = gateway_.ledger().total_tokens();
    return record;
}

RunResult Optimizer::run(const std::string& initial_prompt, unsigned long seed,
                         const std::function<void(const RunState&, const StepRecord&)>& on_step) {
    RunState state = init_state(initial_prompt, seed);
    if (on_step) {
        StepRecord seed_record;
        seed_record.step = 0;
        seed_record.selected_prompt = initial_prompt;
        seed_record.validation_score = state.best.score.value;
        seed_record.cumulative_dollars = gateway_.ledger().total_dollars();
        seed_record.cumulative_tokens = gateway_.ledger().total_tokens();
        on_step(state, seed_record);
    }
    return resume(state, on_step);
}

RunResult Optimizer::resume(RunState& state,
                            const std::function<void(const RunState&, const StepRecord&)>& on_step) {
    RunResult result;
    const int total = max_steps();
    while (!state.stop_reason) {
        if (state.step >= total) {
            state.stop_reason = "max_steps";
            break;
        }
        if (state.plateau_streak >= plateau_patience_) {
            state.stop_reason = "plateau";
            break;
        }
        StepRecord record;
        try {
            record = step(state);
        } catch (const BudgetExceeded&) {
            state.stop_reason = "budget";
            break;
        }
        result.step_records.push_back(record);
        if (on_step) on_step(state, record);
        if (state.plateau_streak >= plateau_patience_) {
            state.stop_reason = "plateau";
            break;
        }
    }

    result.best = state.best;
    result.trajectory = state.trajectory;
    result.stop_reason = *state.stop_reason;
    result.steps_taken = state.step;
    if (state.stop_reason != "budget" && !split_.test.empty()) {
        result.test_score =
            evaluate_prompt(state.best.prompt, split_.test, task_spec_, gateway_, "task-eval")
                .score.value;
    }
    return result;
}

}  // namespace promptopt

// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single pass/fail line. Exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "promptopt/errors.hpp"
#include "promptopt/metaprompt.hpp"
#include "promptopt/optimizer.hpp"
#include "promptopt/runner.hpp"
#include "promptopt/schedule.hpp"
#include "test_util.hpp"

using namespace promptopt;
using namespace promptopt::testing;

namespace {

int failures = 0;

void expect(bool condition, const std::string& detail) {
    if (!condition) throw std::runtime_error(detail);
}

void criterion(int number, const std::string& name, const std::function<void()>& body) {
    try {
        body();
        std::cout << "PASS  criterion " << number << ": " << name << "\n";
    } catch (const std::exception& e) {
        std::cout << "FAIL  criterion " << number << ": " << name << " — " << e.what() << "\n";
        ++failures;
    }
}

// ---------------------------------------------------------------------------
// 1. Edit-budget schedule endpoints, monotonicity, warmup.

void check_schedule() {
    for (const auto kind : {ScheduleKind::linear_decay, ScheduleKind::cosine_decay}) {
        for (const int c_max : {10, 50, 200}) {
            for (const int T : {6, 60, 600}) {
                EditBudgetSchedule schedule;
                schedule.kind = kind;
                schedule.c_max = c_max;
                schedule.floor_fraction = 0.2;
                schedule.horizon = T;

                const std::string where = to_string(kind) + " c_max=" + std::to_string(c_max) +
                                          " T=" + std::to_string(T);

                std::vector<int> values;
                for (int t = 0; t < T; ++t) values.push_back(*constraint_at(schedule, t));

                expect(values.front() == c_max, where + ": start != c_max");
                const int floor_value = static_cast<int>(std::llround(0.2 * c_max));
                expect(values.back() == floor_value, where + ": end != round(0.2*c_max)");
                for (int t = 0; t + 1 < T; ++t) {
                    expect(values[t] >= values[t + 1], where + ": not nonincreasing at t=" +
                                                           std::to_string(t));
                }
                for (int v : values) expect(v >= 1, where + ": budget below 1");

                schedule.warmup = true;
                schedule.warmup_fraction = 0.05;
                const int W = std::max(1, static_cast<int>(std::ceil(0.05 * T)));
                std::vector<int> warm;
                for (int t = 0; t < T; ++t) warm.push_back(*constraint_at(schedule, t));
                for (int t = 0; t + 1 < W; ++t) {
                    expect(warm[t] <= warm[t + 1],
                           where + ": warmup not nondecreasing at t=" + std::to_string(t));
                }
                for (int v : warm) expect(v >= 1, where + ": warmup budget below 1");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2. Template renders match the golden transcriptions byte for byte.

std::string read_file(const std::string& path) {
    std::ifstream file(path);
    expect(static_cast<bool>(file), "cannot open " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

RenderedMetaPrompt render_canonical(TemplateId id) {
    const std::string current_prompt = "Let's think step by step.";
    const Score current_score{43.75, 16};
    const std::vector<TrajectoryEntry> trajectory = {
        {0, "Let's think step by step.", {31.25, 16}, std::nullopt},
        {1, "Plan your steps carefully.", {43.75, 16}, std::nullopt},
    };
    const std::vector<TaskExample> examples = {
        {"e1", "What is 2 + 2?", "4"},
        {"e2", "Is the sky blue on a clear day?", "yes"},
        {"e3", "Sort the words: pear apple", "apple pear"},
    };
    const std::vector<ErrorDemo> demos = {
        {"What is 2 + 2?", "5", "4"},
        {"Is the sky blue on a clear day?", "no", "yes"},
    };
    const std::string trajectory_block = format_trajectory_block(trajectory);
    const std::string examples_block =
        format_task_examples(examples, PromptPosition::after_question);
    const std::string position = "at the end of the question";
    const std::string problems = "The prompt ignores multi-step arithmetic.";
    const auto& reg = templates();

    switch (id) {
        case TemplateId::pp_block:
            return reg.render(id, {{"current prompt", current_prompt},
                                   {"current prompt score", "44"}});
        case TemplateId::ppr_block:
        case TemplateId::apo_gradient:
        case TemplateId::pe2_gradient:
        case TemplateId::sgdm_gradient:
            return reg.render_gradient(id, current_prompt, demos);
        case TemplateId::summarization_block:
        case TemplateId::sgdm_momentum:
            return reg.render(
                id, {{"previous problems", "Earlier prompts overlooked output formatting."},
                     {"current problem", "The current prompt skips unit conversions."}});
        case TemplateId::retrieval_block:
            return reg.render(id, {{"previous prompts", trajectory_block}});
        case TemplateId::apo_update:
        case TemplateId::sgdm_update:
            return reg.render_update(id, current_prompt, current_score, "", examples_block,
                                     problems, std::nullopt, position);
        case TemplateId::pe2_update:
            return reg.render_update(id, current_prompt, current_score, trajectory_block,
                                     examples_block, problems, 10, position);
        case TemplateId::gpo_update:
            return reg.render_update(id, current_prompt, current_score, trajectory_block,
                                     examples_block, std::nullopt, 10, position);
        case TemplateId::opro_update:
            return reg.render_update(id, current_prompt, current_score, trajectory_block,
                                     examples_block, std::nullopt, std::nullopt, position);
        case TemplateId::ape_update:
        case TemplateId::editing_update:
        case TemplateId::generation_update:
            return reg.render_update(id, current_prompt, current_score, "", examples_block,
                                     std::nullopt, std::nullopt, position);
    }
    throw std::runtime_error("unhandled template id");
}

void check_template_goldens() {
    for (const auto id : all_template_ids()) {
        const auto rendered = render_canonical(id);
        const auto golden =
            read_file(std::string(PROMPTOPT_GOLDEN_DIR) + "/" + to_string(id) + ".golden");
        expect(rendered.text == golden, to_string(id) + " differs from its golden");
    }
    const auto gpo = render_canonical(TemplateId::gpo_update);
    expect(gpo.text.find("You are allowed to change up to 10 words") != std::string::npos,
           "gpo_update is missing the word-budget sentence");
    const auto opro = render_canonical(TemplateId::opro_update);
    expect(opro.text.find("You are allowed to change up to") == std::string::npos,
           "opro_update unexpectedly contains a word-budget sentence");
    expect(templates().body(TemplateId::opro_update).find("modified word number") ==
               std::string::npos,
           "opro_update template body has a budget placeholder");
}

// ---------------------------------------------------------------------------
// 3. Retrieval strategies vs brute-force oracles on random stores.

std::string random_text(std::mt19937& rng) {
    static const std::vector<std::string> words = {"think",  "step",   "plan",     "solve",
                                                   "answer", "reason", "careful",  "check",
                                                   "units",  "format", "question", "first"};
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += words[pick(rng)];
    }
    return out;
}

void check_retrieval() {
    SimilarityProvider lexical;
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> size_dist(0, 50);
    std::uniform_int_distribution<int> score_dist(0, 100);
    std::uniform_int_distribution<int> k_dist(1, 12);

    for (int trial = 0; trial < 1000; ++trial) {
        const int n = size_dist(rng);
        TrajectoryStore store;
        for (int i = 0; i < n; ++i) {
            store.append({i, random_text(rng), {static_cast<double>(score_dist(rng)), 8},
                          std::nullopt});
        }
        const int k = k_dist(rng);
        const std::string query = random_text(rng);
        const std::size_t take = std::min<std::size_t>(k, n);
        const std::string where = "trial " + std::to_string(trial);

        // Recency oracle: the chronological suffix.
        const auto recent = store.retrieve_recency(k);
        expect(recent.size() == take, where + ": recency size");
        for (std::size_t i = 0; i < take; ++i) {
            expect(recent[i].step_index ==
                       n - static_cast<int>(take) + static_cast<int>(i),
                   where + ": recency order");
        }

        // Importance oracle: top-k by (score desc, step asc), reported
        // ascending by (score asc, step asc).
        {
            std::vector<int> order(n);
            for (int i = 0; i < n; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                const double sa = store.entries()[a].score.value;
                const double sb = store.entries()[b].score.value;
                if (sa != sb) return sa > sb;
                return a < b;
            });
            std::vector<int> selected(order.begin(), order.begin() + take);
            std::stable_sort(selected.begin(), selected.end(), [&](int a, int b) {
                const double sa = store.entries()[a].score.value;
                const double sb = store.entries()[b].score.value;
                if (sa != sb) return sa < sb;
                return a < b;
            });
            const auto got = store.retrieve_importance(k);
            expect(got.size() == take, where + ": importance size");
            for (std::size_t i = 0; i < take; ++i) {
                expect(got[i].step_index == selected[i], where + ": importance oracle mismatch");
            }
        }

        // Relevance oracle: top-k by (similarity desc, step asc), reported
        // ascending by (similarity asc, step asc) — most similar last.
        {
            std::vector<double> sims(n);
            for (int i = 0; i < n; ++i) {
                sims[i] = similarity(store.entries()[i].prompt, query, lexical);
            }
            std::vector<int> order(n);
            for (int i = 0; i < n; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                if (sims[a] != sims[b]) return sims[a] > sims[b];
                return a < b;
            });
            std::vector<int> selected(order.begin(), order.begin() + take);
            std::stable_sort(selected.begin(), selected.end(), [&](int a, int b) {
                if (sims[a] != sims[b]) return sims[a] < sims[b];
                return a < b;
            });
            const auto got = store.retrieve_relevance(k, query, lexical);
            expect(got.size() == take, where + ": relevance size");
            for (std::size_t i = 0; i < take; ++i) {
                expect(got[i].step_index == selected[i], where + ": relevance oracle mismatch");
                if (i > 0) {
                    expect(sims[got[i - 1].step_index] <= sims[got[i].step_index] + 1e-12,
                           where + ": relevance not ascending");
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 4. Text metrics vs exhaustive / DP oracles.

bool is_subsequence(const std::vector<int>& needle, const std::vector<int>& haystack) {
    std::size_t i = 0;
    for (int x : haystack) {
        if (i < needle.size() && needle[i] == x) ++i;
    }
    return i == needle.size();
}

int lcs_by_enumeration(const std::vector<int>& a, const std::vector<int>& b) {
    int best = 0;
    for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
        std::vector<int> sub;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (mask & (1u << i)) sub.push_back(a[i]);
        }
        if (static_cast<int>(sub.size()) > best && is_subsequence(sub, b)) {
            best = static_cast<int>(sub.size());
        }
    }
    return best;
}

int edit_distance_full_table(const std::vector<std::string>& a,
                             const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
    }
    return d[n][m];
}

void check_metrics() {
    // rouge_l against the subsequence-enumeration oracle: all token-sequence
    // pairs with lengths <= 6 over a 3-symbol alphabet.
    static const char* symbols[] = {"aa", "bb", "cc"};
    std::vector<std::vector<int>> sequences = {{}};
    {
        std::vector<std::vector<int>> frontier = {{}};
        for (int len = 1; len <= 6; ++len) {
            std::vector<std::vector<int>> next;
            for (const auto& seq : frontier) {
                for (int s = 0; s < 3; ++s) {
                    auto extended = seq;
                    extended.push_back(s);
                    next.push_back(extended);
                }
            }
            sequences.insert(sequences.end(), next.begin(), next.end());
            frontier = std::move(next);
        }
    }
    std::vector<std::string> rendered;
    rendered.reserve(sequences.size());
    for (const auto& seq : sequences) {
        std::string s;
        for (int t : seq) {
            if (!s.empty()) s += ' ';
            s += symbols[t];
        }
        rendered.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        for (std::size_t j = 0; j < sequences.size(); ++j) {
            const auto& a = sequences[i];
            const auto& b = sequences[j];
            double oracle = 0.0;
            if (!a.empty() && !b.empty()) {
                const double lcs = lcs_by_enumeration(a, b);
                if (lcs > 0.0) {
                    const double p = lcs / a.size();
                    const double r = lcs / b.size();
                    oracle = 2.0 * p * r / (p + r);
                }
            }
            const double got = rouge_l(rendered[i], rendered[j]);
            expect(std::abs(got - oracle) <= 1e-12,
                   "rouge_l mismatch on \"" + rendered[i] + "\" vs \"" + rendered[j] + "\"");
        }
    }

    // word_edit_distance against a full-table DP oracle on 1000 random pairs,
    // plus the metric axioms.
    std::mt19937 rng(987654);
    std::uniform_int_distribution<int> len(0, 12);
    std::uniform_int_distribution<int> word(0, 5);
    auto random_tokens = [&] {
        std::vector<std::string> tokens;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) tokens.push_back("w" + std::to_string(word(rng)));
        return tokens;
    };
    auto join = [](const std::vector<std::string>& tokens) {
        std::string s;
        for (const auto& t : tokens) {
            if (!s.empty()) s += ' ';
            s += t;
        }
        return s;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        const auto ta = random_tokens();
        const auto tb = random_tokens();
        const auto tc = random_tokens();
        const std::string a = join(ta), b = join(tb), c = join(tc);
        const int ab = word_edit_distance(a, b);
        expect(ab == edit_distance_full_table(ta, tb), "edit distance oracle mismatch");
        expect(word_edit_distance(a, a) == 0, "edit distance identity violated");
        expect(ab == word_edit_distance(b, a), "edit distance symmetry violated");
        expect(ab <= word_edit_distance(a, c) + word_edit_distance(c, b),
               "edit distance triangle inequality violated");
        expect(ab >= 0, "edit distance negative");
    }
}

// ---------------------------------------------------------------------------
// Shared loop fixture for criteria 5, 8 and 9: 16/16/48 synthetic examples,
// batch 8 x 3 epochs = 6 steps, 8 candidates per step where candidate k
// scores k/8 on the batch and the winner's validation score rises each step.

LoopFixture loop_fixture() {
    LoopFixture fixture;
    fixture.steps = 6;
    fixture.valid_size = 16;
    fixture.initial_val_ok = 8;
    fixture.val_ok = {9, 10, 11, 12, 13, 14};
    return fixture;
}

std::string trajectory_bytes(const TrajectoryStore& store) {
    std::string out;
    for (const auto& entry : store.entries()) {
        out += trajectory_entry_to_json_line(entry);
        out += '\n';
    }
    return out;
}

struct FixtureRun {
    RunResult result;
    MockRun mock_run;
};

FixtureRun run_loop_fixture(const LoopFixture& fixture,
                            const std::map<std::string, ModelPricing>& pricing = {}) {
    FixtureRun out{RunResult{}, make_mock_run(fixture.rules())};
    for (const auto& [model, rates] : pricing) {
        out.mock_run.gateway->ledger().set_pricing(model, rates);
    }
    Optimizer optimizer(gpo_fixture_config(), out.mock_run.task, make_split(16, 16, 48),
                        *out.mock_run.gateway, templates());
    out.result = optimizer.run(fixture.initial_prompt, 7);
    return out;
}

// ---------------------------------------------------------------------------
// 5. Deterministic loop reproduction under the scripted backend.

void check_loop_reproduction() {
    const auto fixture = loop_fixture();
    auto first = run_loop_fixture(fixture);
    auto second = run_loop_fixture(fixture);

    expect(first.result.steps_taken == 6, "expected 6 steps, got " +
                                              std::to_string(first.result.steps_taken));
    expect(first.result.stop_reason == "max_steps",
           "unexpected stop reason: " + first.result.stop_reason);
    expect(trajectory_bytes(first.result.trajectory) ==
               trajectory_bytes(second.result.trajectory),
           "two identical runs produced different trajectory logs");

    // Selection: the highest-scoring candidate (k=7) wins every step; on ties
    // the lowest index would win, which the k-graded fixture never triggers,
    // so equal-score selection is asserted directly here.
    for (int t = 0; t < 6; ++t) {
        expect(first.result.trajectory.entries()[t + 1].prompt == fixture.winner(t),
               "step " + std::to_string(t) + " selected a non-argmax candidate");
    }
    const auto tied = select_best({"first", "second"}, {{50.0, 8}, {50.0, 8}});
    expect(tied.prompt == "first", "tie did not go to the lowest index");

    // Call accounting from the raw log: 16 initial validation task calls,
    // then per step exactly 8 optimizer calls followed by 8x8 batch + 16
    // validation task calls, then 48 test calls.
    const auto log = first.mock_run.mock->call_log();
    std::size_t i = 0;
    auto count_tag = [&](const std::string& tag, std::size_t limit) {
        std::size_t n = 0;
        while (i < log.size() && n < limit && log[i].request_tag == tag) {
            ++i;
            ++n;
        }
        return n;
    };
    expect(count_tag("task-eval", 16) == 16, "initial validation call count");
    for (int t = 0; t < 6; ++t) {
        expect(count_tag("candidate-gen", 8) == 8,
               "step " + std::to_string(t) + ": optimizer call count");
        expect(count_tag("task-eval", 80) == 80,
               "step " + std::to_string(t) + ": task call count");
    }
    expect(count_tag("task-eval", 48) == 48, "test evaluation call count");
    expect(i == log.size(), "unexpected extra calls in the log");
}

// ---------------------------------------------------------------------------
// 6. Plateau stopping.

void check_plateau() {
    LoopFixture fixture;
    fixture.steps = 6;
    fixture.valid_size = 10;
    fixture.initial_val_ok = 5;               // 50
    fixture.val_ok = {6, 6, 6, 6, 6, 6};      // 60, 60, 60, ...
    auto run = make_mock_run(fixture.rules());
    auto config = gpo_fixture_config();
    config.plateau_patience = 2;
    Optimizer optimizer(config, run.task, make_split(16, 10, 48), *run.gateway, templates());
    const auto result = optimizer.run(fixture.initial_prompt, 7);

    expect(result.stop_reason == "plateau", "stop reason was " + result.stop_reason);
    expect(result.steps_taken == 3,
           "stopped after " + std::to_string(result.steps_taken) + " steps, expected 3");
    const std::vector<double> expected_scores = {50, 60, 60, 60};
    expect(result.trajectory.size() == 4, "trajectory length");
    for (std::size_t i = 0; i < 4; ++i) {
        expect(std::abs(result.trajectory.entries()[i].score.value - expected_scores[i]) < 1e-9,
               "validation score sequence mismatch at entry " + std::to_string(i));
    }
}

// ---------------------------------------------------------------------------
// 7. Baseline factory tuples and end-to-end runs for all six methods.

void check_baselines() {
    struct Expected {
        std::string name;
        Direction direction;
        MomentumKind momentum;
        ScheduleKind schedule;
        RefinementKind refinement;
    };
    const std::vector<Expected> table = {
        {"APE", Direction::P, MomentumKind::none, ScheduleKind::none,
         RefinementKind::generation},
        {"APO", Direction::PR, MomentumKind::none, ScheduleKind::none, RefinementKind::editing},
        {"OPRO", Direction::PM, MomentumKind::recency, ScheduleKind::none,
         RefinementKind::generation},
        {"PE2", Direction::PMR, MomentumKind::recency, ScheduleKind::fixed,
         RefinementKind::generation},
        {"SGDM", Direction::PMR, MomentumKind::summarization, ScheduleKind::none,
         RefinementKind::editing},
        {"GPO", Direction::PM, MomentumKind::relevance, ScheduleKind::cosine_decay,
         RefinementKind::generation},
    };
    for (const auto& row : table) {
        const auto config = make_baseline(row.name);
        expect(config.direction == row.direction, row.name + ": direction");
        expect(config.momentum == row.momentum, row.name + ": momentum");
        expect(config.schedule.kind == row.schedule, row.name + ": schedule");
        expect(config.refinement == row.refinement, row.name + ": refinement");
    }
    bool threw = false;
    try {
        make_baseline("NOPE");
    } catch (const UnknownBaseline&) {
        threw = true;
    }
    expect(threw, "unknown baseline name was accepted");

    for (const auto& row : table) {
        auto config = make_baseline(row.name);
        config.optimizer_model_id = "optimizer-model";
        config.epochs = 1;
        config.schedule.c_max = 10;
        config.schedule.horizon = 2;
        auto run = make_mock_run({
            {"reflection", "", "START weak guidance END", false},
            {"momentum", "", "START recurring issues END", false},
            {"candidate-gen", "", "START improved prompt END", false},
        });
        Optimizer optimizer(config, run.task, make_split(16, 8, 8), *run.gateway, templates());
        const auto result = optimizer.run("initial prompt", 11);
        expect(result.steps_taken >= 1, row.name + ": no steps taken");
        expect(!result.best.prompt.empty(), row.name + ": empty best prompt");
    }
}

// ---------------------------------------------------------------------------
// 8. Resume equivalence after interruption at every step boundary.

void check_resume() {
    const auto fixture = loop_fixture();
    const auto reference = run_loop_fixture(fixture);
    const auto expected_bytes = trajectory_bytes(reference.result.trajectory);

    for (int interrupt_after = 1; interrupt_after <= 5; ++interrupt_after) {
        auto first = make_mock_run(fixture.rules());
        Optimizer first_opt(gpo_fixture_config(), first.task, make_split(16, 16, 48),
                            *first.gateway, templates());
        RunState state = first_opt.init_state(fixture.initial_prompt, 7);
        for (int t = 0; t < interrupt_after; ++t) first_opt.step(state);

        auto second = make_mock_run(fixture.rules());
        Optimizer second_opt(gpo_fixture_config(), second.task, make_split(16, 16, 48),
                             *second.gateway, templates());
        const auto resumed = second_opt.resume(state);

        expect(trajectory_bytes(resumed.trajectory) == expected_bytes,
               "interruption after step " + std::to_string(interrupt_after) +
                   " changed the final trajectory log");
        expect(resumed.stop_reason == reference.result.stop_reason,
               "stop reason changed after resume");
        expect(resumed.best.prompt == reference.result.best.prompt,
               "best prompt changed after resume");
    }
}

// ---------------------------------------------------------------------------
// 9. Cost ledger vs an independently recomputed total.

void check_ledger() {
    const std::map<std::string, ModelPricing> pricing = {
        {"task-model", {0.5, 1.5}},
        {"optimizer-model", {2.0, 6.0}},
    };
    const auto fixture = loop_fixture();
    const auto run = run_loop_fixture(fixture, pricing);

    // Recompute the bill from the raw request/response texts with the
    // documented 4-characters-per-token estimate.
    double recomputed = 0.0;
    long recomputed_tokens = 0;
    for (const auto& call : run.mock_run.mock->calls()) {
        std::string prompt_side = call.request.user_text;
        if (call.request.system_text) prompt_side += *call.request.system_text;
        const long prompt_tokens =
            static_cast<long>((prompt_side.size() + 3) / 4);
        const long completion_tokens =
            static_cast<long>((call.response.text.size() + 3) / 4);
        const auto& rates = pricing.at(call.request.model_id);
        recomputed += prompt_tokens / 1000.0 * rates.prompt_per_1k +
                      completion_tokens / 1000.0 * rates.completion_per_1k;
        recomputed_tokens += prompt_tokens + completion_tokens;
    }
    const auto& ledger = run.mock_run.gateway->ledger();
    expect(std::abs(ledger.total_dollars() - recomputed) <= 1e-9,
           "ledger dollars differ from the recomputed total");
    expect(ledger.total_tokens() == recomputed_tokens,
           "ledger tokens differ from the recomputed total");
    expect(recomputed > 0.0, "fixture run billed nothing");

    // Cumulative token counts along the run never decrease.
    long previous = 0;
    for (const auto& record : run.result.step_records) {
        expect(record.cumulative_tokens >= previous, "cumulative tokens decreased");
        previous = record.cumulative_tokens;
    }
    expect(!run.result.step_records.empty(), "no step records");
}

}  // namespace

int main() {
    criterion(1, "edit-budget schedule endpoints, monotonicity and warmup", check_schedule);
    criterion(2, "meta-prompt templates match the goldens byte for byte", check_template_goldens);
    criterion(3, "trajectory retrieval matches brute-force oracles", check_retrieval);
    criterion(4, "text metrics match exhaustive and DP oracles", check_metrics);
    criterion(5, "scripted optimization loop reproduces deterministically",
              check_loop_reproduction);
    criterion(6, "plateau stopping after patience non-improving steps", check_plateau);
    criterion(7, "baseline factory presets and end-to-end runs", check_baselines);
    criterion(8, "resume after interruption matches the uninterrupted run", check_resume);
    criterion(9, "cost ledger matches an independently recomputed bill", check_ledger);

    if (failures > 0) {
        std::cout << failures << " criteria failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}

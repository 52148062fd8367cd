#include "promptopt/metaprompt.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "promptopt/errors.hpp"

#ifndef PROMPTOPT_TEMPLATE_DIR
#define PROMPTOPT_TEMPLATE_DIR "templates"
#endif

namespace promptopt {

namespace {

const std::map<std::string, TemplateId>& name_table() {
    static const std::map<std::string, TemplateId> table = {
        {"gpo_update", TemplateId::gpo_update},
        {"ape_update", TemplateId::ape_update},
        {"apo_gradient", TemplateId::apo_gradient},
        {"apo_update", TemplateId::apo_update},
        {"opro_update", TemplateId::opro_update},
        {"pe2_gradient", TemplateId::pe2_gradient},
        {"pe2_update", TemplateId::pe2_update},
        {"sgdm_gradient", TemplateId::sgdm_gradient},
        {"sgdm_momentum", TemplateId::sgdm_momentum},
        {"sgdm_update", TemplateId::sgdm_update},
        {"pp_block", TemplateId::pp_block},
        {"ppr_block", TemplateId::ppr_block},
        {"retrieval_block", TemplateId::retrieval_block},
        {"summarization_block", TemplateId::summarization_block},
        {"editing_update", TemplateId::editing_update},
        {"generation_update", TemplateId::generation_update},
    };
    return table;
}

const std::string kBudgetSentence =
    "You are allowed to change up to {modified word number} words in the current prompt.\n";

}  // namespace

TemplateId template_id_from_string(const std::string& s) {
    auto it = name_table().find(s);
    if (it == name_table().end()) {
        throw ConfigError("unknown template id: " + s);
    }
    return it->second;
}

std::string to_string(TemplateId id) {
    for (const auto& [name, candidate] : name_table()) {
        if (candidate == id) return name;
    }
    return "unknown";
}

std::vector<TemplateId> all_template_ids() {
    std::vector<TemplateId> ids;
    for (const auto& [name, id] : name_table()) ids.push_back(id);
    return ids;
}

std::string default_template_dir() { return PROMPTOPT_TEMPLATE_DIR; }

TemplateRegistry TemplateRegistry::load(const std::string& dir) {
    TemplateRegistry registry;
    for (const auto& [name, id] : name_table()) {
        const std::string path = dir + "/" + name + ".txt";
        std::ifstream file(path);
        if (!file) {
            throw ConfigError("missing template file: " + path);
        }
        std::ostringstream buffer;
        buffer << file.rdbuf();
        registry.bodies_[id] = buffer.str();
    }
    return registry;
}

const std::string& TemplateRegistry::body(TemplateId id) const {
    return bodies_.at(id);
}

std::vector<std::string> TemplateRegistry::placeholders_in(const std::string& body) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    std::size_t pos = 0;
    while ((pos = body.find('{', pos)) != std::string::npos) {
        const auto end = body.find('}', pos);
        if (end == std::string::npos) break;
        const std::string name = body.substr(pos + 1, end - pos - 1);
        if (seen.insert(name).second) names.push_back(name);
        pos = end + 1;
    }
    return names;
}

RenderedMetaPrompt TemplateRegistry::render(
    TemplateId id, const std::map<std::string, std::string>& bindings) const {
    const std::string& body = bodies_.at(id);
    const auto needed = placeholders_in(body);

    std::vector<std::string> missing;
    for (const auto& name : needed) {
        if (!bindings.count(name)) missing.push_back(name);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& name : missing) {
            if (!list.empty()) list += ", ";
            list += name;
        }
        throw MissingPlaceholder("unbound placeholders: " + list);
    }

    RenderedMetaPrompt rendered;
    rendered.template_id = id;
    std::string text = body;
    for (const auto& name : needed) {
        const std::string token = "{" + name + "}";
        const std::string& value = bindings.at(name);
        std::size_t pos = 0;
        while ((pos = text.find(token, pos)) != std::string::npos) {
            text.replace(pos, token.size(), value);
            pos += value.size();
        }
        rendered.bound_placeholders[name] = value;
    }
    rendered.text = std::move(text);
    return rendered;
}

RenderedMetaPrompt TemplateRegistry::render_update(
    TemplateId id, const std::string& current_prompt, const Score& current_score,
    const std::string& trajectory_block, const std::string& examples_block,
    const std::optional<std::string>& problems, const std::optional<int>& budget,
    const std::string& position_desc) const {
    std::string body = bodies_.at(id);

    // The word-budget sentence only appears in the schedule-bearing
    // templates; without an active schedule the sentence is dropped.
    if (!budget) {
        const auto pos = body.find(kBudgetSentence);
        if (pos != std::string::npos) {
            body.erase(pos, kBudgetSentence.size());
        }
    }

    std::map<std::string, std::string> bindings;
    bindings["current prompt"] = current_prompt;
    bindings["current prompt score"] = std::to_string(current_score.rounded());
    if (!trajectory_block.empty()) bindings["previous prompts"] = trajectory_block;
    if (!examples_block.empty()) bindings["task examples"] = examples_block;
    if (problems) bindings["problems"] = *problems;
    if (budget) bindings["modified word number"] = std::to_string(*budget);
    bindings["prompt position description"] = position_desc;

    // Render against the possibly-stripped body.
    TemplateRegistry scratch;
    scratch.bodies_[id] = body;
    return scratch.render(id, bindings);
}

RenderedMetaPrompt TemplateRegistry::render_gradient(
    TemplateId id, const std::string& current_prompt,
    const std::vector<ErrorDemo>& error_demos) const {
    if (error_demos.empty()) {
        throw EmptyErrorDemos("no wrong examples to reflect on");
    }
    std::map<std::string, std::string> bindings;
    bindings["current prompt"] = current_prompt;
    bindings["error demonstrations"] = format_error_demos(error_demos);
    return render(id, bindings);
}

std::string format_trajectory_block(const std::vector<TrajectoryEntry>& entries) {
    std::string out;
    for (const auto& entry : entries) {
        if (!out.empty()) out += "\n\n";
        out += "Prompt: " + entry.prompt + "\nScore: " + std::to_string(entry.score.rounded());
    }
    return out;
}

std::string format_task_examples(const std::vector<TaskExample>& examples,
                                 PromptPosition position, int expected_count) {
    if (static_cast<int>(examples.size()) != expected_count) {
        throw ExampleCountMismatch("expected " + std::to_string(expected_count) +
                                   " task examples, got " + std::to_string(examples.size()));
    }
    std::string out;
    for (const auto& example : examples) {
        if (!out.empty()) out += "\n\n";
        std::string input = position == PromptPosition::before_question
                                ? "<Prompt>\n" + example.question
                                : example.question + "\n<Prompt>";
        out += "Input: " + input + "\nOutput: " + example.gold_answer;
    }
    return out;
}

std::string format_error_demos(const std::vector<ErrorDemo>& demos) {
    std::string out;
    for (const auto& demo : demos) {
        if (!out.empty()) out += "\n\n";
        out += "Question: " + demo.question + "\nWrong prediction: " + demo.wrong_prediction +
               "\nGround truth answer: " + demo.gold_answer;
    }
    return out;
}

std::string position_description(PromptPosition position) {
    return position == PromptPosition::before_question ? "at the beginning of the question"
                                                       : "at the end of the question";
}

}  // namespace promptopt
